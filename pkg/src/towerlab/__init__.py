"""Exact combinatorics of towers, comparison and almost finiteness on Cantor systems."""

import logging

logging.getLogger(__name__).addHandler(logging.NullHandler())

__version__ = "0.1.0"
