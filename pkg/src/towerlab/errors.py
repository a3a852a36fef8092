"""Exception hierarchy shared by all towerlab modules."""

import os


class TowerlabError(Exception):
    """Base class for every error raised by towerlab."""


class InvalidInput(TowerlabError, ValueError):
    """An argument violates a documented precondition."""


class Unsupported(TowerlabError):
    """The requested operation is not available for this group or system."""


class ResourceExhausted(TowerlabError):
    """A configured cap (cells, ball size, search nodes) was exceeded."""


class CapExceeded(ResourceExhausted):
    """A return time or similar search parameter ran past its cap."""


class WindowExceeded(InvalidInput):
    """A lamplighter element has a lamp outside the configured window."""


class InvarianceViolation(InvalidInput):
    """A set fails a (K, delta)-invariance precondition."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class AlgorithmIncomplete(TowerlabError, AssertionError):
    """An algorithm did not reach a guarantee it should reach under its preconditions."""


class LebesgueFailure(TowerlabError):
    """A tower collection fails the E-Lebesgue condition at some cell."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class InsufficientMargin(TowerlabError):
    """A certificate does not carry the margins needed for exactification."""


DEFAULT_CELL_CAP = 10**6


def cell_cap():
    """Maximum number of cells/elements any single enumeration may produce."""
    raw = os.environ.get("TOWERLAB_CELL_CAP")
    if raw is None:
        return DEFAULT_CELL_CAP
    try:
        value = int(raw)
    except ValueError:
        raise InvalidInput(f"TOWERLAB_CELL_CAP must be an integer, got {raw!r}") from None
    if value <= 0:
        raise InvalidInput("TOWERLAB_CELL_CAP must be positive")
    return value


def check_cap(count, what="cells"):
    cap = cell_cap()
    if count > cap:
        raise ResourceExhausted(f"{what}: {count} exceeds cap {cap} (set TOWERLAB_CELL_CAP)")
