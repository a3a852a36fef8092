"""Cantor systems with exact clopen algebra at finite resolution.

Every system exposes a family of *resolutions*, each partitioning ``X`` into
finitely many *cells*.  Resolutions are ordered by refinement and any two have
a common refinement (``join``).  Group elements map the cells of one resolution
bijectively onto the cells of another (``act_resolution`` / ``act_cell``); for
odometers the resolution is preserved, for the shift it moves the window.

Built-in systems:

* :class:`ProfiniteOdometer`: the inverse limit of ``G/N_k`` for a quotient
  ladder; resolution ``k`` has the cosets of ``N_k`` as cells.
* :class:`SubstitutionSubshift`: the two-sided subshift of a primitive
  substitution under the left shift ``(Tx)_i = x_{i+1}``; a resolution is a
  window ``(lo, hi)`` and the cells are the legal words on that window.
* :class:`ProductSystem`: diagonal action on a product, cells are tuples.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import InvalidInput, Unsupported, check_cap
from .group import Group, IntegerGroup, LadderGroup, arithmetic_of, group_from_json


class MeasureOracle:
    """An invariant probability measure evaluated on cells."""

    name = "measure"
    exact = True

    def mass(self, cell, res) -> Fraction:
        raise NotImplementedError

    def error(self, res) -> Fraction:
        return Fraction(0)


class CantorSystem:
    group: Group
    kind = "abstract"
    cell_permuting = False

    @property
    def measures(self) -> list:
        return []

    def standard_resolution(self, level: int):
        raise NotImplementedError

    def level_of(self, res) -> int:
        raise NotImplementedError

    def coarsest(self):
        return self.standard_resolution(0)

    def join(self, r1, r2):
        raise NotImplementedError

    def refines(self, fine, coarse) -> bool:
        raise NotImplementedError

    def cells(self, res) -> list:
        raise NotImplementedError

    def children(self, cell, coarse, fine) -> list:
        raise NotImplementedError

    def parent(self, cell, fine, coarse):
        raise NotImplementedError

    def act_resolution(self, g, res):
        raise NotImplementedError

    def act_cell(self, g, cell, res):
        raise NotImplementedError

    def cell_to_json(self, cell):
        raise NotImplementedError

    def cell_from_json(self, obj):
        raise NotImplementedError

    def resolution_to_json(self, res):
        raise NotImplementedError

    def resolution_from_json(self, obj):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def check_resolution(self, res):
        """Raise ``InvalidInput`` if ``res`` is not a resolution of this system."""

    def join_all(self, resolutions: Iterable):
        out = None
        for r in resolutions:
            out = r if out is None else self.join(out, r)
        return self.coarsest() if out is None else out

    def whole(self, res=None) -> "ClopenSet":
        res = self.coarsest() if res is None else res
        return ClopenSet(self, res, frozenset(self.cells(res)))

    def empty(self, res=None) -> "ClopenSet":
        res = self.coarsest() if res is None else res
        return ClopenSet(self, res, frozenset())

    def cell_set(self, res, cells) -> "ClopenSet":
        cells = frozenset(cells)
        valid = set(self.cells(res))
        bad = [c for c in cells if c not in valid]
        if bad:
            raise InvalidInput(f"invalid cells at resolution {res!r}: {sorted(bad)[:5]}")
        return ClopenSet(self, res, cells)


@dataclass(frozen=True)
class UniformOracle(MeasureOracle):
    system: "ProfiniteOdometer"
    name = "uniform"

    def mass(self, cell, res):
        return Fraction(1, self.system.group.index(res))


@dataclass(frozen=True)
class ProfiniteOdometer(CantorSystem):
    group: LadderGroup
    kind = "odometer"
    cell_permuting = True

    def __post_init__(self):
        if not isinstance(self.group, LadderGroup):
            raise InvalidInput("an odometer needs a QuotientLadder group descriptor")

    @property
    def measures(self):
        return [UniformOracle(self)]

    def check_resolution(self, res):
        if isinstance(res, bool) or not isinstance(res, int) or res < 0:
            raise InvalidInput(f"odometer resolution must be a nonnegative integer, got {res!r}")
        depth = self.group.depth
        if depth is not None and res > depth:
            raise InvalidInput(f"odometer ladder has depth {depth}, resolution {res} requested")

    def standard_resolution(self, level):
        depth = self.group.depth
        return level if depth is None else min(level, depth)

    def level_of(self, res):
        return res

    def join(self, r1, r2):
        return max(r1, r2)

    def refines(self, fine, coarse):
        return fine >= coarse

    def cells(self, res):
        self.check_resolution(res)
        return list(self.group.representatives(res))

    def children(self, cell, coarse, fine):
        m0 = self.group.modulus(coarse)
        m1 = self.group.modulus(fine)
        steps = range(0, m1, m0)
        if isinstance(cell, int):
            return [cell + j for j in steps]
        return [tuple(c + j for c, j in zip(cell, js)) for js in itertools.product(steps, repeat=len(cell))]

    def parent(self, cell, fine, coarse):
        return self.group.reduce(cell, coarse)

    def act_resolution(self, g, res):
        return res

    def act_cell(self, g, cell, res):
        return self.group.reduce(self.group.mul(g, cell), res)

    def cell_to_json(self, cell):
        return self.group.element_to_json(cell)

    def cell_from_json(self, obj):
        return self.group.element_from_json(obj)

    def resolution_to_json(self, res):
        return res

    def resolution_from_json(self, obj):
        self.check_resolution(obj)
        return obj

    def to_json(self):
        return {"kind": "odometer", "group": self.group.to_json()}


@dataclass(frozen=True)
class FrequencyOracle(MeasureOracle):
    system: "SubstitutionSubshift"
    name = "frequency"
    exact = False

    def mass(self, cell, res):
        return self.system.word_frequency(cell)

    def error(self, res):
        lo, hi = res
        return Fraction(2 * (hi - lo + 1), self.system.sample_length)


@dataclass(frozen=True)
class SubstitutionSubshift(CantorSystem):
    rules: tuple  # sorted ((letter, image), ...)
    sample_length: int = 2**20
    group: Group = IntegerGroup()
    kind = "subshift"
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        rules = self.rules
        if isinstance(rules, dict):
            rules = tuple(sorted(rules.items()))
            object.__setattr__(self, "rules", rules)
        rule_map = dict(rules)
        alphabet = sorted(rule_map)
        if len(alphabet) < 2:
            raise InvalidInput("a substitution subshift needs at least two letters")
        for a, img in rules:
            if len(a) != 1 or not img or any(ch not in rule_map for ch in img):
                raise InvalidInput(f"bad substitution rule {a!r} -> {img!r}")
        if not self._primitive(rule_map, alphabet):
            raise InvalidInput("substitution is not primitive; the subshift would not be minimal")
        if self.sample_length < 16:
            raise InvalidInput("sample_length too small")

    @staticmethod
    def _primitive(rule_map, alphabet):
        # some power of the incidence matrix must be strictly positive (Wielandt bound)
        step = {a: set(rule_map[a]) for a in alphabet}
        reach = {a: set(step[a]) for a in alphabet}
        full = set(alphabet)
        for _ in range((len(alphabet) - 1) ** 2 + 1):
            if all(reach[a] == full for a in alphabet):
                return True
            reach = {a: set().union(*(step[b] for b in reach[a])) for a in alphabet}
        return all(reach[a] == full for a in alphabet)

    @property
    def rule_map(self) -> dict:
        return dict(self.rules)

    @property
    def alphabet(self) -> list:
        return sorted(self.rule_map)

    @property
    def measures(self):
        return [FrequencyOracle(self)]

    def substitute(self, word: str, times: int = 1) -> str:
        rule_map = self.rule_map
        for _ in range(times):
            word = "".join(rule_map[ch] for ch in word)
        return word

    def sample_word(self, length: int | None = None) -> str:
        """Prefix of ``σ^n(a)`` for the first letter ``a`` and ``n`` large enough."""
        length = self.sample_length if length is None else length
        key = ("sample", length)
        if key not in self._cache:
            word = self.alphabet[0]
            while len(word) < length:
                word = self.substitute(word)
            self._cache[key] = word[:length]
        return self._cache[key]

    def legal_two_words(self) -> frozenset:
        if "two" not in self._cache:
            rule_map = self.rule_map
            found = set()
            for img in rule_map.values():
                found.update(img[i : i + 2] for i in range(len(img) - 1))
            frontier = list(found)
            while frontier:
                u, v = frontier.pop()
                img = rule_map[u] + rule_map[v]
                for i in range(len(img) - 1):
                    w = img[i : i + 2]
                    if w not in found:
                        found.add(w)
                        frontier.append(w)
            self._cache["two"] = frozenset(found)
        return self._cache["two"]

    def language(self, length: int) -> list:
        """Sorted list of legal words of the given length."""
        if length < 1:
            raise InvalidInput("word length must be positive")
        key = ("lang", length)
        if key not in self._cache:
            if length == 1:
                words = set(self.alphabet)
            else:
                n = 0
                while min(len(self.substitute(a, n)) for a in self.alphabet) < length:
                    n += 1
                words = set()
                for uv in self.legal_two_words():
                    block = self.substitute(uv[0], n) + self.substitute(uv[1], n)
                    words.update(block[i : i + length] for i in range(len(block) - length + 1))
            check_cap(len(words), "subshift language")
            self._cache[key] = sorted(words)
        return self._cache[key]

    def word_frequency(self, word: str) -> Fraction:
        key = ("freq", len(word))
        if key not in self._cache:
            sample = self.sample_word()
            L = len(word)
            counts: dict = {}
            for i in range(len(sample) - L + 1):
                w = sample[i : i + L]
                counts[w] = counts.get(w, 0) + 1
            self._cache[key] = (counts, len(sample) - L + 1)
        counts, total = self._cache[key]
        return Fraction(counts.get(word, 0), total)

    def check_resolution(self, res):
        if not (isinstance(res, tuple) and len(res) == 2 and all(isinstance(x, int) for x in res) and res[0] <= res[1]):
            raise InvalidInput(f"subshift resolution must be a window (lo, hi) with lo <= hi, got {res!r}")

    def standard_resolution(self, level):
        return (-level, level)

    def level_of(self, res):
        return max(-res[0], res[1], 0)

    def join(self, r1, r2):
        return (min(r1[0], r2[0]), max(r1[1], r2[1]))

    def refines(self, fine, coarse):
        return fine[0] <= coarse[0] and fine[1] >= coarse[1]

    def cells(self, res):
        self.check_resolution(res)
        return self.language(res[1] - res[0] + 1)

    def _extension_index(self, coarse, fine):
        offset = coarse[0] - fine[0]
        length = coarse[1] - coarse[0] + 1
        key = ("ext", fine[1] - fine[0] + 1, offset, length)
        if key not in self._cache:
            index: dict = {}
            for w in self.cells(fine):
                index.setdefault(w[offset : offset + length], []).append(w)
            self._cache[key] = index
        return self._cache[key]

    def children(self, cell, coarse, fine):
        return self._extension_index(coarse, fine).get(cell, [])

    def parent(self, cell, fine, coarse):
        offset = coarse[0] - fine[0]
        return cell[offset : offset + coarse[1] - coarse[0] + 1]

    def act_resolution(self, g, res):
        return (res[0] - g, res[1] - g)

    def act_cell(self, g, cell, res):
        return cell

    def cylinder(self, word: str, start: int = 0) -> "ClopenSet":
        """``{x : x[start .. start+len(word)-1] = word}``."""
        return ClopenSet(self, (start, start + len(word) - 1), frozenset([word]))

    def cell_to_json(self, cell):
        return cell

    def cell_from_json(self, obj):
        if not isinstance(obj, str):
            raise InvalidInput(f"subshift cell must be a word, got {obj!r}")
        return obj

    def resolution_to_json(self, res):
        return list(res)

    def resolution_from_json(self, obj):
        res = tuple(obj) if isinstance(obj, list) else obj
        self.check_resolution(res)
        return res

    def to_json(self):
        return {"kind": "subshift", "rules": dict(self.rules), "sample_length": self.sample_length}


@dataclass(frozen=True)
class ProductOracle(MeasureOracle):
    system: "ProductSystem"
    parts: tuple
    name = "product"

    @property
    def exact(self):
        return all(p.exact for p in self.parts)

    def mass(self, cell, res):
        out = Fraction(1)
        for p, c, r in zip(self.parts, cell, res):
            out *= p.mass(c, r)
        return out

    def error(self, res):
        # masses are at most 1, so the product error is bounded by the sum
        return sum((p.error(r) for p, r in zip(self.parts, res)), Fraction(0))


@dataclass(frozen=True)
class ProductSystem(CantorSystem):
    factors: tuple
    kind = "product"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise InvalidInput("a product needs at least two factors")
        base = arithmetic_of(self.factors[0].group)
        if any(arithmetic_of(f.group) != base for f in self.factors):
            raise InvalidInput("product factors must be acted on by the same group")

    @property
    def group(self):
        return arithmetic_of(self.factors[0].group)

    @property
    def cell_permuting(self):
        return all(f.cell_permuting for f in self.factors)

    @property
    def measures(self):
        return [ProductOracle(self, parts) for parts in itertools.product(*(f.measures for f in self.factors))]

    def check_resolution(self, res):
        if not isinstance(res, tuple) or len(res) != len(self.factors):
            raise InvalidInput(f"product resolution must have {len(self.factors)} components, got {res!r}")
        for f, r in zip(self.factors, res):
            f.check_resolution(r)

    def standard_resolution(self, level):
        return tuple(f.standard_resolution(level) for f in self.factors)

    def level_of(self, res):
        return max(f.level_of(r) for f, r in zip(self.factors, res))

    def join(self, r1, r2):
        return tuple(f.join(a, b) for f, a, b in zip(self.factors, r1, r2))

    def refines(self, fine, coarse):
        return all(f.refines(a, b) for f, a, b in zip(self.factors, fine, coarse))

    def cells(self, res):
        self.check_resolution(res)
        parts = [f.cells(r) for f, r in zip(self.factors, res)]
        total = 1
        for p in parts:
            total *= len(p)
        check_cap(total, "product cells")
        return list(itertools.product(*parts))

    def children(self, cell, coarse, fine):
        parts = [f.children(c, a, b) for f, c, a, b in zip(self.factors, cell, coarse, fine)]
        return list(itertools.product(*parts))

    def parent(self, cell, fine, coarse):
        return tuple(f.parent(c, a, b) for f, c, a, b in zip(self.factors, cell, fine, coarse))

    def act_resolution(self, g, res):
        return tuple(f.act_resolution(g, r) for f, r in zip(self.factors, res))

    def act_cell(self, g, cell, res):
        return tuple(f.act_cell(g, c, r) for f, c, r in zip(self.factors, cell, res))

    def cell_to_json(self, cell):
        return [f.cell_to_json(c) for f, c in zip(self.factors, cell)]

    def cell_from_json(self, obj):
        if not isinstance(obj, list) or len(obj) != len(self.factors):
            raise InvalidInput(f"product cell must be a list of {len(self.factors)} factor cells")
        return tuple(f.cell_from_json(c) for f, c in zip(self.factors, obj))

    def resolution_to_json(self, res):
        return [f.resolution_to_json(r) for f, r in zip(self.factors, res)]

    def resolution_from_json(self, obj):
        if not isinstance(obj, list) or len(obj) != len(self.factors):
            raise InvalidInput("product resolution must be a list with one entry per factor")
        return tuple(f.resolution_from_json(r) for f, r in zip(self.factors, obj))

    def to_json(self):
        return {"kind": "product", "factors": [f.to_json() for f in self.factors]}


def odometer(mod: int = 2, base: Group | None = None, moduli=None) -> ProfiniteOdometer:
    base = IntegerGroup() if base is None else base
    if moduli is not None:
        return ProfiniteOdometer(LadderGroup(base, None, tuple(moduli)))
    return ProfiniteOdometer(LadderGroup(base, mod))


def thue_morse(sample_length: int = 2**20) -> SubstitutionSubshift:
    return SubstitutionSubshift({"0": "01", "1": "10"}, sample_length)


def fibonacci(sample_length: int = 2**20) -> SubstitutionSubshift:
    return SubstitutionSubshift({"a": "ab", "b": "a"}, sample_length)


def system_from_json(obj) -> CantorSystem:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInput(f"system definition must be an object with a 'kind', got {obj!r}")
    kind = obj["kind"]
    if kind == "odometer":
        if "group" in obj:
            group = group_from_json(obj["group"])
            if not isinstance(group, LadderGroup):
                raise InvalidInput("odometer group must be a QuotientLadder")
            return ProfiniteOdometer(group)
        base = group_from_json(obj.get("base", {"kind": "Z"}))
        moduli = obj.get("moduli")
        return ProfiniteOdometer(LadderGroup(base, obj.get("mod") if moduli is None else None,
                                             tuple(moduli) if moduli is not None else None))
    if kind == "subshift":
        rules = obj.get("rules")
        if not isinstance(rules, dict):
            raise InvalidInput("subshift needs a 'rules' object mapping letters to words")
        return SubstitutionSubshift(rules, int(obj.get("sample_length", 2**20)))
    if kind == "product":
        return ProductSystem(tuple(system_from_json(f) for f in obj.get("factors", [])))
    raise InvalidInput(f"unknown system kind {kind!r}")


@dataclass(frozen=True, eq=False)
class ClopenSet:
    """A clopen set given as a union of cells at one resolution."""

    system: CantorSystem
    resolution: object
    cells: frozenset
    _memo: dict = field(default_factory=dict, repr=False)

    __hash__ = None

    def __repr__(self):
        shown = sorted(self.cells)[:6]
        more = ", …" if len(self.cells) > 6 else ""
        return f"ClopenSet(res={self.resolution!r}, cells={shown}{more}, n={len(self.cells)})"

    def __len__(self):
        return len(self.cells)

    def sorted_cells(self) -> list:
        return sorted(self.cells)

    def refine(self, res) -> "ClopenSet":
        sys = self.system
        if res == self.resolution:
            return self
        if not sys.refines(res, self.resolution):
            raise InvalidInput(f"cannot coarsen from {self.resolution!r} to {res!r}")
        out = []
        for c in self.cells:
            out.extend(sys.children(c, self.resolution, res))
            check_cap(len(out), "refined cells")
        return ClopenSet(sys, res, frozenset(out))

    def _align(self, other: "ClopenSet"):
        if other.system != self.system:
            raise InvalidInput("clopen sets belong to different systems")
        res = self.system.join(self.resolution, other.resolution)
        return self.refine(res), other.refine(res), res

    def __or__(self, other):
        a, b, res = self._align(other)
        return ClopenSet(self.system, res, a.cells | b.cells)

    def __and__(self, other):
        a, b, res = self._align(other)
        return ClopenSet(self.system, res, a.cells & b.cells)

    def __sub__(self, other):
        a, b, res = self._align(other)
        return ClopenSet(self.system, res, a.cells - b.cells)

    def __xor__(self, other):
        a, b, res = self._align(other)
        return ClopenSet(self.system, res, a.cells ^ b.cells)

    def complement(self) -> "ClopenSet":
        return ClopenSet(self.system, self.resolution, frozenset(self.system.cells(self.resolution)) - self.cells)

    def is_empty(self) -> bool:
        return not self.cells

    def __bool__(self):
        return bool(self.cells)

    def issubset(self, other: "ClopenSet") -> bool:
        a, b, _ = self._align(other)
        return a.cells <= b.cells

    def isdisjoint(self, other: "ClopenSet") -> bool:
        a, b, _ = self._align(other)
        return a.cells.isdisjoint(b.cells)

    def __eq__(self, other):
        if not isinstance(other, ClopenSet):
            return NotImplemented
        if other.system != self.system:
            return False
        a, b, _ = self._align(other)
        return a.cells == b.cells

    def act(self, g) -> "ClopenSet":
        return act(g, self)

    def coarsen_cells(self, res) -> frozenset:
        """Cells at the coarser ``res`` that meet this set."""
        sys = self.system
        return frozenset(sys.parent(c, self.resolution, res) for c in self.cells)

    def to_json(self, include_system: bool = False):
        sys = self.system
        out = {
            "resolution": sys.resolution_to_json(self.resolution),
            "cells": [sys.cell_to_json(c) for c in self.sorted_cells()],
        }
        if include_system:
            out["system"] = sys.to_json()
        return out


def clopen_from_json(obj, system: CantorSystem | None = None) -> ClopenSet:
    if not isinstance(obj, dict) or "cells" not in obj:
        raise InvalidInput("clopen set JSON needs 'resolution' and 'cells'")
    if "system" in obj:
        system = system_from_json(obj["system"])
    if system is None:
        raise InvalidInput("clopen set JSON carries no system and none was given")
    res = system.resolution_from_json(obj.get("resolution", system.resolution_to_json(system.coarsest())))
    return system.cell_set(res, (system.cell_from_json(c) for c in obj["cells"]))


def refine(A: ClopenSet, res) -> ClopenSet:
    return A.refine(res)


def act(g, A: ClopenSet) -> ClopenSet:
    """The image ``gA``."""
    sys = A.system
    res = sys.act_resolution(g, A.resolution)
    return ClopenSet(sys, res, frozenset(sys.act_cell(g, c, A.resolution) for c in A.cells))


def _oracle(A: ClopenSet, mu: int) -> MeasureOracle:
    measures = A.system.measures
    if not measures:
        raise Unsupported(f"system {A.system.kind} has no measure oracle")
    if not 0 <= mu < len(measures):
        raise InvalidInput(f"measure index {mu} out of range (system has {len(measures)})")
    return measures[mu]


def measure(A: ClopenSet, mu: int = 0) -> Fraction:
    oracle = _oracle(A, mu)
    if mu not in A._memo:
        A._memo[mu] = sum((oracle.mass(c, A.resolution) for c in A.cells), Fraction(0))
    return A._memo[mu]


def measure_error(A: ClopenSet, mu: int = 0) -> Fraction:
    """Error bound of :func:`measure` (zero for exact oracles)."""
    return _oracle(A, mu).error(A.resolution)


def measure_margin(A: ClopenSet, B: ClopenSet) -> Fraction:
    """``min_μ (μ(B) - μ(A))`` over the system's measure oracles."""
    if A.system != B.system:
        raise InvalidInput("clopen sets belong to different systems")
    n = len(A.system.measures)
    if n == 0:
        raise Unsupported("system has no measure oracle")
    return min(measure(B, i) - measure(A, i) for i in range(n))
