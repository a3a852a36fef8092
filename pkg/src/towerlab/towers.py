"""Towers, castles and tower collections over Cantor systems."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .cantor import CantorSystem, ClopenSet, ProductSystem, act, clopen_from_json
from .errors import CapExceeded, InvalidInput, Unsupported
from .group import FiniteGroupSet, IntegerGroup, arithmetic_of, group_set_from_json


@dataclass(frozen=True, eq=False)
class Tower:
    base: ClopenSet
    shape: FiniteGroupSet

    def __post_init__(self):
        if not self.shape:
            raise InvalidInput("tower shape must be nonempty")

    @property
    def system(self) -> CantorSystem:
        return self.base.system

    def level(self, s) -> ClopenSet:
        return act(s, self.base)

    def levels(self) -> list:
        return [(s, self.level(s)) for s in self.shape]

    def footprint(self) -> ClopenSet:
        out = None
        for _, lv in self.levels():
            out = lv if out is None else out | lv
        return out

    def normalized(self) -> "Tower":
        """Equivalent tower whose shape contains the identity."""
        group = self.shape.group
        e = group.identity()
        if e in self.shape:
            return self
        t = self.shape.elements[0]
        return Tower(act(t, self.base), self.shape.rtranslate(group.inv(t)))

    def to_json(self):
        return {"base": self.base.to_json(), "shape": self.shape.to_json()}


@dataclass(frozen=True, eq=False)
class TowerCollection:
    towers: tuple = ()
    system: CantorSystem | None = None

    def __post_init__(self):
        object.__setattr__(self, "towers", tuple(self.towers))
        if self.system is None and self.towers:
            object.__setattr__(self, "system", self.towers[0].system)
        if any(t.system != self.system for t in self.towers):
            raise InvalidInput("all towers must live on the same system")

    def __len__(self):
        return len(self.towers)

    def __iter__(self):
        return iter(self.towers)

    def footprints(self) -> list:
        return [t.footprint() for t in self.towers]

    def to_json(self):
        return [t.to_json() for t in self.towers]


class Castle(TowerCollection):
    """Tower collection whose footprints are meant to be pairwise disjoint (see :func:`verify_castle`)."""


def castle_from_json(obj, system: CantorSystem, cls=Castle):
    if not isinstance(obj, list):
        raise InvalidInput("castle JSON must be a list of {'base', 'shape'} objects")
    towers = []
    for item in obj:
        if not isinstance(item, dict) or "base" not in item or "shape" not in item:
            raise InvalidInput(f"tower JSON needs 'base' and 'shape': {item!r}")
        base = clopen_from_json(item["base"], system)
        shape = group_set_from_json(system.group, item["shape"])
        towers.append(Tower(base, shape).normalized())
    return cls(tuple(towers), system)


def aligned_cells(sets: Sequence[ClopenSet]):
    """Refine clopen sets to their common resolution; returns ``(res, [cells])``."""
    if not sets:
        raise InvalidInput("nothing to align")
    sys = sets[0].system
    res = sys.join_all(s.resolution for s in sets)
    return res, [s.refine(res).cells for s in sets]


@dataclass
class CastleReport:
    valid: bool
    partitions: bool
    level_overlaps: list = field(default_factory=list)  # (tower, s, s')
    cross_overlaps: list = field(default_factory=list)  # (tower, tower')
    uncovered: int = 0
    resolution: object = None

    def to_json(self, group=None):
        enc = (lambda g: g) if group is None else group.element_to_json
        return {
            "valid": self.valid,
            "partitions": self.partitions,
            "level_overlaps": [{"tower": i, "levels": [enc(a), enc(b)]} for i, a, b in self.level_overlaps],
            "cross_overlaps": [{"towers": [i, j]} for i, j in self.cross_overlaps],
            "uncovered_cells": self.uncovered,
        }


def verify_castle(c: TowerCollection) -> CastleReport:
    if not c.towers:
        return CastleReport(valid=True, partitions=False)
    sys = c.system
    levels = [(i, s, lv) for i, t in enumerate(c.towers) for s, lv in t.levels()]
    res, cells = aligned_cells([lv for _, _, lv in levels])
    level_overlaps, cross = set(), set()
    owner: dict = {}
    for (i, s, _), cs in zip(levels, cells):
        for x in cs:
            prev = owner.get(x)
            if prev is None:
                owner[x] = (i, s)
            elif prev[0] == i:
                level_overlaps.add((i, prev[1], s))
            else:
                cross.add((min(prev[0], i), max(prev[0], i)))
    level_overlaps = sorted(level_overlaps)
    valid = not level_overlaps and not cross
    uncovered = len(sys.cells(res)) - len(owner)
    return CastleReport(
        valid=valid,
        partitions=valid and uncovered == 0,
        level_overlaps=level_overlaps,
        cross_overlaps=sorted(cross),
        uncovered=uncovered,
        resolution=res,
    )


@dataclass
class LebesgueResult:
    ok: bool
    resolution: object
    certificate: dict = field(default_factory=dict)  # cell -> (tower index, t)
    failing_cell: object = None

    def __bool__(self):
        return self.ok


def _level_resolution(c: TowerCollection):
    sys = c.system
    return sys.join_all(
        sys.act_resolution(s, t.base.resolution) for t in c.towers for s in t.shape
    )


def is_e_lebesgue(ts: TowerCollection, E: FiniteGroupSet) -> LebesgueResult:
    """Every cell lies in a level ``tV_i`` with ``E t ⊆ S_i``."""
    if not ts.towers:
        raise InvalidInput("empty tower collection covers nothing")
    sys = ts.system
    group = E.group
    res = _level_resolution(ts)
    cert: dict = {}
    for i, tower in enumerate(ts.towers):
        shape = tower.shape.as_frozenset()
        for t in tower.shape:
            if all(group.mul(e, t) in shape for e in E):
                for x in tower.level(t).refine(res).cells:
                    cert.setdefault(x, (i, t))
    for x in sys.cells(res):
        if x not in cert:
            return LebesgueResult(False, res, cert, x)
    return LebesgueResult(True, res, cert)


def is_lebesgue_cover(ts: TowerCollection, E: FiniteGroupSet) -> LebesgueResult:
    """Weaker cover predicate: each point's ``E``-orbit lies inside a single footprint."""
    if not ts.towers:
        raise InvalidInput("empty tower collection covers nothing")
    sys = ts.system
    group = E.group
    good = []
    for fp in ts.footprints():
        # {x : E x ⊆ fp} = ∩_{e∈E} e^{-1} fp
        w = None
        for e in E:
            pre = act(group.inv(e), fp)
            w = pre if w is None else w & pre
        good.append(w)
    res, cells = aligned_cells(good)
    cert: dict = {}
    for i, cs in enumerate(cells):
        for x in cs:
            cert.setdefault(x, (i, None))
    for x in sys.cells(res):
        if x not in cert:
            return LebesgueResult(False, res, cert, x)
    return LebesgueResult(True, res, cert)


@dataclass
class ChromaticResult:
    number: int
    exact: bool
    coloring: list  # color per tower

    def to_json(self):
        return {"chromatic_number": self.number, "exact": self.exact, "coloring": self.coloring}


def overlap_graph(ts: TowerCollection) -> list:
    if not ts.towers:
        return []
    _, cells = aligned_cells(ts.footprints())
    n = len(cells)
    return [[j for j in range(n) if j != i and not cells[i].isdisjoint(cells[j])] for i in range(n)]


def _greedy_coloring(adj):
    colors = [-1] * len(adj)
    for v in sorted(range(len(adj)), key=lambda v: (-len(adj[v]), v)):
        used = {colors[u] for u in adj[v]}
        colors[v] = next(c for c in range(len(adj) + 1) if c not in used)
    return colors


def _k_colorable(adj, k):
    n = len(adj)
    order = sorted(range(n), key=lambda v: (-len(adj[v]), v))
    colors = [-1] * n

    def place(pos):
        if pos == n:
            return True
        v = order[pos]
        used = {colors[u] for u in adj[v] if colors[u] >= 0}
        # symmetry breaking: never open more than one new color at a time
        top = max(colors) + 1 if pos else 0
        for c in range(min(k, top + 1)):
            if c not in used:
                colors[v] = c
                if place(pos + 1):
                    return True
                colors[v] = -1
        return False

    return list(colors) if place(0) else None


def chromatic_number(ts: TowerCollection, cap: int = 20) -> ChromaticResult:
    """Least number of pairwise-disjoint subfamilies covering the footprints."""
    adj = overlap_graph(ts)
    if not adj:
        return ChromaticResult(0, True, [])
    greedy = _greedy_coloring(adj)
    if len(adj) > cap:
        return ChromaticResult(max(greedy) + 1, False, greedy)
    for k in range(1, max(greedy) + 1):
        colors = _k_colorable(adj, k)
        if colors is not None:
            return ChromaticResult(k, True, colors)
    return ChromaticResult(max(greedy) + 1, True, greedy)


def _require_z(sys: CantorSystem):
    if arithmetic_of(sys.group) != IntegerGroup():
        raise Unsupported("this construction needs a Z action")


def first_return_decomposition(sys: CantorSystem, V: ClopenSet, cap: int = 4096) -> Castle:
    """Kakutani–Rokhlin castle over ``V`` from first-return times."""
    _require_z(sys)
    if V.is_empty():
        raise InvalidInput("base set must be nonempty")
    group = sys.group
    remaining = V
    towers = []
    n = 0
    while not remaining.is_empty():
        n += 1
        if n > cap:
            raise CapExceeded(f"return time exceeds cap {cap}; raise the cap or enlarge V")
        hit = remaining & act(-n, V)
        if hit:
            towers.append(Tower(hit, FiniteGroupSet(group, range(n))))
            remaining = remaining - hit
    return Castle(tuple(towers), sys)


def double_castle(c: TowerCollection, N: int) -> TowerCollection:
    """The castle together with its copy whose bases are moved back by ``N``."""
    _require_z(c.system)
    if N <= 0:
        raise InvalidInput("shift N must be positive")
    shifted = [Tower(act(-N, t.base), t.shape) for t in c.towers]
    return TowerCollection(tuple(c.towers) + tuple(shifted), c.system)


def refine_castle_to(c: TowerCollection, targets: Sequence[ClopenSet]) -> TowerCollection:
    """Split bases so every level is contained in or disjoint from every target."""
    sys = c.system
    targets = list(targets)
    if any(u.system != sys for u in targets):
        raise InvalidInput("targets must live on the castle's system")
    group = sys.group
    out = []
    for tower in c.towers:
        res = sys.join_all(
            [tower.base.resolution]
            + [sys.act_resolution(group.inv(s), u.resolution) for s in tower.shape for u in targets]
        )
        base = tower.base.refine(res)
        pieces: dict = {}
        for x in sorted(base.cells):
            sig = []
            for s in tower.shape:
                img = sys.act_cell(s, x, res)
                img_res = sys.act_resolution(s, res)
                sig.extend(sys.parent(img, img_res, u.resolution) in u.cells for u in targets)
            pieces.setdefault(tuple(sig), []).append(x)
        for cells in pieces.values():
            out.append(Tower(ClopenSet(sys, res, frozenset(cells)), tower.shape))
    return type(c)(tuple(out), sys)


def pullback_clopen(A: ClopenSet, product: ProductSystem, index: int) -> ClopenSet:
    """``π_index^{-1}(A)`` in the product."""
    if not isinstance(product, ProductSystem):
        raise Unsupported("pullback needs a product system")
    if not 0 <= index < len(product.factors) or product.factors[index] != A.system:
        raise InvalidInput("the set does not live on the chosen factor")
    res = list(product.coarsest())
    res[index] = A.resolution
    res = tuple(res)
    parts = [f.cells(r) for f, r in zip(product.factors, res)]
    parts[index] = sorted(A.cells)
    return ClopenSet(product, res, frozenset(itertools.product(*parts)))


def pullback_castle(c: TowerCollection, product: ProductSystem, index: int) -> TowerCollection:
    towers = tuple(Tower(pullback_clopen(t.base, product, index), t.shape) for t in c.towers)
    return type(c)(towers, product)
