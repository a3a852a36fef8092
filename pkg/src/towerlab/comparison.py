"""Certified search for the subequivalence relation ``A ≺_m B`` on clopen sets.

A witness is a finite list of pieces ``(U_j, s_j, c_j)``: the ``U_j`` partition
``A``, the colors lie in ``0..m``, and for each color the images ``s_j U_j`` are
pairwise disjoint subsets of ``B``.

At a fixed resolution and translation radius the search is exact.  On systems
where translations permute cells (odometers and their products) it is a
degree-constrained assignment solved by integer max-flow: every ``A``-cell is
sent to some ``B``-cell, and every ``B``-cell receives at most ``m + 1`` cells,
which then get distinct colors.  Other systems (the shift) fall back to a
budgeted backtracking search over ``(translation, color)`` choices.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cantor import CantorSystem, ClopenSet, act, clopen_from_json, measure_margin
from .errors import InvalidInput, Unsupported
from .flow import FlowNetwork
from .group import Group, ordered_ball

log = logging.getLogger(__name__)

FOUND = "FOUND"
STRUCTURAL = "STRUCTURAL"
BUDGET = "BUDGET"


@dataclass(frozen=True, eq=False)
class Piece:
    U: ClopenSet
    s: object
    color: int = 0


@dataclass(frozen=True, eq=False)
class ComparisonWitness:
    system: CantorSystem
    pieces: tuple = ()
    m: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))

    def to_json(self):
        g = self.system.group
        return {
            "m": self.m,
            "pieces": [
                {"set": p.U.to_json(), "translation": g.element_to_json(p.s), "color": p.color}
                for p in self.pieces
            ],
        }


def witness_from_json(obj, system: CantorSystem) -> ComparisonWitness:
    if not isinstance(obj, dict) or "pieces" not in obj:
        raise InvalidInput("witness JSON needs 'pieces'")
    g = system.group
    pieces = [
        Piece(clopen_from_json(p["set"], system), g.element_from_json(p["translation"]), int(p.get("color", 0)))
        for p in obj["pieces"]
    ]
    return ComparisonWitness(system, tuple(pieces), int(obj.get("m", 0)))


@dataclass
class WitnessReport:
    ok: bool
    violations: list = field(default_factory=list)

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "violations": self.violations}


def verify_witness(A: ClopenSet, B: ClopenSet, w: ComparisonWitness) -> WitnessReport:
    """Exact check of the partition, color, disjointness and containment conditions."""
    sys = A.system
    if B.system != sys or w.system != sys:
        return WitnessReport(False, [{"kind": "system", "detail": "sets and witness on different systems"}])
    violations = []
    pieces = [p for p in w.pieces if p.U]
    for j, p in enumerate(w.pieces):
        if not 0 <= p.color <= w.m:
            violations.append({"kind": "color", "piece": j, "detail": f"color {p.color} outside 0..{w.m}"})
    images = [act(p.s, p.U) for p in pieces]
    sets = [A, B] + [p.U for p in pieces] + images
    res = sys.join_all(s.resolution for s in sets)
    a_cells = A.refine(res).cells
    b_cells = B.refine(res).cells
    u_cells = [p.U.refine(res).cells for p in pieces]
    img_cells = [im.refine(res).cells for im in images]
    idx = [j for j, p in enumerate(w.pieces) if p.U]

    seen: dict = {}
    for j, cs in zip(idx, u_cells):
        for x in cs:
            if x in seen:
                violations.append({"kind": "partition", "pieces": [seen[x], j], "detail": "pieces overlap"})
                break
            seen[x] = j
    covered = frozenset(seen)
    if covered - a_cells:
        violations.append({"kind": "partition", "detail": f"pieces leave A ({len(covered - a_cells)} cells)"})
    if a_cells - covered:
        violations.append({"kind": "partition", "detail": f"pieces miss {len(a_cells - covered)} cells of A"})

    by_color: dict = {}
    for j, p, cs in zip(idx, pieces, img_cells):
        if not cs <= b_cells:
            violations.append({"kind": "containment", "piece": j, "detail": "image not inside B"})
        used = by_color.setdefault(p.color, {})
        for x in cs:
            if x in used:
                violations.append(
                    {"kind": "disjointness", "pieces": [used[x], j], "color": p.color, "detail": "images overlap"}
                )
                break
            used[x] = j
    return WitnessReport(not violations, violations)


@dataclass
class SearchResult:
    status: str
    witness: ComparisonWitness | None
    budgets: dict
    stages: list = field(default_factory=list)
    margin: Fraction | None = None

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def __bool__(self):
        return self.found

    def to_json(self):
        return {
            "status": self.status if self.found else f"NOT-FOUND ({self.status.lower()})",
            "found": self.found,
            "budgets": self.budgets,
            "stages": self.stages,
            "margin": None if self.margin is None else str(self.margin),
            "witness": None if self.witness is None else self.witness.to_json(),
        }


@functools.lru_cache(maxsize=64)
def _ball(group: Group, r: int) -> tuple:
    return tuple(ordered_ball(group, r))


def translations(group: Group, r: int) -> tuple:
    """Word ball of radius ``r`` in search order (length, then canonical form)."""
    return _ball(group, r)


@functools.lru_cache(maxsize=256)
def move_table(sys: CantorSystem, res, r: int) -> dict:
    """For cell-permuting systems: cell -> ((image cell, first translation reaching it), ...)."""
    moves = translations(sys.group, r)
    table = {}
    for a in sys.cells(res):
        seen = {}
        for s in moves:
            b = sys.act_cell(s, a, res)
            if b not in seen:
                seen[b] = s
        table[a] = tuple(seen.items())
    return table


def escalation(sys: CantorSystem, base_res, radius: int, max_level: int | None, max_radius: int | None):
    """Stages ``(resolution, radius)``: resolution +1 and radius +2 alternately within the caps."""
    level = sys.level_of(base_res)
    top_level = level if max_level is None else max(level, max_level)
    top_radius = radius if max_radius is None else max(radius, max_radius)
    stages = [(level, radius)]
    bump_res = True
    while level < top_level or radius < top_radius:
        if (bump_res and level < top_level) or radius >= top_radius:
            level += 1
        else:
            radius = min(radius + 2, top_radius)
        bump_res = not bump_res
        stages.append((level, radius))
    out = [(base_res, stages[0][1])]
    out += [(sys.join(base_res, sys.standard_resolution(lv)), r) for lv, r in stages[1:]]
    return out


def _assign_flow(sys, a_cells, b_cells, res, r, m):
    """Max-flow assignment on cell-permuting systems; returns pieces or None."""
    table = move_table(sys, res, r)
    net = FlowNetwork()
    net.node("src")
    arcs = []
    for a in a_cells:
        net.add_edge("src", ("a", a), 1)
        for b, s in table[a]:
            if b in b_cells:
                arcs.append((a, b, s, net.add_edge(("a", a), ("b", b), 1)))
    for b in sorted(b_cells):
        net.add_edge(("b", b), "sink", m + 1)
    net.node("sink")
    if net.max_flow("src", "sink") < len(a_cells):
        return None
    load: dict = {}
    chosen = []
    for a, b, s, eid in arcs:
        if net.flow(eid):
            color = load.get(b, 0)
            load[b] = color + 1
            chosen.append((a, s, color))
    return chosen


def _assign_backtrack(sys, a_cells, B, res, moves, m, node_budget):
    """Budgeted exact search; returns (pieces | None, exhausted_budget)."""
    img_res = sys.join_all([B.resolution] + [sys.act_resolution(s, res) for s in moves])
    b_cells = B.refine(img_res).cells
    options = {}
    for a in a_cells:
        opts = []
        single = ClopenSet(sys, res, frozenset([a]))
        for s in moves:
            img = act(s, single).refine(img_res).cells
            if img <= b_cells:
                opts.append((s, img))
        options[a] = opts
    order = sorted(a_cells, key=lambda a: (len(options[a]), a))
    used = [set() for _ in range(m + 1)]
    chosen = []
    nodes = 0

    def place(pos):
        nonlocal nodes
        if pos == len(order):
            return True
        a = order[pos]
        for s, img in options[a]:
            for color in range(m + 1):
                nodes += 1
                if nodes > node_budget:
                    raise _Budget
                if used[color].isdisjoint(img):
                    used[color].update(img)
                    chosen.append((a, s, color))
                    if place(pos + 1):
                        return True
                    chosen.pop()
                    used[color].difference_update(img)
        return False

    try:
        ok = place(0)
    except _Budget:
        return None, True
    return (chosen if ok else None), False


class _Budget(Exception):
    pass


def _merge(sys, res, chosen, m) -> ComparisonWitness:
    groups: dict = {}
    for a, s, color in chosen:
        groups.setdefault((s, color), []).append(a)
    pieces = [
        Piece(ClopenSet(sys, res, frozenset(cells)), s, color)
        for (s, color), cells in sorted(groups.items(), key=lambda kv: (min(kv[1]), kv[0][1]))
    ]
    return ComparisonWitness(sys, tuple(pieces), m)


def find_witness(
    A: ClopenSet,
    B: ClopenSet,
    m: int = 0,
    radius: int = 8,
    max_resolution: int | None = None,
    max_radius: int | None = None,
    node_budget: int = 200_000,
) -> SearchResult:
    """Semi-decision search for a witness of ``A ≺_m B``.

    ``radius`` is the starting translation radius and ``max_resolution`` /
    ``max_radius`` cap the escalation.  A ``STRUCTURAL`` result means the
    exact feasibility check failed at the top stage; ``BUDGET`` means the node
    budget ran out.  Neither is a disproof of comparison.
    """
    sys = A.system
    if B.system != sys:
        raise InvalidInput("A and B live on different systems")
    if m < 0 or radius < 0:
        raise InvalidInput("m and radius must be nonnegative")
    budgets = {"m": m, "radius": radius, "max_radius": max_radius if max_radius is not None else radius,
               "max_resolution": max_resolution, "node_budget": node_budget}
    try:
        margin = measure_margin(A, B)
    except Unsupported:
        margin = None
    if margin is not None and margin <= 0:
        log.warning("measure margin %s is not positive; comparison may be impossible", margin)
    if A.is_empty():
        return SearchResult(FOUND, ComparisonWitness(sys, (), m), budgets, [], margin)

    group = sys.group
    base = sys.join(A.resolution, B.resolution)
    stages = []
    last = STRUCTURAL
    for res, r in escalation(sys, base, radius, max_resolution, max_radius):
        a_cells = sorted(A.refine(res).cells)
        if sys.cell_permuting:
            b_cells = B.refine(res).cells
            chosen = _assign_flow(sys, a_cells, b_cells, res, r, m)
            outcome = FOUND if chosen is not None else STRUCTURAL
        else:
            moves = translations(group, r)
            chosen, exhausted = _assign_backtrack(sys, a_cells, B, res, moves, m, node_budget)
            outcome = FOUND if chosen is not None else (BUDGET if exhausted else STRUCTURAL)
        stages.append({"resolution": sys.resolution_to_json(res), "radius": r, "outcome": outcome})
        if chosen is not None:
            return SearchResult(FOUND, _merge(sys, res, chosen, m), budgets, stages, margin)
        last = outcome
    return SearchResult(last, None, budgets, stages, margin)


def disjointify_cover(pieces: Sequence, A: ClopenSet, m: int | None = None) -> ComparisonWitness:
    """Turn a cover of ``A`` into a partition, earlier pieces keeping shared points.

    Each entry is ``(U, s, color)``; piece ``k`` becomes ``(U_k ∩ A) ∖ ⋃_{l<k} U_l``.
    """
    sys = A.system
    pieces = [p if isinstance(p, Piece) else Piece(*p) for p in pieces]
    if m is None:
        m = max((p.color for p in pieces), default=0)
    union = sys.empty(A.resolution)
    out = []
    for p in pieces:
        part = (p.U & A) - union
        union = union | p.U
        if part:
            out.append(Piece(part, p.s, p.color))
    if not A.issubset(union):
        raise InvalidInput("pieces do not cover A")
    return ComparisonWitness(sys, tuple(out), m)


def compose_witnesses(w1: ComparisonWitness, w2: ComparisonWitness) -> ComparisonWitness:
    """From ``A ≺_{m1} B`` and ``B ≺_{m2} C`` build ``A ≺_{(m1+1)(m2+1)-1} C``.

    Pieces are ``U ∩ s⁻¹W`` with translation ``t s``; color pairs are flattened.
    Compositions are kept unreduced.
    """
    sys = w1.system
    if w2.system != sys:
        raise InvalidInput("witnesses live on different systems")
    group = sys.group
    out = []
    for p in w1.pieces:
        image = act(p.s, p.U)
        for q in w2.pieces:
            meet = image & q.U
            if meet:
                U = act(group.inv(p.s), meet)
                out.append(Piece(U, group.mul(q.s, p.s), p.color * (w2.m + 1) + q.color))
    return ComparisonWitness(sys, tuple(out), (w1.m + 1) * (w2.m + 1) - 1)
