"""The clopen type semigroup: integer weight functions up to equidecomposability.

A :class:`TypeElement` is a function ``f: X -> Z≥0`` constant on the cells of
one resolution.  ``f ~ g`` when ``f = Σ h_i`` and ``g = Σ s_i·h_i`` for some
``h_i ≥ 0`` and group elements ``s_i``, where ``(s·h)(x) = h(s⁻¹x)``.  On
cell-permuting systems, at a fixed resolution and translation radius, finding
such a decomposition is an integer transportation problem solved by max-flow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .cantor import CantorSystem, ClopenSet
from .comparison import FOUND, STRUCTURAL, escalation, move_table, translations
from .errors import InvalidInput, Unsupported
from .flow import FlowNetwork

STATE = "STATE"


@dataclass(frozen=True, eq=False)
class TypeElement:
    system: CantorSystem
    resolution: object
    items: tuple = ()  # sorted ((cell, weight), ...) with weight > 0
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        items = self.items.items() if isinstance(self.items, dict) else self.items
        clean = {}
        for cell, w in items:
            if isinstance(w, bool) or not isinstance(w, int) or w < 0:
                raise InvalidInput(f"weights must be nonnegative integers, got {w!r}")
            if w:
                clean[cell] = clean.get(cell, 0) + w
        object.__setattr__(self, "items", tuple(sorted(clean.items())))

    __hash__ = None

    @property
    def weights(self) -> dict:
        return dict(self.items)

    def weight(self, cell) -> int:
        return self.weights.get(cell, 0)

    def is_zero(self) -> bool:
        return not self.items

    def support(self) -> ClopenSet:
        return ClopenSet(self.system, self.resolution, frozenset(c for c, _ in self.items))

    def total(self) -> int:
        """Sum of weights at the stored resolution (resolution dependent)."""
        return sum(w for _, w in self.items)

    def max_weight(self) -> int:
        return max((w for _, w in self.items), default=0)

    def refine(self, res) -> "TypeElement":
        if res == self.resolution:
            return self
        sys = self.system
        if not sys.refines(res, self.resolution):
            raise InvalidInput(f"cannot coarsen type element from {self.resolution!r} to {res!r}")
        out = {}
        for c, w in self.items:
            for child in sys.children(c, self.resolution, res):
                out[child] = w
        return TypeElement(sys, res, out)

    def _align(self, other: "TypeElement"):
        if other.system != self.system:
            raise InvalidInput("type elements belong to different systems")
        res = self.system.join(self.resolution, other.resolution)
        return self.refine(res), other.refine(res), res

    def __add__(self, other: "TypeElement") -> "TypeElement":
        a, b, res = self._align(other)
        out = dict(a.items)
        for c, w in b.items:
            out[c] = out.get(c, 0) + w
        return TypeElement(self.system, res, out)

    def __sub__(self, other: "TypeElement") -> "TypeElement":
        a, b, res = self._align(other)
        out = dict(a.items)
        for c, w in b.items:
            if out.get(c, 0) < w:
                raise InvalidInput("difference would be negative")
            out[c] -= w
        return TypeElement(self.system, res, out)

    def scale(self, n: int) -> "TypeElement":
        if n < 0:
            raise InvalidInput("scalar must be nonnegative")
        return TypeElement(self.system, self.resolution, {c: n * w for c, w in self.items})

    def __le__(self, other: "TypeElement") -> bool:
        """Pointwise order (not the algebraic order of the semigroup)."""
        a, b, _ = self._align(other)
        bw = b.weights
        return all(w <= bw.get(c, 0) for c, w in a.items)

    def __eq__(self, other):
        if not isinstance(other, TypeElement):
            return NotImplemented
        if other.system != self.system:
            return False
        a, b, _ = self._align(other)
        return a.items == b.items

    def act(self, s) -> "TypeElement":
        """``(s·f)(x) = f(s⁻¹x)``: the weight on cell ``c`` moves to ``s c``."""
        sys = self.system
        res = sys.act_resolution(s, self.resolution)
        return TypeElement(sys, res, {sys.act_cell(s, c, self.resolution): w for c, w in self.items})

    def layers(self) -> list:
        """``[A_1, A_2, …]`` with ``A_j = {f ≥ j}``, so ``f = Σ 1_{A_j}``."""
        return [
            ClopenSet(self.system, self.resolution, frozenset(c for c, w in self.items if w >= j))
            for j in range(1, self.max_weight() + 1)
        ]

    def to_bounded_set(self) -> list:
        """Rows ``A_j`` of the subset ``⊔_j A_j × {j}`` of ``X × N`` (the layer picture)."""
        return self.layers()

    def to_json(self):
        sys = self.system
        return {
            "resolution": sys.resolution_to_json(self.resolution),
            "weights": [[sys.cell_to_json(c), w] for c, w in self.items],
        }

    def __repr__(self):
        return f"TypeElement(res={self.resolution!r}, weights={dict(self.items)!r})"


def zero(system: CantorSystem, res=None) -> TypeElement:
    return TypeElement(system, system.coarsest() if res is None else res, {})


def indicator(A: ClopenSet) -> TypeElement:
    return TypeElement(A.system, A.resolution, {c: 1 for c in A.cells})


def from_layers(sets: Sequence[ClopenSet]) -> TypeElement:
    """``Σ_j 1_{A_j}``; the sets need not be nested (bounded-subset import)."""
    if not sets:
        raise InvalidInput("need at least one set")
    out = indicator(sets[0])
    for A in sets[1:]:
        out = out + indicator(A)
    return out


from_bounded_set = from_layers


def type_from_json(obj, system: CantorSystem) -> TypeElement:
    if not isinstance(obj, dict) or "weights" not in obj:
        raise InvalidInput("type element JSON needs 'resolution' and 'weights'")
    res = system.resolution_from_json(obj.get("resolution", system.resolution_to_json(system.coarsest())))
    valid = set(system.cells(res))
    weights = {}
    for entry in obj["weights"]:
        if not isinstance(entry, list) or len(entry) != 2:
            raise InvalidInput(f"weight entries are [cell, weight] pairs, got {entry!r}")
        cell = system.cell_from_json(entry[0])
        if cell not in valid:
            raise InvalidInput(f"cell {entry[0]!r} is not valid at resolution {obj.get('resolution')!r}")
        weights[cell] = weights.get(cell, 0) + entry[1]
    return TypeElement(system, res, weights)


def state(f: TypeElement, mu: int = 0) -> Fraction:
    """``μ(f) = Σ_c f(c) μ(c)``."""
    measures = f.system.measures
    if not measures:
        raise Unsupported(f"system {f.system.kind} has no measure oracle")
    if not 0 <= mu < len(measures):
        raise InvalidInput(f"measure index {mu} out of range")
    if mu not in f._memo:
        oracle = measures[mu]
        f._memo[mu] = sum((w * oracle.mass(c, f.resolution) for c, w in f.items), Fraction(0))
    return f._memo[mu]


@dataclass(frozen=True, eq=False)
class EquidecompWitness:
    system: CantorSystem
    terms: tuple = ()  # ((h, s), ...)

    def source(self, res=None) -> TypeElement:
        out = zero(self.system, res)
        for h, _ in self.terms:
            out = out + h
        return out

    def target(self, res=None) -> TypeElement:
        out = zero(self.system, res)
        for h, s in self.terms:
            out = out + h.act(s)
        return out

    def to_json(self):
        g = self.system.group
        return {"terms": [{"h": h.to_json(), "translation": g.element_to_json(s)} for h, s in self.terms]}


@dataclass
class TypeSearchResult:
    status: str
    witness: EquidecompWitness | None
    budgets: dict
    stages: list = field(default_factory=list)
    remainder: TypeElement | None = None  # g - Σ s_i h_i for leq
    separating: dict | None = None  # state gate details

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
            "separating_state": self.separating,
            "witness": None if self.witness is None else self.witness.to_json(),
            "remainder": None if self.remainder is None else self.remainder.to_json(),
        }


def verify_equidecomposition(f: TypeElement, g: TypeElement, w: EquidecompWitness, exact: bool = True) -> bool:
    """``Σ h_i = f`` and ``Σ s_i·h_i = g`` (or ``≤ g`` when ``exact`` is false)."""
    if w.system != f.system or g.system != f.system:
        return False
    if any(any(x < 0 for _, x in h.items) for h, _ in w.terms):
        return False
    if w.source(f.resolution) != f:
        return False
    image = w.target(g.resolution)
    return image == g if exact else image <= g


def _transport(f: TypeElement, g: TypeElement, res, r: int, exact: bool):
    sys = f.system
    fw = f.refine(res).weights
    gw = g.refine(res).weights
    need = sum(fw.values())
    if exact and need != sum(gw.values()):
        return None
    table = move_table(sys, res, r)
    net = FlowNetwork()
    net.node("src")
    arcs = []
    for a in sorted(fw):
        net.add_edge("src", ("a", a), fw[a])
        for b, s in table[a]:
            if b in gw:
                arcs.append((a, s, net.add_edge(("a", a), ("b", b), min(fw[a], gw[b]))))
    for b in sorted(gw):
        net.add_edge(("b", b), "sink", gw[b])
    net.node("sink")
    if net.max_flow("src", "sink") < need:
        return None
    by_move: dict = {}
    for a, s, eid in arcs:
        amount = net.flow(eid)
        if amount:
            by_move.setdefault(s, {})[a] = by_move.get(s, {}).get(a, 0) + amount
    order = {s: i for i, s in enumerate(translations(sys.group, r))}
    terms = tuple((TypeElement(sys, res, h), s) for s, h in sorted(by_move.items(), key=lambda kv: order[kv[0]]))
    return EquidecompWitness(sys, terms)


def _search(f, g, radius, max_resolution, max_radius, exact):
    sys = f.system
    if g.system != sys:
        raise InvalidInput("type elements belong to different systems")
    if not sys.cell_permuting:
        raise Unsupported("transportation search needs a system whose translations permute cells")
    budgets = {"radius": radius, "max_radius": max_radius if max_radius is not None else radius,
               "max_resolution": max_resolution}
    for i in range(len(sys.measures)):
        a, b = state(f, i), state(g, i)
        if (exact and a != b) or (not exact and a > b):
            sep = {"measure": i, "state_f": str(a), "state_g": str(b)}
            return TypeSearchResult(STATE, None, budgets, [], None, sep)
    base = sys.join(f.resolution, g.resolution)
    stages = []
    for res, r in escalation(sys, base, radius, max_resolution, max_radius):
        w = _transport(f, g, res, r, exact)
        stages.append({"resolution": sys.resolution_to_json(res), "radius": r,
                       "outcome": FOUND if w is not None else STRUCTURAL})
        if w is not None:
            remainder = None if exact else g.refine(res) - w.target(res)
            return TypeSearchResult(FOUND, w, budgets, stages, remainder)
    return TypeSearchResult(STRUCTURAL, None, budgets, stages)


def find_equidecomposition(f: TypeElement, g: TypeElement, radius: int = 8,
                           max_resolution: int | None = None, max_radius: int | None = None) -> TypeSearchResult:
    """Search for ``f ~ g``; the state gate rejects pairs separated by an invariant measure."""
    return _search(f, g, radius, max_resolution, max_radius, exact=True)


def leq(f: TypeElement, g: TypeElement, radius: int = 8,
        max_resolution: int | None = None, max_radius: int | None = None) -> TypeSearchResult:
    """Search for ``[f] ≤ [g]``: a witness with ``Σ h_i = f``, ``Σ s_i·h_i ≤ g``, plus the remainder ``c``."""
    return _search(f, g, radius, max_resolution, max_radius, exact=False)


def compose(w1: EquidecompWitness, w2: EquidecompWitness) -> EquidecompWitness:
    """From ``f ≾ g`` (``w1``) and ``g ≾ k`` (``w2``) build ``f ≾ k``.

    Each cell's mass of ``s_i·h_i`` is split across the ``k_j`` in order
    (north-west corner rule); the composed terms are ``(s_i⁻¹ p_ij, t_j s_i)``.
    The result is kept unreduced.
    """
    sys = w1.system
    if w2.system != sys:
        raise InvalidInput("witnesses live on different systems")
    group = sys.group
    images = [(h.act(s), s) for h, s in w1.terms]
    res = sys.join_all([im.resolution for im, _ in images] + [k.resolution for k, _ in w2.terms])
    images = [(im.refine(res).weights, s) for im, s in images]
    splits = [(k.refine(res).weights, t) for k, t in w2.terms]
    left = [dict(kw) for kw, _ in splits]
    pieces: dict = {}
    for i, (iw, s) in enumerate(images):
        for cell, amount in sorted(iw.items()):
            for j, (_, t) in enumerate(splits):
                if not amount:
                    break
                take = min(amount, left[j].get(cell, 0))
                if take:
                    left[j][cell] -= take
                    amount -= take
                    pieces.setdefault((i, j), {})[cell] = take
            if amount:
                raise InvalidInput("second witness does not absorb the image of the first")
    terms = []
    for (i, j), weights in sorted(pieces.items()):
        s, t = images[i][1], splits[j][1]
        p = TypeElement(sys, res, weights)
        terms.append((p.act(group.inv(s)), group.mul(t, s)))
    return EquidecompWitness(sys, tuple(terms))


HOLDS = "HOLDS"
PREMISE_FAILS = "PREMISE_FAILS"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class ProbeReport:
    verdict: str
    n: int
    premise: TypeSearchResult
    conclusion: TypeSearchResult | None

    def to_json(self):
        return {
            "verdict": self.verdict,
            "n": self.n,
            "premise": self.premise.to_json(),
            "conclusion": None if self.conclusion is None else self.conclusion.to_json(),
        }


def probe_almost_unperforation(f: TypeElement, g: TypeElement, n: int, radius: int = 8,
                               max_resolution: int | None = None, max_radius: int | None = None) -> ProbeReport:
    """Test ``(n+1)f ≤ n g ⇒ f ≤ g`` on one pair.

    A found premise with an unfound conclusion is ``INCONCLUSIVE``; the search is
    a semi-decision, so it is never reported as a perforation.
    """
    if n < 1:
        raise InvalidInput("n must be at least 1")
    premise = leq(f.scale(n + 1), g.scale(n), radius, max_resolution, max_radius)
    if not premise.found:
        return ProbeReport(PREMISE_FAILS, n, premise, None)
    conclusion = leq(f, g, radius, max_resolution, max_radius)
    return ProbeReport(HOLDS if conclusion.found else INCONCLUSIVE, n, premise, conclusion)
