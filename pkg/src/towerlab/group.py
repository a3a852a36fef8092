"""Finitely generated amenable groups, finite subsets, and Følner calculus.

Elements are stored in canonical coordinates so that equality and hashing are
exact:

* ``Z``: a Python ``int``.
* ``Zd``: a tuple of ``d`` ints.
* ``Heisenberg``: a tuple ``(a, b, c)`` for the upper unitriangular matrix
  ``[[1, a, c], [0, 1, b], [0, 0, 1]]``, so ``(a,b,c)(a',b',c') = (a+a', b+b', c+c'+ab')``.
* ``Lamplighter``: a pair ``(pos, lamps)`` with ``lamps`` a sorted tuple of lit
  positions; ``(p, f)(q, g) = (p+q, f Δ (g+p))``.

A ``QuotientLadder`` wraps one of the residually finite kinds together with a
chain of finite-index normal subgroups ``N_1 ⊇ N_2 ⊇ …`` (diagonal congruence
subgroups), used by odometers and exact tilings.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import InvalidInput, ResourceExhausted, Unsupported, WindowExceeded, cell_cap, check_cap


class Group:
    """Interface implemented by every built-in group kind."""

    kind: str = "abstract"
    ladder = None

    def identity(self):
        raise NotImplementedError

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, g):
        raise NotImplementedError

    def generators(self) -> tuple:
        raise NotImplementedError

    def element_to_json(self, g):
        raise NotImplementedError

    def element_from_json(self, obj):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def random_element(self, rng: random.Random, size: int = 10):
        g = self.identity()
        gens = self.generators()
        for _ in range(rng.randint(0, size)):
            g = self.mul(g, rng.choice(gens))
        return g

    def folner_candidates(self) -> Iterator["FiniteGroupSet"]:
        raise Unsupported(f"no built-in Følner sequence for group kind {self.kind}")

    def is_abelian(self) -> bool:
        return False

    def conj(self, g, h):
        return self.mul(self.mul(g, h), self.inv(g))

    def __str__(self):
        return self.kind


@dataclass(frozen=True)
class IntegerGroup(Group):
    kind = "Z"

    def identity(self):
        return 0

    def mul(self, a, b):
        return a + b

    def inv(self, g):
        return -g

    def generators(self):
        return (1, -1)

    def is_abelian(self):
        return True

    def element_to_json(self, g):
        return g

    def element_from_json(self, obj):
        if isinstance(obj, list) and len(obj) == 1:
            obj = obj[0]
        if isinstance(obj, bool) or not isinstance(obj, int):
            raise InvalidInput(f"Z element must be an integer, got {obj!r}")
        return obj

    def to_json(self):
        return {"kind": "Z"}

    def folner_candidates(self):
        for length in itertools.count(1):
            check_cap(length, "Følner candidate")
            yield FiniteGroupSet(self, range(length))


@dataclass(frozen=True)
class LatticeGroup(Group):
    d: int = 2
    kind = "Zd"

    def __post_init__(self):
        if self.d < 1:
            raise InvalidInput("Zd requires d >= 1")

    def identity(self):
        return (0,) * self.d

    def mul(self, a, b):
        return tuple(x + y for x, y in zip(a, b))

    def inv(self, g):
        return tuple(-x for x in g)

    def generators(self):
        gens = []
        for i in range(self.d):
            e = [0] * self.d
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return tuple(gens)

    def is_abelian(self):
        return True

    def element_to_json(self, g):
        return list(g)

    def element_from_json(self, obj):
        if isinstance(obj, int) and self.d == 1:
            obj = [obj]
        if not isinstance(obj, list) or len(obj) != self.d or not all(isinstance(x, int) for x in obj):
            raise InvalidInput(f"Z^{self.d} element must be a list of {self.d} integers, got {obj!r}")
        return tuple(obj)

    def to_json(self):
        return {"kind": "Zd", "d": self.d}

    def folner_candidates(self):
        for length in itertools.count(1):
            check_cap(length**self.d, "Følner candidate")
            yield FiniteGroupSet(self, itertools.product(range(length), repeat=self.d))


@dataclass(frozen=True)
class HeisenbergGroup(Group):
    kind = "Heisenberg"

    def identity(self):
        return (0, 0, 0)

    def mul(self, a, b):
        return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + a[0] * b[1])

    def inv(self, g):
        a, b, c = g
        return (-a, -b, -c + a * b)

    def generators(self):
        return ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))

    def element_to_json(self, g):
        return list(g)

    def element_from_json(self, obj):
        if not isinstance(obj, list) or len(obj) != 3 or not all(isinstance(x, int) for x in obj):
            raise InvalidInput(f"Heisenberg element must be [a, b, c], got {obj!r}")
        return tuple(obj)

    def to_json(self):
        return {"kind": "Heisenberg"}

    def folner_candidates(self):
        # boxes [0,L)^2 x [0,L^2) in matrix coordinates
        for length in itertools.count(1):
            check_cap(length**4, "Følner candidate")
            yield FiniteGroupSet(
                self,
                itertools.product(range(length), range(length), range(length * length)),
            )


@dataclass(frozen=True)
class LamplighterGroup(Group):
    """Z/2 ≀ Z with lamps confined to ``[-window, window]``."""

    window: int = 16
    kind = "Lamplighter"

    def _checked(self, pos, lamps):
        if lamps and (lamps[0] < -self.window or lamps[-1] > self.window):
            raise WindowExceeded(
                f"lamplighter lamp outside window [-{self.window}, {self.window}]: {lamps}"
            )
        return (pos, lamps)

    def identity(self):
        return (0, ())

    def mul(self, a, b):
        p, f = a
        q, g = b
        lamps = set(f)
        lamps.symmetric_difference_update(x + p for x in g)
        return self._checked(p + q, tuple(sorted(lamps)))

    def inv(self, g):
        p, f = g
        return self._checked(-p, tuple(x - p for x in f))

    def generators(self):
        return ((1, ()), (-1, ()), (0, (0,)))

    def element_to_json(self, g):
        return {"pos": g[0], "lamps": list(g[1])}

    def element_from_json(self, obj):
        if not isinstance(obj, dict) or "pos" not in obj:
            raise InvalidInput(f"lamplighter element must be {{'pos': p, 'lamps': [...]}}, got {obj!r}")
        lamps = tuple(sorted(set(obj.get("lamps", []))))
        return self._checked(int(obj["pos"]), lamps)

    def to_json(self):
        return {"kind": "Lamplighter", "window": self.window}

    def folner_candidates(self):
        # inverses of the right-Følner sets {(p, f): 0 <= p < L, supp f ⊆ [0, L)}
        for length in itertools.count(1):
            if length - 1 > self.window:
                raise ResourceExhausted("lamplighter Følner candidates exceed the support window")
            check_cap(length * 2**length, "Følner candidate")
            right = []
            for p in range(length):
                for bits in itertools.product((0, 1), repeat=length):
                    right.append((p, tuple(i for i, bit in enumerate(bits) if bit)))
            yield FiniteGroupSet(self, (self.inv(g) for g in right))


@dataclass(frozen=True)
class LadderGroup(Group):
    """A residually finite base group with a chain of congruence subgroups.

    ``N_k`` consists of the elements all of whose coordinates are divisible by
    ``modulus(k)``.  Either ``mod`` (giving ``modulus(k) = mod**k`` for every
    depth) or an explicit divisibility chain ``moduli`` (``modulus(k) =
    moduli[k-1]``, finite depth) must be supplied.
    """

    base: Group = IntegerGroup()
    mod: int | None = None
    moduli: tuple | None = None
    kind = "QuotientLadder"

    def __post_init__(self):
        if not isinstance(self.base, (IntegerGroup, LatticeGroup, HeisenbergGroup)):
            raise Unsupported(f"no congruence ladder for base group {self.base.kind}")
        if (self.mod is None) == (self.moduli is None):
            raise InvalidInput("QuotientLadder needs exactly one of 'mod' or 'moduli'")
        if self.mod is not None and self.mod < 2:
            raise InvalidInput("ladder modulus must be at least 2")
        if self.moduli is not None:
            prev = 1
            for m in self.moduli:
                if m <= prev or m % prev:
                    raise InvalidInput(f"ladder moduli must strictly increase by divisibility: {self.moduli}")
                prev = m

    @property
    def ladder(self):
        return self

    @property
    def depth(self):
        return None if self.moduli is None else len(self.moduli)

    def modulus(self, k: int) -> int:
        if k < 0:
            raise InvalidInput("ladder depth must be nonnegative")
        if self.depth is not None and k > self.depth:
            raise InvalidInput(f"ladder defined only to depth {self.depth}, requested {k}")
        if k == 0:
            return 1
        return self.mod**k if self.mod is not None else self.moduli[k - 1]

    def index(self, k: int) -> int:
        m = self.modulus(k)
        if isinstance(self.base, IntegerGroup):
            return m
        if isinstance(self.base, LatticeGroup):
            return m**self.base.d
        return m**3

    def reduce(self, g, k: int):
        """Canonical representative of the coset ``g N_k``."""
        m = self.modulus(k)
        if isinstance(self.base, IntegerGroup):
            return g % m
        return tuple(x % m for x in g)

    def in_subgroup(self, g, k: int) -> bool:
        return self.reduce(g, k) == self.identity()

    def representatives(self, k: int) -> "FiniteGroupSet":
        """The fundamental domain ``F_k`` of canonical coset representatives."""
        m = self.modulus(k)
        check_cap(self.index(k), "coset representatives")
        if isinstance(self.base, IntegerGroup):
            return FiniteGroupSet(self, range(m))
        dim = self.base.d if isinstance(self.base, LatticeGroup) else 3
        return FiniteGroupSet(self, itertools.product(range(m), repeat=dim))

    def identity(self):
        return self.base.identity()

    def mul(self, a, b):
        return self.base.mul(a, b)

    def inv(self, g):
        return self.base.inv(g)

    def generators(self):
        return self.base.generators()

    def is_abelian(self):
        return self.base.is_abelian()

    def element_to_json(self, g):
        return self.base.element_to_json(g)

    def element_from_json(self, obj):
        return self.base.element_from_json(obj)

    def to_json(self):
        out = {"kind": "QuotientLadder", "base": self.base.to_json()}
        if self.mod is not None:
            out["mod"] = self.mod
        else:
            out["moduli"] = list(self.moduli)
        return out

    def folner_candidates(self):
        for k in itertools.count(0):
            if self.depth is not None and k > self.depth:
                return
            yield self.representatives(k)

    def same_arithmetic(self, other: Group) -> bool:
        return arithmetic_of(other) == self.base


def arithmetic_of(group: Group) -> Group:
    """The underlying group, stripping any ladder decoration."""
    return group.base if isinstance(group, LadderGroup) else group


def group_from_json(obj) -> Group:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidInput(f"group descriptor must be an object with a 'kind', got {obj!r}")
    kind = obj["kind"]
    if kind == "Z":
        return IntegerGroup()
    if kind == "Zd":
        return LatticeGroup(int(obj.get("d", 2)))
    if kind == "Heisenberg":
        return HeisenbergGroup()
    if kind == "Lamplighter":
        return LamplighterGroup(int(obj.get("window", 16)))
    if kind == "QuotientLadder":
        base = group_from_json(obj.get("base", {"kind": "Z"}))
        moduli = obj.get("moduli")
        return LadderGroup(base, obj.get("mod"), tuple(moduli) if moduli is not None else None)
    raise InvalidInput(f"unknown group kind {kind!r}")


class FiniteGroupSet:
    """An immutable finite subset of a group with exact set algebra."""

    __slots__ = ("group", "_elems", "_sorted")

    def __init__(self, group: Group, elements: Iterable = ()):
        self.group = group
        self._elems = frozenset(elements)
        self._sorted = None

    @property
    def elements(self) -> tuple:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._elems))
        return self._sorted

    def as_frozenset(self) -> frozenset:
        return self._elems

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self._elems)

    def __contains__(self, g):
        return g in self._elems

    def __bool__(self):
        return bool(self._elems)

    def __eq__(self, other):
        if isinstance(other, FiniteGroupSet):
            return self._elems == other._elems
        return NotImplemented

    def __hash__(self):
        return hash(self._elems)

    def __repr__(self):
        elems = self.elements
        shown = ", ".join(map(repr, elems[:8])) + (", …" if len(elems) > 8 else "")
        return f"FiniteGroupSet({self.group.kind}, {{{shown}}}, size={len(elems)})"

    def _wrap(self, elems):
        return FiniteGroupSet(self.group, elems)

    def _other(self, other):
        return other._elems if isinstance(other, FiniteGroupSet) else frozenset(other)

    def __or__(self, other):
        return self._wrap(self._elems | self._other(other))

    def __and__(self, other):
        return self._wrap(self._elems & self._other(other))

    def __sub__(self, other):
        return self._wrap(self._elems - self._other(other))

    def __xor__(self, other):
        return self._wrap(self._elems ^ self._other(other))

    def issubset(self, other) -> bool:
        return self._elems <= self._other(other)

    def translate(self, g) -> "FiniteGroupSet":
        """Left translate ``gF``."""
        mul = self.group.mul
        return self._wrap(mul(g, x) for x in self._elems)

    def rtranslate(self, g) -> "FiniteGroupSet":
        """Right translate ``Fg``."""
        mul = self.group.mul
        return self._wrap(mul(x, g) for x in self._elems)

    def inverse(self) -> "FiniteGroupSet":
        return self._wrap(self.group.inv(x) for x in self._elems)

    def product(self, other: "FiniteGroupSet") -> "FiniteGroupSet":
        """The product set ``F K = {f k}``."""
        mul = self.group.mul
        check_cap(len(self) * len(other), "product set")
        return self._wrap(mul(a, b) for a in self._elems for b in other._elems)

    def is_symmetric(self) -> bool:
        inv = self.group.inv
        return all(inv(g) in self._elems for g in self._elems)

    def to_json(self):
        return [self.group.element_to_json(g) for g in self.elements]


def group_set_from_json(group: Group, obj) -> FiniteGroupSet:
    if not isinstance(obj, list):
        raise InvalidInput(f"group set must be a JSON list, got {obj!r}")
    return FiniteGroupSet(group, (group.element_from_json(x) for x in obj))


def interval(group: Group, lo: int, hi: int) -> FiniteGroupSet:
    """``{lo, …, hi}`` in a group with integer elements."""
    return FiniteGroupSet(group, range(lo, hi + 1))


def word_lengths(group: Group, r: int) -> dict:
    """Word length of every element of the radius-``r`` ball (BFS)."""
    if r < 0:
        raise InvalidInput("radius must be nonnegative")
    cap = cell_cap()
    e = group.identity()
    dist = {e: 0}
    frontier = deque([e])
    gens = group.generators()
    while frontier:
        g = frontier.popleft()
        dg = dist[g]
        if dg == r:
            continue
        for s in gens:
            h = group.mul(g, s)
            if h not in dist:
                dist[h] = dg + 1
                if len(dist) > cap:
                    raise ResourceExhausted(f"word ball of radius {r} exceeds cap {cap}")
                frontier.append(h)
    return dist


def word_ball(group: Group, r: int) -> FiniteGroupSet:
    return FiniteGroupSet(group, word_lengths(group, r))


def ordered_ball(group: Group, r: int) -> list:
    """Ball elements ordered by (word length, canonical form): the search order for translations."""
    lengths = word_lengths(group, r)
    return sorted(lengths, key=lambda g: (lengths[g], g))


def power(F: FiniteGroupSet, k: int) -> FiniteGroupSet:
    """``F^k`` with ``F^0 = {e}``."""
    out = FiniteGroupSet(F.group, [F.group.identity()])
    for _ in range(k):
        out = out.product(F)
    return out


def folner_defect(F: FiniteGroupSet, K: FiniteGroupSet) -> Fraction:
    """``max_{t∈K} |tF Δ F| / |F|`` as an exact rational."""
    if not F:
        raise InvalidInput("Følner defect of an empty set is undefined")
    elems = F.as_frozenset()
    worst = 0
    mul = F.group.mul
    for t in K:
        moved = frozenset(mul(t, x) for x in elems)
        worst = max(worst, len(moved ^ elems))
    return Fraction(worst, len(elems))


def is_invariant(F: FiniteGroupSet, K: FiniteGroupSet, delta) -> bool:
    """(K, δ)-invariance: ``|tF Δ F| < δ|F|`` for all ``t ∈ K``."""
    return folner_defect(F, K) < Fraction(delta)


def t_boundary(T: FiniteGroupSet, E: FiniteGroupSet) -> FiniteGroupSet:
    """``{g : Tg meets both E and its complement}``."""
    group = T.group
    if group.identity() not in T:
        raise InvalidInput("t_boundary expects a tile containing the identity")
    e_elems = E.as_frozenset()
    candidates = {group.mul(group.inv(t), x) for t in T for x in e_elems}
    out = []
    for g in candidates:
        inside = outside = False
        for t in T:
            if group.mul(t, g) in e_elems:
                inside = True
            else:
                outside = True
            if inside and outside:
                out.append(g)
                break
    return FiniteGroupSet(group, out)


def folner_layering(S: FiniteGroupSet, F: FiniteGroupSet, n: int) -> list:
    """Split ``S`` into layers ``B_0, …, B_n`` by depth of ``F``-interior.

    ``B_n = ∩_{t∈F^n} tS`` and ``B_k = (∩_{t∈F^k} tS) ∖ ∩_{t∈F^{k+1}} tS``.
    """
    if n < 1:
        raise InvalidInput("layering depth n must be positive")
    group = S.group
    if group.identity() not in F or not F.is_symmetric():
        raise InvalidInput("layering requires a symmetric F containing the identity")
    # interiors[k] = ∩_{t∈F^k} tS, computed as ∩_{f∈F} f·interiors[k-1]
    interiors = [S.as_frozenset()]
    for _ in range(n):
        prev = interiors[-1]
        cur = prev
        for f in F:
            cur = cur & frozenset(group.mul(f, x) for x in prev)
        interiors.append(cur)
    layers = [FiniteGroupSet(group, interiors[k] - interiors[k + 1]) for k in range(n)]
    layers.append(FiniteGroupSet(group, interiors[n]))
    return layers


def layer_index(layers: list) -> dict:
    """Map each element to the index of the layer containing it."""
    return {g: k for k, layer in enumerate(layers) for g in layer}


def folner_sequence(group: Group, K: FiniteGroupSet, delta) -> FiniteGroupSet:
    """First built-in candidate set that is (K, δ)-invariant."""
    delta = Fraction(delta)
    if delta <= 0:
        raise InvalidInput("delta must be positive")
    for F in group.folner_candidates():
        if folner_defect(F, K) < delta:
            return F
    raise ResourceExhausted(f"no (K, {delta})-invariant set within the ladder depth of {group.kind}")
