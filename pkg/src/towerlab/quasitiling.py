"""Ornstein–Weiss quasitilings and exact tilings for ladder groups.

A quasitiling of a finite set ``E`` places right translates ``T_i c`` of nested
tiles inside ``E`` so that, after shrinking each tile by at most a ``β``
fraction, the translates become pairwise disjoint, while together they cover at
least ``(1-β)|E|``.  The construction here is the greedy one: scales are
processed from the largest tile down, centers are scanned in lexicographic
order, and a center is accepted when at least ``(1-β)|T_i|`` of its tile is not
yet covered.  The uncovered part is stored as the shrunk tile, which makes the
β-disjointness witness explicit.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .errors import AlgorithmIncomplete, InvalidInput, InvarianceViolation, Unsupported
from .group import FiniteGroupSet, Group, LatticeGroup, folner_defect, t_boundary


def plan_scales(beta) -> int:
    """Smallest ``n`` with ``(1 - β/2)^n < β``."""
    beta = Fraction(beta)
    if not 0 < beta < Fraction(1, 2):
        raise InvalidInput(f"beta must lie in (0, 1/2), got {beta}")
    ratio = 1 - beta / 2
    n, value = 1, ratio
    while value >= beta:
        n += 1
        value *= ratio
    return n


@dataclass(frozen=True)
class TileSystem:
    tiles: tuple
    beta: Fraction
    validate: bool = True

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(self.tiles))
        object.__setattr__(self, "beta", Fraction(self.beta))
        if not self.tiles:
            raise InvalidInput("a tile system needs at least one tile")
        if self.validate:
            problems = self.violations()
            if problems:
                raise InvalidInput("invalid tile system: " + "; ".join(problems))

    @property
    def group(self) -> Group:
        return self.tiles[0].group

    def __len__(self):
        return len(self.tiles)

    def violations(self) -> list:
        beta, tiles = self.beta, self.tiles
        out = []
        if not 0 < beta < Fraction(1, 2):
            out.append(f"beta {beta} outside (0, 1/2)")
        if self.group.identity() not in tiles[0]:
            out.append("identity not in T_1")
        for i in range(1, len(tiles)):
            if not tiles[i - 1].issubset(tiles[i]):
                out.append(f"T_{i} is not contained in T_{i + 1}")
                continue
            boundary = len(t_boundary(tiles[i - 1], tiles[i]))
            if boundary > beta / 8 * len(tiles[i]):
                out.append(f"|∂_T{i} T{i + 1}| = {boundary} > (β/8)|T{i + 1}| = {beta / 8 * len(tiles[i])}")
        if (1 - beta / 2) ** len(tiles) >= beta:
            out.append(f"(1-β/2)^{len(tiles)} >= β; need at least {plan_scales(beta)} scales")
        return out

    def to_json(self):
        return {"beta": str(self.beta), "tiles": [t.to_json() for t in self.tiles]}


def tile_system_from_chain(chain: Sequence[FiniteGroupSet], beta) -> TileSystem:
    """Pick a valid tile system from an increasing chain of candidate tiles.

    The top tile is the largest candidate; each lower tile is the largest
    candidate satisfying the boundary condition against the one above it,
    falling back to ``{e}`` (whose boundary is always empty).
    """
    beta = Fraction(beta)
    n = plan_scales(beta)
    chain = list(chain)
    if not chain:
        raise InvalidInput("empty candidate chain")
    group = chain[0].group
    singleton = FiniteGroupSet(group, [group.identity()])
    tiles = [chain[-1]]
    while len(tiles) < n:
        top = tiles[-1]
        pick = singleton
        for cand in reversed(chain):
            if len(cand) >= len(top) or not cand.issubset(top) or group.identity() not in cand:
                continue
            if len(t_boundary(cand, top)) <= beta / 8 * len(top):
                pick = cand
                break
        tiles.append(pick)
    return TileSystem(tuple(reversed(tiles)), beta)


def interval_chain(group: Group, max_length: int) -> list:
    return [FiniteGroupSet(group, range(length)) for length in range(1, max_length + 1)]


def box_chain(group: LatticeGroup, max_side: int) -> list:
    return [
        FiniteGroupSet(group, itertools.product(range(side), repeat=group.d))
        for side in range(1, max_side + 1)
    ]


@dataclass(frozen=True)
class Placement:
    scale: int  # 1-based tile index
    center: object
    kept: FiniteGroupSet  # T'_c ⊆ T_scale


@dataclass
class QuasiTiling:
    E: FiniteGroupSet
    system: TileSystem
    placements: list = field(default_factory=list)

    def centers(self, scale: int) -> FiniteGroupSet:
        return FiniteGroupSet(self.E.group, (p.center for p in self.placements if p.scale == scale))

    def tile(self, p: Placement) -> FiniteGroupSet:
        return self.system.tiles[p.scale - 1].rtranslate(p.center)

    def covered(self) -> FiniteGroupSet:
        out = set()
        for p in self.placements:
            out.update(self.tile(p))
        return FiniteGroupSet(self.E.group, out)

    def coverage(self) -> Fraction:
        return Fraction(len(self.covered() & self.E), len(self.E))

    def to_json(self):
        g = self.E.group
        return {
            "beta": str(self.system.beta),
            "E_size": len(self.E),
            "tiles": [t.to_json() for t in self.system.tiles],
            "placements": [
                {"scale": p.scale, "center": g.element_to_json(p.center), "kept": p.kept.to_json()}
                for p in self.placements
            ],
            "centers": {
                str(i): self.centers(i).to_json() for i in range(1, len(self.system) + 1)
            },
            "coverage": str(self.coverage()),
        }


def check_quasitiling(q: QuasiTiling) -> list:
    """Return the list of violated quasitiling invariants (empty when valid)."""
    beta = q.system.beta
    group = q.E.group
    problems = []
    seen = set()
    for idx, p in enumerate(q.placements):
        tile = q.system.tiles[p.scale - 1]
        if not q.tile(p).issubset(q.E):
            problems.append(f"placement {idx}: tile not inside E")
        if not p.kept.issubset(tile):
            problems.append(f"placement {idx}: shrunk tile not inside T_{p.scale}")
        if len(p.kept) < (1 - beta) * len(tile):
            problems.append(f"placement {idx}: shrunk tile keeps {len(p.kept)}/{len(tile)} < 1-β")
        piece = {group.mul(t, p.center) for t in p.kept}
        if piece & seen:
            problems.append(f"placement {idx}: shrunk tile overlaps an earlier one")
        seen |= piece
    if q.coverage() < 1 - beta:
        problems.append(f"coverage {q.coverage()} < 1-β = {1 - beta}")
    return problems


def quasitile(E: FiniteGroupSet, system: TileSystem, check_preconditions: bool = True,
              rng: random.Random | None = None) -> QuasiTiling:
    """Greedy β-disjoint, (1-β)-covering quasitiling of ``E``.

    With ``check_preconditions`` the set ``E`` must be ``(T_n, β/4)``-invariant
    and the coverage guarantee is enforced; without it the run is exploratory
    and the coverage is merely reported.  Centers are scanned in lexicographic
    order unless ``rng`` is given, in which case the order is shuffled.
    """
    if not E:
        raise InvalidInput("cannot quasitile an empty set")
    beta = system.beta
    group = E.group
    if check_preconditions:
        defect = folner_defect(E, system.tiles[-1])
        if defect >= beta / 4:
            raise InvarianceViolation(
                f"E is not (T_n, β/4)-invariant: defect {defect} >= {beta / 4}", defect=defect
            )
    elems = E.as_frozenset()
    covered = set()
    placements = []
    for scale in range(len(system), 0, -1):
        tile = system.tiles[scale - 1]
        need = (1 - beta) * len(tile)
        candidates = sorted(c for c in elems if all(group.mul(t, c) in elems for t in tile))
        if rng is not None:
            rng.shuffle(candidates)
        for c in candidates:
            fresh = [t for t in tile if group.mul(t, c) not in covered]
            if len(fresh) >= need:
                placements.append(Placement(scale, c, FiniteGroupSet(group, fresh)))
                covered.update(group.mul(t, c) for t in tile)
    q = QuasiTiling(E, system, placements)
    if check_preconditions:
        problems = check_quasitiling(q)
        if problems:
            raise AlgorithmIncomplete("quasitiling guarantee failed: " + "; ".join(problems))
    return q


def quasitiling_from_centers(E: FiniteGroupSet, system: TileSystem, centers: Sequence) -> QuasiTiling:
    """Build a quasitiling from explicit ``(scale, center)`` pairs in acceptance order."""
    group = E.group
    covered = set()
    placements = []
    for scale, c in centers:
        tile = system.tiles[scale - 1]
        fresh = [t for t in tile if group.mul(t, c) not in covered]
        placements.append(Placement(scale, c, FiniteGroupSet(group, fresh)))
        covered.update(group.mul(t, c) for t in tile)
    return QuasiTiling(E, system, placements)


def disjointify(q: QuasiTiling) -> list:
    """Pairwise disjoint shrunk tiles ``T'_c c``; earlier placements keep contested points."""
    beta = q.system.beta
    kept = set()
    out = []
    for idx, p in enumerate(q.placements):
        tile = q.tile(p)
        piece = tile - kept
        if len(piece) < (1 - beta) * len(tile):
            raise InvalidInput(
                f"placement {idx} retains {len(piece)}/{len(tile)} points, below 1-β; input is not β-disjoint"
            )
        out.append(piece)
        kept |= piece.as_frozenset()
    return out


@dataclass(frozen=True)
class ExactTiling:
    """A shape ``F`` and a center subgroup ``C`` with ``G = ⊔_{c∈C} F c``."""

    shape: FiniteGroupSet
    is_center: Callable

    def owner(self, g):
        """The unique ``(f, c)`` with ``g = f c``, or ``None`` if there is none or several."""
        group = self.shape.group
        hits = [(f, group.mul(group.inv(f), g)) for f in self.shape]
        hits = [(f, c) for f, c in hits if self.is_center(c)]
        return hits[0] if len(hits) == 1 else None

    def verify_window(self, window: FiniteGroupSet) -> list:
        """Elements of ``window`` not covered exactly once."""
        return [g for g in window if self.owner(g) is None]


def exact_tiling_ladder(group: Group, k: int) -> ExactTiling:
    """Tile by the fundamental domain ``F_k`` with centers ``N_k``."""
    ladder = group.ladder
    if ladder is None:
        raise Unsupported(f"group kind {group.kind} has no quotient ladder")
    shape = ladder.representatives(k)
    return ExactTiling(shape, lambda c: ladder.in_subgroup(c, k))


def exact_tiling_boxes(group: LatticeGroup, side: int) -> ExactTiling:
    """Tile ``Z^d`` by the box ``{0..side-1}^d`` with centers ``(side Z)^d``."""
    if side < 1:
        raise InvalidInput("box side must be positive")
    shape = FiniteGroupSet(group, itertools.product(range(side), repeat=group.d))
    return ExactTiling(shape, lambda c: all(x % side == 0 for x in c))
