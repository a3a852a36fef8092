"""Approximately equivariant maps ``X -> Δ_d(G)`` built from tower collections.

On a Cantor system the bump functions of the continuous construction can be
taken to be indicators of tower levels.  For a collection ``{(V_i, S_i)}`` with
layering ``B_{i,0}, …, B_{i,n}`` of each shape by ``F``-interior depth, put

    ĥ_{i,t} = (k_i(t)/n) 1_{tV_i}      (t ∈ B_{i,k_i(t)}),
    H = Σ_{i,t} ĥ_{i,t},   φ(x)(t) = Σ_i ĥ_{i,t}(x) / H(x).

``H ≥ 1`` holds exactly when the collection is ``F^n``-Lebesgue.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cantor import CantorSystem
from .errors import AlgorithmIncomplete, InvalidInput, LebesgueFailure
from .group import FiniteGroupSet, folner_layering, layer_index, power
from .towers import TowerCollection, chromatic_number, is_e_lebesgue


@dataclass(frozen=True, eq=False)
class SimplexMap:
    system: CantorSystem
    resolution: object
    vectors: dict  # cell -> ((t, weight), ...) sorted by t
    support_bound: int
    chromatic_exact: bool = True
    H: dict = field(default_factory=dict, repr=False)

    def value(self, cell, res=None) -> tuple:
        """φ on a cell of ``res`` (which must refine the map's resolution)."""
        if res is not None and res != self.resolution:
            if not self.system.refines(res, self.resolution):
                raise InvalidInput(f"resolution {res!r} does not refine {self.resolution!r}")
            cell = self.system.parent(cell, res, self.resolution)
        return self.vectors[cell]

    def max_support(self) -> int:
        return max((len(v) for v in self.vectors.values()), default=0)

    def to_json(self):
        sys = self.system
        g = sys.group
        return {
            "resolution": sys.resolution_to_json(self.resolution),
            "support_bound": self.support_bound,
            "max_support": self.max_support(),
            "cells": [
                {"cell": sys.cell_to_json(c), "vector": [[g.element_to_json(t), str(w)] for t, w in self.vectors[c]]}
                for c in sorted(self.vectors)
            ],
        }


def build_simplex_map(ts: TowerCollection, F: FiniteGroupSet, n: int) -> SimplexMap:
    if n < 2:
        raise InvalidInput("n must be at least 2")
    group = F.group
    if group.identity() not in F or not F.is_symmetric():
        raise InvalidInput("F must be symmetric and contain the identity")
    if not ts.towers:
        raise InvalidInput("empty tower collection")
    leb = is_e_lebesgue(ts, power(F, n))
    if not leb.ok:
        raise LebesgueFailure(f"collection is not F^{n}-Lebesgue at cell {leb.failing_cell!r}", cell=leb.failing_cell)
    chrom = chromatic_number(ts)
    sys = ts.system
    res = leb.resolution
    depth = [layer_index(folner_layering(t.shape, F, n)) for t in ts.towers]
    hits: dict = {}
    for i, tower in enumerate(ts.towers):
        for t in tower.shape:
            k = depth[i][t]
            if not k:
                continue
            for x in tower.level(t).refine(res).cells:
                hits.setdefault(x, []).append((t, Fraction(k, n)))
    vectors, Hs = {}, {}
    for x in sys.cells(res):
        acc: dict = {}
        for t, w in hits.get(x, ()):
            acc[t] = acc.get(t, 0) + w
        H = sum(acc.values(), Fraction(0))
        if H < 1:
            raise AlgorithmIncomplete(f"H = {H} < 1 at cell {x!r} despite the Lebesgue condition")
        vectors[x] = tuple((t, w / H) for t, w in sorted(acc.items()))
        Hs[x] = H
    phi = SimplexMap(sys, res, vectors, chrom.number, chrom.exact, Hs)
    if phi.max_support() > chrom.number:
        raise AlgorithmIncomplete("support exceeds the chromatic bound")
    return phi


def defect_bound(d: int, n: int) -> Fraction:
    """``(d+1)(d+2)/n``."""
    return Fraction((d + 1) * (d + 2), n)


def equivariance_defect(phi: SimplexMap, F: FiniteGroupSet) -> Fraction:
    """``max_{x, s∈F} Σ_t |φ(sx)(t) − φ(x)(s⁻¹t)|`` in exact arithmetic."""
    sys = phi.system
    group = F.group
    if sys.group.identity() != group.identity():
        raise InvalidInput("F does not belong to the acting group")
    res = phi.resolution
    # fine enough that s maps each cell into a single cell of the map's resolution
    fine = sys.join_all([res] + [sys.act_resolution(group.inv(s), res) for s in F])
    worst = Fraction(0)
    for y in sys.cells(fine):
        here = dict(phi.value(y, fine))
        for s in F:
            img = sys.act_cell(s, y, fine)
            there = dict(phi.value(img, sys.act_resolution(s, fine)))
            moved = {group.mul(s, t): w for t, w in here.items()}  # (sφ(x))(u) = φ(x)(s⁻¹u)
            total = Fraction(0)
            for u in set(there) | set(moved):
                total += abs(there.get(u, 0) - moved.get(u, 0))
            worst = max(worst, total)
    return worst
