from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.amdim import build_simplex_map, defect_bound, equivariance_defect
from towerlab.cantor import odometer, thue_morse
from towerlab.errors import InvalidInput, LebesgueFailure
from towerlab.group import FiniteGroupSet, IntegerGroup, interval
from towerlab.towers import Castle, Tower, double_castle, first_return_decomposition

Z = IntegerGroup()
O2 = odometer(2)
F1 = interval(Z, -1, 1)


def doubled(depth, N):
    size = 2**depth
    return double_castle(Castle((Tower(O2.cell_set(depth, [0]), interval(Z, 0, size - 1)),)), N)


def brute_phi(ts, n, depth):
    """Point-wise φ on residues mod 2^depth for interval shapes and F = {-1, 0, 1}."""
    size = 2**depth
    out = {}
    for x in range(size):
        acc = {}
        for tower in ts.towers:
            lo, hi = min(tower.shape), max(tower.shape)
            m = 2**tower.base.resolution
            for t in tower.shape:
                if (x - t) % m in tower.base.cells:
                    k = min(t - lo, hi - t, n)
                    if k:
                        acc[t] = acc.get(t, 0) + Fraction(k, n)
        H = sum(acc.values())
        out[x] = {t: w / H for t, w in acc.items()}
    return out


def brute_defect(phi, size):
    worst = Fraction(0)
    for x in range(size):
        for s in (-1, 0, 1):
            there, here = phi[(x + s) % size], phi[x]
            moved = {u + s: w for u, w in here.items()}
            total = sum(abs(there.get(u, 0) - moved.get(u, 0)) for u in set(there) | set(moved))
            worst = max(worst, total)
    return worst


def test_acceptance_instance_matches_brute_force():
    ts = doubled(8, 128)
    phi = build_simplex_map(ts, F1, 61)
    oracle = brute_phi(ts, 61, 8)
    for x in range(256):
        assert dict(phi.value(x % 2**phi.resolution, phi.resolution)) == oracle[x]
    d = equivariance_defect(phi, F1)
    assert d == brute_defect(oracle, 256) == Fraction(1, 31)
    assert d <= defect_bound(1, 61) == Fraction(6, 61)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 31), st.integers(2, 8))
def test_doubled_castles_match_brute_force(N, n):
    ts = doubled(5, N)
    try:
        phi = build_simplex_map(ts, F1, n)
    except LebesgueFailure:
        oracle_ok = False
    else:
        oracle_ok = True
        oracle = brute_phi(ts, n, 5)
        assert all(dict(phi.value(x % 2**phi.resolution, phi.resolution)) == oracle[x] for x in range(32))
        assert all(sum(w for _, w in v) == 1 for v in phi.vectors.values())
        assert phi.max_support() <= phi.support_bound == 2
        d = equivariance_defect(phi, F1)
        assert d == brute_defect(oracle, 32)
        assert d <= defect_bound(phi.support_bound - 1, n)
    # oracle: every residue sits in a level t with F^n t inside the shape
    covered = all(
        any(min(t, 31 - t) >= n for t in range(32) if (x - t) % 32 in (0, (-N) % 32)) for x in range(32)
    )
    assert oracle_ok == covered


def test_point_mass_for_trivial_F():
    c = Castle((Tower(O2.cell_set(3, [0]), interval(Z, 0, 7)),))
    E = FiniteGroupSet(Z, [0])
    phi = build_simplex_map(c, E, 2)
    for cell, vec in phi.vectors.items():
        assert vec == ((cell, Fraction(1)),)
    assert equivariance_defect(phi, E) == 0


def test_first_return_castle_needs_lebesgue():
    tm = thue_morse()
    fr = first_return_decomposition(tm, tm.cylinder("0"))
    with pytest.raises(LebesgueFailure):
        build_simplex_map(fr, F1, 2)
    phi = build_simplex_map(fr, FiniteGroupSet(Z, [0]), 2)
    assert phi.max_support() == 1


def test_bad_inputs():
    ts = doubled(5, 8)
    with pytest.raises(InvalidInput):
        build_simplex_map(ts, F1, 1)
    with pytest.raises(InvalidInput):
        build_simplex_map(ts, interval(Z, 0, 1), 3)


def test_json_shape():
    phi = build_simplex_map(doubled(5, 16), F1, 4)
    data = phi.to_json()
    assert data["support_bound"] == 2 and data["max_support"] <= 2
    assert all(sum(Fraction(w) for _, w in c["vector"]) == 1 for c in data["cells"])
