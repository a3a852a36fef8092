import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.cantor import ClopenSet, ProductSystem, odometer, thue_morse
from towerlab.errors import CapExceeded, InvalidInput, Unsupported
from towerlab.group import FiniteGroupSet, IntegerGroup, LatticeGroup, interval
from towerlab.towers import (
    Castle,
    Tower,
    TowerCollection,
    castle_from_json,
    chromatic_number,
    double_castle,
    first_return_decomposition,
    is_e_lebesgue,
    is_lebesgue_cover,
    pullback_castle,
    refine_castle_to,
    verify_castle,
)

Z = IntegerGroup()
O2 = odometer(2)


def point_levels(ts, depth):
    """Brute force: for each residue x mod 2^depth the (tower, t) levels containing it."""
    out = {x: [] for x in range(2**depth)}
    for i, tower in enumerate(ts.towers):
        m = 2**tower.base.resolution
        for t in tower.shape:
            for x in out:
                if (x - t) % m in tower.base.cells:
                    out[x].append((i, t))
    return out


def test_single_odometer_tower_partitions():
    c = Castle((Tower(O2.cell_set(3, [0]), interval(Z, 0, 7)),))
    rep = verify_castle(c)
    assert rep.valid and rep.partitions and rep.uncovered == 0


def test_empty_castle():
    rep = verify_castle(Castle((), O2))
    assert rep.valid and not rep.partitions


def test_duplicate_tower_reports_cross_overlap():
    t = Tower(O2.cell_set(3, [0]), interval(Z, 0, 3))
    rep = verify_castle(Castle((t, t)))
    assert not rep.valid and rep.cross_overlaps == [(0, 1)]
    tall = Tower(O2.cell_set(2, [0]), interval(Z, 0, 4))
    rep = verify_castle(Castle((tall,)))
    assert rep.level_overlaps == [(0, 0, 4)]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(1, 6)), min_size=1, max_size=4))
def test_verify_castle_matches_brute_force(layout):
    towers = tuple(Tower(O2.cell_set(4, [c]), interval(Z, 0, h - 1)) for c, h in layout)
    c = Castle(towers, O2)
    hits = point_levels(c, 4)
    overlap = any(len(v) > 1 for v in hits.values())
    rep = verify_castle(c)
    assert rep.valid == (not overlap)
    assert rep.partitions == all(len(v) == 1 for v in hits.values())


def test_lebesgue_examples():
    E = interval(Z, -1, 1)
    single = Castle((Tower(O2.cell_set(4, [0]), interval(Z, 0, 15)),))
    res = is_e_lebesgue(single, E)
    assert not res.ok and res.failing_cell in (0, 15)
    assert is_e_lebesgue(single, FiniteGroupSet(Z, [0])).ok
    base = Castle((Tower(O2.cell_set(6, [0]), interval(Z, 0, 63)),))
    assert is_e_lebesgue(double_castle(base, 4), E).ok
    assert not is_e_lebesgue(double_castle(base, 64), E).ok


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(0, 2))
def test_lebesgue_matches_brute_force(N, radius):
    E = interval(Z, -radius, radius)
    ts = double_castle(Castle((Tower(O2.cell_set(4, [0]), interval(Z, 0, 15)),)), N)
    hits = point_levels(ts, 4)
    expect = all(
        any(all(0 <= e + t <= 15 for e in E) for _, t in v) for v in hits.values()
    )
    assert is_e_lebesgue(ts, E).ok == expect
    if expect:
        assert is_lebesgue_cover(ts, E).ok


def test_chromatic_examples():
    disjoint = Castle((Tower(O2.cell_set(2, [0]), interval(Z, 0, 1)), Tower(O2.cell_set(2, [2]), interval(Z, 0, 1))))
    assert chromatic_number(disjoint).number == 1
    clique = TowerCollection(tuple(Tower(O2.cell_set(2, [0]), interval(Z, 0, k)) for k in range(4)))
    assert chromatic_number(clique).number == 4
    base = Castle((Tower(O2.cell_set(6, [0]), interval(Z, 0, 63)),))
    assert chromatic_number(double_castle(base, 4)).number == 2


def brute_chromatic(adj):
    n = len(adj)
    for k in range(1, n + 1):
        for colors in itertools.product(range(k), repeat=n):
            if all(colors[i] != colors[j] for i in range(n) for j in adj[i]):
                return k
    return 0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(1, 4)), min_size=1, max_size=6))
def test_chromatic_matches_brute_force(layout):
    ts = TowerCollection(tuple(Tower(O2.cell_set(3, [c]), interval(Z, 0, h - 1)) for c, h in layout))
    foot = [
        {(c + t) % 8 for t in range(h)}
        for c, h in layout
    ]
    adj = [[j for j in range(len(foot)) if j != i and foot[i] & foot[j]] for i in range(len(foot))]
    res = chromatic_number(ts)
    assert res.exact and res.number == brute_chromatic(adj)
    assert all(res.coloring[i] != res.coloring[j] for i in range(len(adj)) for j in adj[i])


def test_first_return_examples():
    c = first_return_decomposition(O2, O2.cell_set(2, [0]))
    assert [t.shape.elements for t in c.towers] == [(0, 1, 2, 3)]
    whole = first_return_decomposition(O2, O2.whole())
    assert [t.shape.elements for t in whole.towers] == [(0,)]
    tm = thue_morse()
    fr = first_return_decomposition(tm, tm.cylinder("0"))
    assert sorted(len(t.shape) for t in fr.towers) == [1, 2, 3]
    assert verify_castle(fr).partitions
    with pytest.raises(CapExceeded):
        first_return_decomposition(O2, O2.cell_set(6, [0]), cap=10)
    Z2odo = odometer(base=LatticeGroup(2))
    with pytest.raises(Unsupported):
        first_return_decomposition(Z2odo, Z2odo.whole())


def test_refine_castle_to():
    c = Castle((Tower(O2.cell_set(3, [0]), interval(Z, 0, 7)),))
    same = refine_castle_to(c, [O2.whole()])
    assert len(same.towers) == 1 and same.towers[0].footprint() == c.towers[0].footprint()
    split = refine_castle_to(Castle((Tower(O2.cell_set(2, [0]), interval(Z, 0, 3)),)), [O2.cell_set(3, [5])])
    assert len(split.towers) == 2
    target = O2.cell_set(3, [5])
    for t in split.towers:
        for _, lv in t.levels():
            assert lv.issubset(target) or lv.isdisjoint(target)
    old = Castle((Tower(O2.cell_set(2, [0]), interval(Z, 0, 3)),)).towers[0].footprint()
    new = split.towers[0].footprint() | split.towers[1].footprint()
    assert old == new


def test_pullback():
    tm = thue_morse()
    P = ProductSystem((O2, tm))
    c = Castle((Tower(O2.cell_set(3, [0]), interval(Z, 0, 7)),))
    pc = pullback_castle(c, P, 0)
    rep = verify_castle(pc)
    assert rep.valid and rep.partitions
    assert pc.towers[0].shape == c.towers[0].shape
    P2 = ProductSystem((O2, odometer(3)))
    d = double_castle(Castle((Tower(O2.cell_set(5, [0]), interval(Z, 0, 31)),)), 4)
    assert chromatic_number(pullback_castle(d, P2, 0)).number == chromatic_number(d).number
    with pytest.raises(InvalidInput):
        pullback_castle(c, P, 1)


def test_castle_json_round_trip_normalizes():
    raw = [{"base": {"resolution": 3, "cells": [0]}, "shape": [2, 3, 4]}]
    c = castle_from_json(raw, O2)
    t = c.towers[0]
    assert 0 in t.shape and t.base == ClopenSet(O2, 3, frozenset([2]))
    assert castle_from_json(c.to_json(), O2).to_json() == c.to_json()
    with pytest.raises(InvalidInput):
        castle_from_json({"base": 1}, O2)
