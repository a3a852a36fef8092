from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.cantor import ClopenSet, ProductSystem, odometer, thue_morse
from towerlab.comparison import STRUCTURAL
from towerlab.errors import InvalidInput, Unsupported
from towerlab.typesemigroup import (
    HOLDS,
    INCONCLUSIVE,
    PREMISE_FAILS,
    STATE,
    EquidecompWitness,
    TypeElement,
    compose,
    find_equidecomposition,
    from_layers,
    indicator,
    leq,
    probe_almost_unperforation,
    state,
    type_from_json,
    verify_equidecomposition,
    zero,
)

O2 = odometer(2)


def elem(weights, res=3):
    return TypeElement(O2, res, weights)


weights3 = st.dictionaries(st.integers(0, 7), st.integers(0, 3), max_size=8).map(elem)


def test_algebra_examples():
    f = elem({0: 2, 3: 1})
    assert f + zero(O2) == f
    A = O2.cell_set(3, [1, 2])
    assert indicator(A) + indicator(A) == indicator(A).scale(2)
    big, small = O2.cell_set(2, [0, 1]), O2.cell_set(3, [0])
    assert from_layers([big, small]) == indicator(big) + indicator(small)
    assert f.refine(5) == f and f.refine(5).total() == 4 * f.total()
    assert (f - elem({0: 1})) == elem({0: 1, 3: 1})
    with pytest.raises(InvalidInput):
        elem({0: 1}) - elem({1: 1})
    with pytest.raises(InvalidInput):
        elem({0: -1})


def test_state_examples():
    assert state(indicator(O2.whole())) == 1
    assert state(elem({1: 1, 6: 1})) == Fraction(1, 4)


@settings(max_examples=60, deadline=None)
@given(weights3, weights3)
def test_state_linear_and_refinement_stable(f, g):
    assert state(f + g) == state(f) + state(g)
    assert state(f.refine(5)) == state(f)
    assert state(f) == Fraction(sum(f.weights.values()), 8)


def test_equidecomposition_examples():
    f = elem({0: 1, 3: 1})
    same = find_equidecomposition(f, f)
    assert same.found and [s for _, s in same.witness.terms] == [0]
    g = elem({1: 1, 6: 1})
    res = find_equidecomposition(f, g)
    assert res.found and verify_equidecomposition(f, g, res.witness)
    assert sorted(s for _, s in res.witness.terms) == [1, 3]
    whole = indicator(O2.whole())
    double = indicator(O2.cell_set(1, [0])).scale(2)
    res = find_equidecomposition(whole, double)
    assert res.found and verify_equidecomposition(whole, double, res.witness)


def test_state_gate():
    res = find_equidecomposition(elem({0: 2}), elem({1: 1}))
    assert res.status == STATE and res.separating["state_f"] == "1/4"
    assert not leq(elem({0: 1, 1: 1, 2: 1}), elem({5: 1, 6: 1})).found


@settings(max_examples=60, deadline=None)
@given(weights3, weights3)
def test_witnesses_preserve_states(f, g):
    res = find_equidecomposition(f, g)
    assert res.found == (state(f) == state(g))
    if res.found:
        assert verify_equidecomposition(f, g, res.witness)
        assert res.witness.source(3) == f and res.witness.target(3) == g


@settings(max_examples=60, deadline=None)
@given(weights3, weights3)
def test_leq_remainder(f, g):
    res = leq(f, g)
    assert res.found == (state(f) <= state(g))
    if res.found:
        w = res.witness
        assert verify_equidecomposition(f, g, w, exact=False)
        assert w.target(res.remainder.resolution) + res.remainder == g


def test_leq_examples():
    assert leq(elem({4: 1}), elem({4: 1})).found
    res = leq(elem({0: 1, 1: 1}), elem({2: 1, 3: 1, 4: 1}))
    assert res.found and res.remainder.total() == 1


@settings(max_examples=30, deadline=None)
@given(weights3, weights3)
def test_compose_witnesses(f, g):
    k = g.act(3)
    r1, r2 = find_equidecomposition(f, g), find_equidecomposition(g, k)
    if r1.found and r2.found:
        w = compose(r1.witness, r2.witness)
        assert verify_equidecomposition(f, k, w)


def test_probe_examples():
    f, g = elem({0: 1, 1: 1}), elem({2: 1, 3: 1, 4: 1})
    rep = probe_almost_unperforation(f, g, 2)
    assert rep.verdict == HOLDS and rep.premise.found and rep.conclusion.found
    nothing = zero(O2, 3)
    assert probe_almost_unperforation(nothing, nothing, 3).verdict == HOLDS
    # for f = g ≠ 0 only the conclusion is trivial: (n+1)μ(f) > nμ(f) kills the premise
    same = probe_almost_unperforation(f, f, 3)
    assert same.verdict == PREMISE_FAILS and leq(f, f).found
    worse = probe_almost_unperforation(g, f, 2)
    assert worse.verdict == PREMISE_FAILS and worse.premise.status == STATE
    assert INCONCLUSIVE not in (rep.verdict, worse.verdict)
    with pytest.raises(InvalidInput):
        probe_almost_unperforation(f, g, 0)


def test_product_system_transport():
    P = ProductSystem((odometer(2), odometer(3)))
    f = TypeElement(P, (1, 1), {(0, 0): 1, (1, 1): 1})
    g = TypeElement(P, (1, 1), {(0, 2): 2})
    res = find_equidecomposition(f, g, radius=6)
    assert res.found and verify_equidecomposition(f, g, res.witness)


def test_subshift_is_unsupported():
    tm = thue_morse()
    f = indicator(tm.cylinder("0"))
    with pytest.raises(Unsupported):
        find_equidecomposition(f, f)


def test_exhausted_budget_reports_structural():
    f = elem({0: 1}, 1)
    g = elem({1: 1, 3: 1}, 2)
    res = find_equidecomposition(f, g, radius=0, max_resolution=1, max_radius=0)
    assert res.status == STRUCTURAL


def test_json_round_trip():
    f = elem({0: 2, 5: 1})
    assert type_from_json(f.to_json(), O2) == f
    with pytest.raises(InvalidInput):
        type_from_json({"resolution": 1, "weights": [[3, 1]]}, O2)
    w = EquidecompWitness(O2, ((f, 1),))
    assert w.to_json()["terms"][0]["translation"] == 1
    assert indicator(ClopenSet(O2, 2, frozenset([1]))).layers()
