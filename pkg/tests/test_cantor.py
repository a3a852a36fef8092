from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towerlab.cantor import (
    ClopenSet,
    ProductSystem,
    SubstitutionSubshift,
    act,
    clopen_from_json,
    fibonacci,
    measure,
    measure_error,
    measure_margin,
    odometer,
    system_from_json,
    thue_morse,
)
from towerlab.errors import InvalidInput
from towerlab.group import LatticeGroup

O2 = odometer(2)
TM = thue_morse()


def residues(A: ClopenSet, depth: int) -> frozenset:
    """Brute-force view of an odometer clopen set as residues mod 2^depth."""
    m = 2**A.resolution
    return frozenset(x for x in range(2**depth) if x % m in A.cells)


def test_odometer_refine_and_act_examples():
    A = O2.cell_set(2, [1])
    assert A.refine(3).cells == {1, 5}
    assert act(1, O2.cell_set(3, [0])).cells == {1}
    assert act(0, A) == A
    assert O2.whole().refine(3).cells == set(range(8))


odo_sets = st.tuples(st.integers(0, 4), st.integers(0, 2**16 - 1)).map(
    lambda p: O2.cell_set(p[0], [c for c in range(2 ** p[0]) if p[1] >> c & 1])
)


@settings(max_examples=80, deadline=None)
@given(odo_sets, odo_sets, st.integers(-40, 40))
def test_odometer_algebra_matches_residues(A, B, g):
    ra, rb = residues(A, 4), residues(B, 4)
    assert residues(A | B, 4) == ra | rb
    assert residues(A & B, 4) == ra & rb
    assert residues(A - B, 4) == ra - rb
    assert residues(A ^ B, 4) == ra ^ rb
    assert residues(A.complement(), 4) == frozenset(range(16)) - ra
    assert residues(act(g, A), 4) == frozenset((x + g) % 16 for x in ra)
    assert A.issubset(B) == (ra <= rb)
    assert (A == B) == (ra == rb)
    assert measure(A) == Fraction(len(ra), 16)
    assert measure(act(g, A)) == measure(A)
    assert measure(A | B) + measure(A & B) == measure(A) + measure(B)


def test_measures_examples():
    assert measure(O2.cell_set(3, [5])) == Fraction(1, 8)
    assert measure(O2.whole(5)) == 1
    A, B = O2.cell_set(3, [0, 1]), O2.cell_set(3, [2, 3, 4])
    assert measure_margin(A, B) == Fraction(1, 8)
    assert measure_margin(A, A) == 0
    assert measure_margin(O2.whole(), O2.empty()) == -1
    assert measure_error(A) == 0


def test_thue_morse_measure_within_error():
    zero = TM.cylinder("0")
    assert abs(measure(zero) - Fraction(1, 2)) <= measure_error(zero)
    assert measure_error(zero) > 0
    total = sum(measure(TM.cylinder(w)) for w in TM.language(3))
    assert abs(total - 1) <= 3 * measure_error(TM.cylinder("000"))


def brute_language(system: SubstitutionSubshift, L: int, n: int = 14) -> set:
    """Factors of one long substitution word; minimality makes every legal word appear."""
    w = system.substitute(system.alphabet[0], n)
    return {w[i : i + L] for i in range(len(w) - L + 1)}


@pytest.mark.parametrize("system", [TM, fibonacci()], ids=["thue-morse", "fibonacci"])
@pytest.mark.parametrize("L", range(1, 8))
def test_language_matches_long_word_factors(system, L):
    assert set(system.language(L)) == brute_language(system, L)


def test_thue_morse_complexity():
    # frozen oracle values from factor counting on σ^12 words
    assert [len(TM.language(L)) for L in range(1, 9)] == [2, 4, 6, 10, 12, 16, 20, 22]
    assert len(fibonacci().language(5)) == 6


def test_subshift_refine_example():
    A = TM.cylinder("01")
    fine = A.refine((-1, 2))
    assert sorted(fine.cells) == ["0010", "0011", "1010", "1011"]
    assert all(w[1:3] == "01" for w in fine.cells)


def test_subshift_shift_moves_window():
    A = act(5, TM.cylinder("0"))
    assert A == TM.cylinder("0", -5)
    assert A.resolution == (-5, -5)


def test_subshift_measure_refinement_consistent():
    for w in TM.language(3):
        A = TM.cylinder(w)
        fine = A.refine((-1, 3))
        # frequency estimates agree up to their error bounds, not exactly
        assert abs(measure(fine) - measure(A)) <= measure_error(fine) + measure_error(A)


def test_primitive_check():
    with pytest.raises(InvalidInput):
        SubstitutionSubshift({"a": "a", "b": "b"})
    with pytest.raises(InvalidInput):
        SubstitutionSubshift({"a": "ab"})


def test_product_system():
    P = ProductSystem((odometer(2), odometer(3)))
    A = ClopenSet(P, (1, 1), frozenset([(0, 0)]))
    assert measure(A) == Fraction(1, 6)
    assert act(1, A).cells == {(1, 1)}
    assert A.refine((2, 1)).cells == {(0, 0), (2, 0)}
    assert len(P.cells((2, 2))) == 36


def test_json_round_trips():
    for sys_ in (O2, odometer(3), odometer(base=LatticeGroup(2)), odometer(moduli=(2, 6, 30)), TM,
                 ProductSystem((O2, TM))):
        again = system_from_json(sys_.to_json())
        assert again == sys_
    A = O2.cell_set(3, [1, 6])
    assert clopen_from_json(A.to_json(include_system=True)) == A
    assert clopen_from_json(A.to_json(), O2) == A
    with pytest.raises(InvalidInput):
        clopen_from_json({"resolution": 2, "cells": [7]}, O2)
    with pytest.raises(InvalidInput):
        system_from_json({"kind": "bratteli"})


def test_lattice_odometer_is_free_on_cells():
    sys_ = odometer(base=LatticeGroup(2))
    cells = sys_.cells(2)
    assert len(cells) == 16
    for g in [(1, 0), (0, 3), (2, 2)]:
        images = [sys_.act_cell(g, c, 2) for c in cells]
        assert sorted(images) == sorted(cells)
        assert all(i != c for i, c in zip(images, cells))
