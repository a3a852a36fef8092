from fractions import Fraction

import pytest

from towerlab.afcheck import (
    AFCertificate,
    build_certificate,
    build_odometer_certificate,
    certificate_from_json,
    exact_decomposition,
    single_cell_at,
    verify_certificate,
)
from towerlab.cantor import ClopenSet, ProductSystem, odometer
from towerlab.comparison import ComparisonWitness, Piece
from towerlab.errors import InsufficientMargin, InvalidInput, InvarianceViolation
from towerlab.group import FiniteGroupSet, IntegerGroup, folner_defect, interval
from towerlab.towers import Castle, Tower, verify_castle

Z = IntegerGroup()
O2 = odometer(2)
K1 = FiniteGroupSet(Z, [1])
P = ProductSystem((odometer(2), odometer(3)))


def pcell(x):
    return (x % 16, x % 9)


def product_certificate(delta=Fraction(1, 4)):
    shape = interval(Z, 0, 67)
    towers = (
        Tower(ClopenSet(P, (4, 2), frozenset([pcell(0)])), shape),
        Tower(ClopenSet(P, (4, 2), frozenset([pcell(70)])), shape),
    )
    sub = (interval(Z, 0, 3), interval(Z, 0, 3))
    return build_certificate(Castle(towers, P), 16, K1, delta, 2, sub, radius=150)


def test_odometer_certificate():
    cert = build_odometer_certificate(O2, 5, 4, K1, Fraction(1, 10))
    rep = verify_certificate(cert)
    assert rep.ok and set(rep.checks) == {"castle", "invariance", "diameter", "ratio", "witness"}
    assert cert.castle.towers[0].shape.elements == tuple(range(32))
    assert folner_defect(cert.castle.towers[0].shape, K1) == Fraction(1, 16)
    assert len(cert.subshapes[0]) == 1 and cert.remainder().is_empty()


def test_trivial_K_any_depth():
    E = FiniteGroupSet(Z, [0])
    for k in range(1, 6):
        assert verify_certificate(build_odometer_certificate(O2, k, 1, E, Fraction(1, 100))).ok


def test_build_odometer_errors():
    with pytest.raises(InvarianceViolation):
        build_odometer_certificate(O2, 3, 4, K1, Fraction(1, 10))
    with pytest.raises(InvalidInput):
        build_odometer_certificate(O2, 5, 40, K1, Fraction(1, 10))
    with pytest.raises(InvalidInput):
        build_odometer_certificate(P, 2, 2, K1, Fraction(1, 2))


def test_ratio_is_strict():
    cert = build_odometer_certificate(O2, 5, 4, K1, Fraction(1, 10))
    exact = AFCertificate(cert.castle, 32, cert.K, cert.delta, cert.r, cert.subshapes, cert.witness)
    rep = verify_certificate(exact)
    assert rep.failed() == ["ratio"]


def test_tampered_witness_fails():
    cert = product_certificate()
    p = cert.witness.pieces[0]
    bad = ComparisonWitness(P, (Piece(p.U, p.s + 1, p.color),) + cert.witness.pieces[1:], cert.witness.m)
    tampered = AFCertificate(cert.castle, cert.n, cert.K, cert.delta, cert.r, cert.subshapes, bad)
    rep = verify_certificate(tampered)
    assert rep.failed() == ["witness"]
    assert rep.checks["witness"]["details"]


def test_invariance_and_diameter_checks():
    cert = build_odometer_certificate(O2, 5, 4, K1, Fraction(1, 10))
    tight = AFCertificate(cert.castle, cert.n, cert.K, Fraction(1, 16), cert.r, cert.subshapes, cert.witness)
    assert verify_certificate(tight).failed() == ["invariance"]
    fine = AFCertificate(cert.castle, cert.n, cert.K, cert.delta, 6, cert.subshapes, cert.witness)
    assert verify_certificate(fine).failed() == ["diameter"]
    assert single_cell_at(O2.cell_set(5, [3]), 5) and not single_cell_at(O2.cell_set(5, [3, 4]), 2)


def test_empty_remainder_exactification_is_identity():
    cert = build_odometer_certificate(O2, 5, 4, K1, Fraction(1, 10))
    ex = exact_decomposition(cert)
    assert [t.shape for t in ex.castle.towers] == [t.shape for t in cert.castle.towers]
    assert all(not g for g in ex.grafts)


def test_product_exactification():
    cert = product_certificate()
    assert not cert.remainder().is_empty()
    ex = exact_decomposition(cert)
    rep = verify_castle(ex.castle)
    assert rep.valid and rep.partitions
    assert cert.footprint().issubset(ex.castle.towers[0].footprint() | ex.castle.towers[1].footprint())
    for t, sub in zip(ex.castle.towers, cert.subshapes):
        assert len(t.shape) <= 68 + len(sub)
        assert folner_defect(t.shape, K1) < cert.delta
    for entry in ex.route:
        assert entry["tS_delta_S"] + 2 * entry["S2"] == entry["bound"] >= entry["actual"]


def test_insufficient_margin():
    cert = product_certificate(Fraction(1, 8))
    assert verify_certificate(cert).ok
    with pytest.raises(InsufficientMargin):
        exact_decomposition(cert)


def test_certificate_round_trip():
    cert = product_certificate()
    again = certificate_from_json(cert.to_json())
    assert again.to_json() == cert.to_json()
    assert verify_certificate(again).ok
    with pytest.raises(InvalidInput):
        certificate_from_json({"castle": []})
