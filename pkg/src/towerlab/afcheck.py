"""Almost-finiteness certificates on Cantor systems and their exactification.

A certificate bundles a clopen castle, parameters ``(n, K, δ, r)``, subshapes
``S'_i ⊆ S_i`` and a comparison witness for ``X ∖ ⊔ S_iV_i ≺ ⊔ S'_iV_i``.
Diameter is measured in the standard ultrametric of the system: a set has
diameter below ``2^{-r}`` iff it lies inside one cell of the standard
resolution ``r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cantor import CantorSystem, ClopenSet, ProfiniteOdometer, act
from .comparison import ComparisonWitness, find_witness, verify_witness, witness_from_json
from .errors import AlgorithmIncomplete, InsufficientMargin, InvalidInput, InvarianceViolation
from .group import FiniteGroupSet, folner_defect, group_set_from_json
from .towers import Castle, Tower, castle_from_json, refine_castle_to, verify_castle


@dataclass(frozen=True, eq=False)
class AFCertificate:
    castle: Castle
    n: int
    K: FiniteGroupSet
    delta: Fraction
    r: int
    subshapes: tuple
    witness: ComparisonWitness

    def __post_init__(self):
        object.__setattr__(self, "delta", Fraction(self.delta))
        object.__setattr__(self, "subshapes", tuple(self.subshapes))
        if len(self.subshapes) != len(self.castle.towers):
            raise InvalidInput("need one subshape per tower")

    @property
    def system(self) -> CantorSystem:
        return self.castle.system

    def footprint(self) -> ClopenSet:
        out = self.system.empty()
        for t in self.castle.towers:
            out = out | t.footprint()
        return out

    def remainder(self) -> ClopenSet:
        return self.footprint().complement()

    def sub_footprint(self) -> ClopenSet:
        out = self.system.empty()
        for tower, sub in zip(self.castle.towers, self.subshapes):
            for s in sub:
                out = out | tower.level(s)
        return out

    def to_json(self):
        sys = self.system
        return {
            "system": sys.to_json(),
            "castle": self.castle.to_json(),
            "n": self.n,
            "K": self.K.to_json(),
            "delta": str(self.delta),
            "r": self.r,
            "subshapes": [s.to_json() for s in self.subshapes],
            "witness": self.witness.to_json(),
        }


def certificate_from_json(obj, system: CantorSystem | None = None) -> AFCertificate:
    from .cantor import system_from_json

    if not isinstance(obj, dict):
        raise InvalidInput("certificate JSON must be an object")
    for key in ("castle", "n", "K", "delta", "r", "subshapes", "witness"):
        if key not in obj:
            raise InvalidInput(f"certificate JSON is missing {key!r}")
    if "system" in obj:
        system = system_from_json(obj["system"])
    if system is None:
        raise InvalidInput("certificate carries no system")
    g = system.group
    return AFCertificate(
        castle_from_json(obj["castle"], system),
        int(obj["n"]),
        group_set_from_json(g, obj["K"]),
        Fraction(obj["delta"]),
        int(obj["r"]),
        tuple(group_set_from_json(g, s) for s in obj["subshapes"]),
        witness_from_json(obj["witness"], system),
    )


@dataclass
class CertificateReport:
    checks: dict = field(default_factory=dict)  # name -> {"ok": bool, "details": [...]}

    @property
    def ok(self) -> bool:
        return all(c["ok"] for c in self.checks.values())

    def failed(self) -> list:
        return [k for k, c in self.checks.items() if not c["ok"]]

    def __bool__(self):
        return self.ok

    def to_json(self):
        return {"ok": self.ok, "checks": self.checks}


def single_cell_at(A: ClopenSet, level: int) -> bool:
    """Whether ``A`` lies inside one cell of the standard resolution ``level``."""
    sys = A.system
    std = sys.standard_resolution(level)
    res = sys.join(A.resolution, std)
    parents = {sys.parent(c, res, std) for c in A.refine(res).cells}
    return len(parents) <= 1


def verify_certificate(cert: AFCertificate) -> CertificateReport:
    rep = CertificateReport()
    castle = cert.castle
    cr = verify_castle(castle)
    rep.checks["castle"] = {"ok": cr.valid, "details": [] if cr.valid else [cr.to_json(castle.system.group)]}

    bad = []
    for i, t in enumerate(castle.towers):
        d = folner_defect(t.shape, cert.K)
        if not d < cert.delta:
            bad.append({"tower": i, "defect": str(d), "delta": str(cert.delta)})
    rep.checks["invariance"] = {"ok": not bad, "details": bad}

    bad = []
    for i, t in enumerate(castle.towers):
        for s, lv in t.levels():
            if not single_cell_at(lv, cert.r):
                bad.append({"tower": i, "level": castle.system.group.element_to_json(s), "r": cert.r})
                break
    rep.checks["diameter"] = {"ok": not bad, "details": bad}

    bad = []
    for i, (t, sub) in enumerate(zip(castle.towers, cert.subshapes)):
        if not sub.issubset(t.shape):
            bad.append({"tower": i, "detail": "S' not contained in S"})
        elif not len(sub) * cert.n < len(t.shape):
            bad.append({"tower": i, "detail": f"|S'| = {len(sub)} is not < |S|/n = {Fraction(len(t.shape), cert.n)}"})
    rep.checks["ratio"] = {"ok": not bad, "details": bad}

    wr = verify_witness(cert.remainder(), cert.sub_footprint(), cert.witness)
    rep.checks["witness"] = {"ok": wr.ok, "details": wr.violations}
    return rep


def build_certificate(castle: Castle, n: int, K: FiniteGroupSet, delta, r: int, subshapes,
                      radius: int = 8, max_radius: int | None = None,
                      max_resolution: int | None = None) -> AFCertificate:
    """Assemble a certificate, searching for the remainder witness."""
    cert = AFCertificate(castle, n, K, Fraction(delta), r, tuple(subshapes), ComparisonWitness(castle.system))
    result = find_witness(cert.remainder(), cert.sub_footprint(), 0, radius, max_resolution, max_radius)
    if not result.found:
        raise InvalidInput(f"no remainder witness found within budgets {result.budgets}")
    return AFCertificate(castle, n, K, Fraction(delta), r, tuple(subshapes), result.witness)


def build_odometer_certificate(sys: ProfiniteOdometer, k: int, n: int, K: FiniteGroupSet, delta) -> AFCertificate:
    """Single tower over the identity coset of ``N_k`` with shape ``F_k``; empty remainder."""
    if not isinstance(sys, ProfiniteOdometer):
        raise InvalidInput("build_odometer_certificate needs a profinite odometer")
    delta = Fraction(delta)
    ladder = sys.group
    shape = ladder.representatives(k)
    defect = folner_defect(shape, K)
    if not defect < delta:
        raise InvarianceViolation(
            f"F_{k} has defect {defect} >= {delta} for K; try a larger depth", defect=defect
        )
    if not len(shape) > n:
        raise InvalidInput(f"|F_{k}| = {len(shape)} must exceed n = {n}; try a larger depth")
    e = ladder.identity()
    base = ClopenSet(sys, k, frozenset([ladder.reduce(e, k)]))
    castle = Castle((Tower(base, shape),), sys)
    sub = FiniteGroupSet(ladder, [e])
    return AFCertificate(castle, n, K, delta, k, (sub,), ComparisonWitness(sys, (), 0))


@dataclass
class Exactification:
    castle: Castle
    route: list  # per tower and t ∈ K: the inequality chain
    grafts: list  # per output tower: S''
    margins: dict

    def to_json(self):
        return {
            "castle": self.castle.to_json(),
            "grafts": [s.to_json() for s in self.grafts],
            "route": self.route,
            "margins": self.margins,
        }


def exact_decomposition(cert: AFCertificate) -> Exactification:
    """Graft the remainder onto the towers so that the levels partition ``X``.

    Each witness image ``t_U U`` is split into full levels ``sV`` (after
    refining the castle), and ``U ∩ t_U^{-1} sV`` becomes the new level
    ``t_U^{-1}s V`` of the same tower.  Invariance of the extended shapes is
    certified through ``|tS̃ Δ S̃| ≤ |tS Δ S| + 2|S''| < δ|S̃|``.
    """
    rep = verify_certificate(cert)
    if not rep.ok:
        raise InvalidInput(f"certificate does not verify: failed {rep.failed()}")
    sys = cert.system
    group = sys.group
    K, delta = cert.K, cert.delta
    margins = {
        "half_delta_invariant": all(folner_defect(t.shape, K) < delta / 2 for t in cert.castle.towers),
        "two_over_n_within_half_delta": Fraction(2, cert.n) <= delta / 2,
    }

    pieces = [p for p in cert.witness.pieces if p.U]
    targets = [act(p.s, p.U) for p in pieces]
    towers, subs = [], []
    for tower, sub in zip(cert.castle.towers, cert.subshapes):
        split = refine_castle_to(Castle((tower,), sys), targets) if targets else Castle((tower,), sys)
        for t in split.towers:
            towers.append(t)
            subs.append(sub)

    grafts = [dict() for _ in towers]  # graft element -> level
    for p, image in zip(pieces, targets):
        tinv = group.inv(p.s)
        covered = sys.empty(image.resolution)
        for j, (tower, sub) in enumerate(zip(towers, subs)):
            for s in sub:
                lv = tower.level(s)
                if lv.issubset(image):
                    g = group.mul(tinv, s)
                    if g in grafts[j]:
                        raise AlgorithmIncomplete(f"graft map not injective in tower {j} at {g!r}")
                    grafts[j][g] = act(tinv, lv)
                    covered = covered | lv
        if covered != image:
            raise AlgorithmIncomplete("a witness image is not a union of S'-levels after refinement")

    out, route, graft_sets = [], [], []
    for j, (tower, sub) in enumerate(zip(towers, subs)):
        extra = FiniteGroupSet(group, grafts[j])
        if len(extra) > len(sub):
            raise AlgorithmIncomplete(f"tower {j}: |S''| = {len(extra)} exceeds |S'| = {len(sub)}")
        if extra & tower.shape:
            raise AlgorithmIncomplete(f"tower {j}: grafted elements collide with the shape")
        shape = tower.shape | extra
        for t in K:
            base_sd = len(tower.shape.translate(t) ^ tower.shape)
            bound = base_sd + 2 * len(extra)
            actual = len(shape.translate(t) ^ shape)
            entry = {"tower": j, "t": group.element_to_json(t), "tS_delta_S": base_sd, "S2": len(extra),
                     "bound": bound, "actual": actual, "delta_times_size": str(delta * len(shape))}
            route.append(entry)
            if actual > bound:
                raise AlgorithmIncomplete(f"tower {j}: |tS̃ Δ S̃| = {actual} exceeds the route bound {bound}")
            if not bound < delta * len(shape):
                raise InsufficientMargin(
                    f"tower {j}, t={t!r}: |tS Δ S| + 2|S''| = {base_sd} + {2 * len(extra)} = {bound}"
                    f" is not < δ|S̃| = {delta * len(shape)}"
                )
        out.append(Tower(tower.base, shape))
        graft_sets.append(extra)

    result = Castle(tuple(out), sys)
    cr = verify_castle(result)
    if not cr.partitions:
        raise AlgorithmIncomplete(f"exactified castle does not partition X: {cr.to_json(group)}")
    return Exactification(result, route, graft_sets, margins)
