"""``towerlab`` command line: batch runs that emit JSON reports.

Exit codes: 0 success / FOUND, 1 verification failure / NOT-FOUND / resource
exhaustion, 2 usage error / malformed input.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .afcheck import build_odometer_certificate, certificate_from_json, exact_decomposition, verify_certificate
from .amdim import build_simplex_map, defect_bound, equivariance_defect
from .cantor import ProfiniteOdometer, clopen_from_json, system_from_json
from .comparison import find_witness, verify_witness
from .errors import (
    InsufficientMargin,
    InvalidInput,
    InvarianceViolation,
    LebesgueFailure,
    ResourceExhausted,
    TowerlabError,
    Unsupported,
)
from .group import FiniteGroupSet, IntegerGroup, LadderGroup, LatticeGroup, folner_defect, group_from_json, group_set_from_json
from .quasitiling import (
    TileSystem,
    box_chain,
    check_quasitiling,
    disjointify,
    interval_chain,
    plan_scales,
    quasitile,
    tile_system_from_chain,
)
from .towers import (
    TowerCollection,
    castle_from_json,
    chromatic_number,
    first_return_decomposition,
    is_e_lebesgue,
    is_lebesgue_cover,
    verify_castle,
)
from .typesemigroup import find_equidecomposition, leq, probe_almost_unperforation, type_from_json, verify_equidecomposition

SCHEMA_VERSION = 1


class MalformedJSON(InvalidInput):
    pass


def load_json(arg: str):
    """Parse ``arg`` as inline JSON if it looks like JSON, else read it as a file."""
    text = arg
    if not arg.lstrip().startswith(("{", "[")):
        path = Path(arg)
        if not path.exists():
            raise InvalidInput(f"no such file: {arg}")
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJSON(f"malformed JSON in {arg[:60]!r}: {exc}") from None


def load_payload(arg: str, key: str):
    """Load JSON, unwrapping ``result[key]`` when given a towerlab report."""
    obj = load_json(arg)
    if isinstance(obj, dict) and "schema_version" in obj and isinstance(obj.get("result"), dict):
        inner = obj["result"]
        if key in inner:
            return inner[key]
        raise InvalidInput(f"report {arg!r} carries no {key!r}")
    return obj


def parse_group_set(group, arg: str) -> FiniteGroupSet:
    """``--K``/``--E``/``--F`` accept a JSON list or comma-separated integers."""
    text = arg.strip()
    if text.startswith("["):
        return group_set_from_json(group, load_json(text))
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidInput(f"expected a JSON list or comma-separated integers, got {arg!r}") from None
    return group_set_from_json(group, values)


def _system(args):
    if not getattr(args, "system", None):
        raise InvalidInput("--system is required")
    return system_from_json(load_json(args.system))


def _clopen(arg, system):
    return clopen_from_json(load_json(arg), system)


def cmd_tile(args):
    group = group_from_json(load_json(args.group))
    beta = Fraction(args.beta)
    plan_scales(beta)
    if isinstance(group, IntegerGroup):
        E = FiniteGroupSet(group, range(args.window))
        chain_fn = lambda L: interval_chain(group, L)  # noqa: E731
    elif isinstance(group, LatticeGroup):
        E = box_chain(group, args.window)[-1]
        chain_fn = lambda L: box_chain(group, L)  # noqa: E731
    else:
        raise Unsupported(f"tile supports Z and Zd windows, not {group.kind}")
    if args.tiles:
        tiles = [group_set_from_json(group, t) for t in load_json(args.tiles)]
        system = TileSystem(tuple(tiles), beta)
    else:
        top = args.max_tile or 1
        if not args.max_tile:
            # largest top tile keeping E (T_n, β/4)-invariant
            while top < args.window and folner_defect(E, chain_fn(top + 1)[-1]) < beta / 4:
                top += 1
        system = tile_system_from_chain(chain_fn(top), beta)
    rng = random.Random(args.seed) if args.seed is not None else None
    q = quasitile(E, system, check_preconditions=not args.no_check, rng=rng)
    problems = check_quasitiling(q)
    pieces = disjointify(q) if not problems else []
    retention = min((Fraction(len(p), len(q.tile(pl))) for p, pl in zip(pieces, q.placements)), default=Fraction(1))
    result = {
        "quasitiling": q.to_json(),
        "scales": len(system),
        "coverage": str(q.coverage()),
        "problems": problems,
        "min_retention": str(retention),
    }
    budgets = {"beta": str(beta), "window": args.window, "seed": args.seed}
    return result, budgets, not problems


def cmd_decompose(args):
    system = _system(args)
    V = _clopen(args.base, system)
    castle = first_return_decomposition(system, V, args.cap)
    rep = verify_castle(castle)
    result = {
        "castle": castle.to_json(),
        "return_times": [len(t.shape) for t in castle.towers],
        "report": rep.to_json(system.group),
    }
    return result, {"cap": args.cap}, rep.partitions


def cmd_verify_castle(args):
    system = _system(args)
    castle = castle_from_json(load_payload(args.castle, "castle"), system)
    rep = verify_castle(castle)
    return {"report": rep.to_json(system.group)}, {}, rep.valid


def _cert_json(res, system):
    g = system.group
    return [
        {"cell": system.cell_to_json(x), "tower": i, "t": g.element_to_json(t)}
        for x, (i, t) in sorted(res.certificate.items())
    ]


def cmd_lebesgue(args):
    system = _system(args)
    ts = castle_from_json(load_payload(args.towers, "castle"), system, TowerCollection)
    E = parse_group_set(system.group, args.E)
    res = is_e_lebesgue(ts, E)
    cover = is_lebesgue_cover(ts, E)
    result = {
        "e_lebesgue": res.ok,
        "lebesgue_cover": cover.ok,
        "resolution": system.resolution_to_json(res.resolution),
        "failing_cell": None if res.ok else system.cell_to_json(res.failing_cell),
        "certificate": _cert_json(res, system) if res.ok else None,
    }
    return result, {}, res.ok


def cmd_chromatic(args):
    system = _system(args)
    ts = castle_from_json(load_payload(args.towers, "castle"), system, TowerCollection)
    res = chromatic_number(ts, args.cap)
    return res.to_json(), {"exact_cap": args.cap}, True


def cmd_compare(args):
    system = _system(args)
    A, B = _clopen(args.A, system), _clopen(args.B, system)
    res = find_witness(A, B, args.m, args.radius, args.max_res, args.max_radius, args.node_budget)
    result = res.to_json()
    if res.found:
        result["verification"] = verify_witness(A, B, res.witness).to_json()
    return result, res.budgets, res.found


def cmd_typesemi(args):
    system = _system(args)
    f = type_from_json(load_json(args.f), system)
    g = type_from_json(load_json(args.g), system)
    budgets = {"radius": args.radius, "max_radius": args.max_radius, "max_resolution": args.max_res}
    if args.action == "probe-au":
        rep = probe_almost_unperforation(f, g, args.n, args.radius, args.max_res, args.max_radius)
        budgets["n"] = args.n
        return rep.to_json(), budgets, rep.verdict != "INCONCLUSIVE"
    exact = args.action == "equidecomp"
    fn = find_equidecomposition if exact else leq
    res = fn(f, g, args.radius, args.max_res, args.max_radius)
    result = res.to_json()
    if res.found:
        result["verified"] = verify_equidecomposition(f, g, res.witness, exact=exact)
    return result, budgets, res.found


def cmd_amdim(args):
    system = _system(args)
    ts = castle_from_json(load_payload(args.towers, "castle"), system, TowerCollection)
    F = parse_group_set(system.group, args.F)
    phi = build_simplex_map(ts, F, args.n)
    defect = equivariance_defect(phi, F)
    bound = defect_bound(phi.support_bound - 1, args.n)
    result = {
        "map": phi.to_json(),
        "defect": str(defect),
        "bound": str(bound),
        "within_bound": defect <= bound,
    }
    return result, {"n": args.n}, defect <= bound


def cmd_af(args):
    if args.action == "build-odometer":
        if args.system:
            system = _system(args)
        else:
            base = group_from_json(load_json(args.base)) if args.base else IntegerGroup()
            moduli = tuple(int(x) for x in args.moduli.split(",")) if args.moduli else None
            system = ProfiniteOdometer(LadderGroup(base, None if moduli else args.mod, moduli))
        K = parse_group_set(system.group, args.K)
        cert = build_odometer_certificate(system, args.depth, args.n, K, Fraction(args.delta))
        rep = verify_certificate(cert)
        shape = cert.castle.towers[0].shape
        result = {"certificate": cert.to_json(), "report": rep.to_json(), "defect": str(folner_defect(shape, K))}
        return result, {"depth": args.depth}, rep.ok
    cert = certificate_from_json(load_payload(args.cert, "certificate"))
    if args.action == "verify":
        rep = verify_certificate(cert)
        return {"report": rep.to_json()}, {}, rep.ok
    ex = exact_decomposition(cert)
    rep = verify_castle(ex.castle)
    result = {"exactification": ex.to_json(), "report": rep.to_json(cert.system.group)}
    return result, {}, rep.partitions


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON report here (default: stdout)")
    common.add_argument("--no-timing", action="store_true", help="omit timings for byte-identical reports")
    common.add_argument("--jobs", type=int, default=1, help="worker cap (runs are sequential; echoed in reports)")
    common.add_argument("--system", help="system JSON (file path or inline)")

    p = argparse.ArgumentParser(prog="towerlab", description="Towers, comparison and almost finiteness on Cantor systems.")
    p.add_argument("--version", action="version", version=f"towerlab {__version__}")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("tile", parents=[common], help="Ornstein-Weiss quasitiling of a window")
    s.add_argument("--group", default='{"kind": "Z"}')
    s.add_argument("--beta", required=True)
    s.add_argument("--window", type=int, required=True, help="E = {0..W-1} (Z) or {0..W-1}^d (Zd)")
    s.add_argument("--tiles", help="explicit JSON list of nested tiles")
    s.add_argument("--max-tile", type=int, help="largest candidate tile size")
    s.add_argument("--seed", type=int, help="shuffle the center scan order (default: lexicographic)")
    s.add_argument("--no-check", action="store_true", help="skip the invariance precondition")
    s.set_defaults(func=cmd_tile)

    s = sub.add_parser("decompose", parents=[common], help="first-return castle over a clopen base")
    s.add_argument("--base", required=True)
    s.add_argument("--cap", type=int, default=4096)
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("verify-castle", parents=[common])
    s.add_argument("--castle", required=True)
    s.set_defaults(func=cmd_verify_castle)

    s = sub.add_parser("lebesgue", parents=[common])
    s.add_argument("--towers", required=True)
    s.add_argument("--E", required=True)
    s.set_defaults(func=cmd_lebesgue)

    s = sub.add_parser("chromatic", parents=[common])
    s.add_argument("--towers", required=True)
    s.add_argument("--cap", type=int, default=20)
    s.set_defaults(func=cmd_chromatic)

    s = sub.add_parser("compare", parents=[common], help="search for a witness of A ≺_m B")
    s.add_argument("--A", required=True)
    s.add_argument("--B", required=True)
    s.add_argument("--m", type=int, default=0)
    s.add_argument("--radius", type=int, default=8)
    s.add_argument("--max-radius", type=int)
    s.add_argument("--max-res", type=int)
    s.add_argument("--node-budget", type=int, default=200_000)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("typesemi", parents=[common], help="type semigroup searches")
    s.add_argument("action", choices=["equidecomp", "leq", "probe-au"])
    s.add_argument("--f", required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--radius", type=int, default=8)
    s.add_argument("--max-radius", type=int)
    s.add_argument("--max-res", type=int)
    s.set_defaults(func=cmd_typesemi)

    s = sub.add_parser("amdim", parents=[common], help="simplex map and equivariance defect")
    s.add_argument("--towers", required=True)
    s.add_argument("--F", required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_amdim)

    s = sub.add_parser("af", parents=[common], help="almost-finiteness certificates")
    s.add_argument("action", choices=["verify", "build-odometer", "exactify"])
    s.add_argument("--cert")
    s.add_argument("--mod", type=int, default=2)
    s.add_argument("--moduli")
    s.add_argument("--base", help="base group JSON for the odometer ladder (default Z)")
    s.add_argument("--depth", type=int)
    s.add_argument("--K", default="1")
    s.add_argument("--delta", default="0.1")
    s.add_argument("--n", type=int, default=4)
    s.set_defaults(func=cmd_af)
    return p


def _emit(report: dict, out: str | None):
    text = json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.jobs < 1:
        print("towerlab: --jobs must be positive", file=sys.stderr)
        return 2
    if args.command == "af" and args.action in ("verify", "exactify") and not args.cert:
        print("towerlab: af verify/exactify need --cert", file=sys.stderr)
        return 2
    if args.command == "af" and args.action == "build-odometer" and args.depth is None:
        print("towerlab: af build-odometer needs --depth", file=sys.stderr)
        return 2

    start = time.perf_counter()
    try:
        result, budgets, ok = args.func(args)
    except MalformedJSON as exc:
        print(f"towerlab: malformed JSON: {exc}", file=sys.stderr)
        return 2
    except ResourceExhausted as exc:
        print(f"towerlab: resource exhausted: {exc}", file=sys.stderr)
        return 1
    except InvarianceViolation as exc:
        print(f"towerlab: invariance violation (defect {exc.defect}): {exc}", file=sys.stderr)
        return 1
    except (LebesgueFailure, InsufficientMargin) as exc:
        print(f"towerlab: verification failed: {exc}", file=sys.stderr)
        return 1
    except Unsupported as exc:
        print(f"towerlab: unsupported: {exc}", file=sys.stderr)
        return 2
    except InvalidInput as exc:
        print(f"towerlab: invalid input: {exc}", file=sys.stderr)
        return 2
    except TowerlabError as exc:
        print(f"towerlab: error: {exc}", file=sys.stderr)
        return 1

    inputs = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "no_timing")}
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command + (f" {args.action}" if hasattr(args, "action") else ""),
        "inputs": inputs,
        "budgets": budgets,
        "ok": ok,
        "result": result,
    }
    if not args.no_timing:
        report["timings"] = {"seconds": round(time.perf_counter() - start, 6)}
    _emit(report, args.out)
    if args.out:
        status = result.get("status") if isinstance(result, dict) else None
        print(status or ("OK" if ok else "FAILED"))
    return 0 if ok else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
