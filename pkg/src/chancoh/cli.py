"""Command-line entry point: ``chancoh measure|verify|random``.

Exit codes: 0 success, 2 input validation failure, 3 solver failure,
4 verification suite failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import channels as ch
from . import measures as me
from . import superchannels as sc
from .config import ENV_TOLERANCE_FILE, Tolerances
from .errors import SolverError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_SUITE = 4

SUITES = ("theorem1", "theorem2", "roc", "monotonicity", "reduction")


@dataclass(frozen=True)
class RunConfig:
    tolerances: Tolerances
    seed: int
    trials: int
    dims: tuple[int, int, int, int]
    output: str = "text"

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if any(d < 1 for d in self.dims):
            raise ValidationError("dimensions must be positive")


# --------------------------------------------------------------------------
# measure
# --------------------------------------------------------------------------


def cmd_measure(args) -> int:
    c = ch.load_channel(args.input, strict=False)
    if args.quantity == "dmax":
        if not args.against:
            raise ValidationError("--against is required for --quantity dmax")
        value = me.d_max(c, ch.load_channel(args.against, strict=False))
        if args.json:
            print(json.dumps({"d_max_bits": value}))
        else:
            print(f"d_max_bits = {value:.10g}")
        return EXIT_OK
    if args.quantity == "cr":
        value = me.c_r(c)
        print(json.dumps({"c_r": value}) if args.json else f"c_r = {value:.10g}")
        return EXIT_OK
    report = me.c_max(c, tol=args.tol_gap)
    if args.json:
        doc = report.to_json()
        if args.quantity == "cmax":
            doc.pop("c_r")
            doc.pop("relation_residual")
        print(json.dumps(doc, indent=1))
        return EXIT_OK
    print(f"c_max_bits = {report.c_max:.10g}")
    if args.quantity == "both":
        print(f"c_r = {report.c_r:.10g}")
        print(f"relation_residual = {report.relation_residual:.3e}")
    print(f"solver_gap = {report.solver_gap:.3e}")
    return EXIT_OK


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------


def _suite_theorem1(cfg: RunConfig, rng):
    a, b, a2, b2 = cfg.dims
    for _ in range(cfg.trials):
        c = ch.random_channel(a, b, seed=rng)
        phases = rng.uniform(0, 2 * np.pi, a2 * b2)
        cert = me.construct_theorem1_isc(c, a2, b2, phases, tol=cfg.tolerances.solver_gap)
        disc = me.construct_theorem1_disc(c, a2, b2, tol=cfg.tolerances.solver_gap)
        ok_class = sc.classify_isc(cert.superchannel) and sc.classify_disc(disc.superchannel)
        yield max(cert.residual, disc.residual), 1e-4, ok_class


def _suite_theorem2(cfg: RunConfig, rng):
    a, b, a2, b2 = cfg.dims
    for _ in range(cfg.trials):
        c = ch.random_channel(a, b, seed=rng)
        cert = me.construct_theorem2_instrument(c, a2, b2, tol=cfg.tolerances.solver_gap)
        isco_ok = abs(cert.p_isco - 1.0 / (a2 * b2)) <= 1e-8
        yield cert.residual, 1e-4, isco_ok


def _suite_monotonicity(cfg: RunConfig, rng):
    a, b, a2, b2 = cfg.dims
    for _ in range(cfg.trials):
        t = sc.random_isc(a, b, a2, b2, seed=rng)
        c = ch.random_channel(a, b, seed=rng)
        yield max(me.verify_monotonicity(c, t)), 1e-6, True


def _suite_roc(cfg: RunConfig, rng):
    a, b, a2, b2 = cfg.dims
    for _ in range(cfg.trials):
        cs = [ch.random_channel(a, b, seed=rng) for _ in range(3)]
        w = rng.dirichlet(np.ones(3))
        t = sc.random_isc(a, b, a2, b2, seed=rng)
        yield max(me.verify_roc_properties(cs, w, t)), 1e-6, True


def _suite_reduction(cfg: RunConfig, rng):
    for _ in range(cfg.trials):
        dim = int(rng.integers(1, 5))
        yield me.state_reduction_check(ch.random_pure_state(dim, seed=rng)), 1e-6, True


_SUITE_FUNCS = {
    "theorem1": _suite_theorem1,
    "theorem2": _suite_theorem2,
    "monotonicity": _suite_monotonicity,
    "roc": _suite_roc,
    "reduction": _suite_reduction,
}


def run_suite(name: str, cfg: RunConfig, out=None) -> bool:
    out = sys.stdout if out is None else out
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    residuals, passed = [], True
    for i, (res, limit, extra_ok) in enumerate(_SUITE_FUNCS[name](cfg, rng)):
        ok = res <= limit and extra_ok
        passed &= ok
        residuals.append(res)
        if cfg.output == "text":
            print(f"  {name} trial {i}: residual {res:.3e} {'ok' if ok else 'FAIL'}", file=out)
    worst = max(residuals)
    elapsed = time.perf_counter() - start
    if cfg.output == "json":
        print(json.dumps({"suite": name, "seed": cfg.seed, "trials": cfg.trials, "max_residual": worst,
                          "residuals": residuals, "passed": passed, "seconds": elapsed}), file=out)
    else:
        status = "PASS" if passed else "FAIL"
        print(f"{status} {name}: seed={cfg.seed} trials={cfg.trials} max_residual={worst:.3e} "
              f"time={elapsed:.2f}s", file=out)
    return passed


def cmd_verify(args) -> int:
    tols = _tolerances(args)
    cfg = RunConfig(tols, args.seed, args.trials, tuple(args.dims), "json" if args.json else "text")
    names = SUITES if args.suite == "all" else (args.suite,)
    if cfg.output == "text":
        print(f"seed = {cfg.seed}")
    ok = True
    for name in names:
        ok &= run_suite(name, cfg)
    return EXIT_OK if ok else EXIT_SUITE


# --------------------------------------------------------------------------
# random
# --------------------------------------------------------------------------


def cmd_random(args) -> int:
    a, b = args.dims
    c = ch.random_channel(a, b, env_dim=args.env, seed=args.seed)
    ch.save_channel(c, args.out)
    print(f"seed = {args.seed}; wrote {args.out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# wiring
# --------------------------------------------------------------------------


def _tolerances(args) -> Tolerances:
    base = Tolerances.from_env()
    return base.replace(solver_gap=args.tol_gap, psd=args.tol_psd, classification=args.tol_class)


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("tolerance must be > 0")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chancoh",
        description="Coherence measures of quantum channels.",
        epilog=f"Default tolerances can be read from the JSON file named by ${ENV_TOLERANCE_FILE}.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    tol_parent = argparse.ArgumentParser(add_help=False)
    tol_parent.add_argument("--tol-gap", type=_positive, default=None, help="solver duality gap tolerance")
    tol_parent.add_argument("--tol-psd", type=_positive, default=None, help="PSD tolerance")
    tol_parent.add_argument("--tol-class", type=_positive, default=None, help="classification tolerance")

    m = sub.add_parser("measure", parents=[tol_parent], help="compute C_max, C_R or D_max of a channel file")
    m.add_argument("--input", required=True)
    m.add_argument("--against")
    m.add_argument("--quantity", choices=("cmax", "cr", "dmax", "both"), default="both")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_measure)

    v = sub.add_parser("verify", parents=[tol_parent], help="run a randomized verification suite")
    v.add_argument("--suite", choices=SUITES + ("all",), required=True)
    v.add_argument("--dims", type=int, nargs=4, metavar=("A", "B", "A2", "B2"), default=[2, 2, 2, 2])
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("random", help="write a random channel to a JSON file")
    r.add_argument("--dims", type=int, nargs=2, metavar=("A", "B"), required=True)
    r.add_argument("--env", type=int, default=0, help="environment dimension (0 = |A||B|)")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_random)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
