"""
Command-line front end: figure data and seeded verification campaigns.

All logarithms are natural. CSV output uses 17 significant digits so that
doubles round-trip exactly, and rows are ordered by trial index. The
environment variable TRACE_INEQ_THREADS caps the number of worker threads.

Exit codes: 0 when every checked contract holds, 1 when a violation was
found (the offending instance is written as JSON to stderr or to
``--dump``), 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .densities import QuadratureError, beta_table, make_quadrature
from .entropy import strengthened_monotonicity_report
from .inequalities import (
    MatrixTuple,
    alt_general,
    alt_multi,
    counterexample_report,
    gt_general,
    gt_multi,
    lieb_triple_rhs,
    our_gt3_rhs,
)
from .linalg import DomainError, from_json, to_json
from .pinching import tensor_pinch_gt_demo
from .random import (
    ginibre,
    random_density,
    random_hermitian,
    random_positive_definite,
    random_psd,
    rng_for,
)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Configuration or input-file problem (exit code 2)."""


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def thread_count() -> int:
    raw = os.environ.get("TRACE_INEQ_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise InputError(f"TRACE_INEQ_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise InputError("TRACE_INEQ_THREADS must be at least 1")
    return n


def run_trials(fn: Callable[[int], object], trials: int) -> list:
    """Evaluate ``fn`` on 0..trials-1, in parallel if allowed, in index order."""
    n = min(thread_count(), max(trials, 1))
    if n == 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, range(trials)))


def write_csv(out, header: Sequence[str], rows) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def dump_violation(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2)
    if getattr(args, "dump", None):
        with open(args.dump, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text, file=sys.stderr)


# --- verify ----------------------------------------------------------------------


def _instance(kind: str, n: int, d: int, rng: np.random.Generator) -> list[np.ndarray]:
    if kind == "gt":
        return [random_hermitian(d, rng, scale=2.0) for _ in range(n)]
    if kind == "alt":
        return [random_psd(d, rng) for _ in range(n)]
    return [ginibre(d, rng) / math.sqrt(d) for _ in range(n)]


def _evaluate(kind: str, mats, p: float, r: float | None, quad):
    if kind == "gt":
        return gt_multi(MatrixTuple(mats, "hermitian"), p=p, quad=quad)
    if kind == "alt":
        return alt_multi(MatrixTuple(mats, "psd"), p=p, r=r, quad=quad)
    if r is None:
        return gt_general(MatrixTuple(mats, "general"), p=p, quad=quad)
    return alt_general(MatrixTuple(mats, "general"), p=p, r=r, quad=quad)


def _verify_params(args) -> tuple[float | None, object]:
    if args.p < 1:
        raise InputError("--p must be at least 1")
    r = args.r
    if args.kind == "alt" and r is None:
        r = 0.5
    if r is not None:
        upper_ok = r <= 1.0 if args.kind == "alt" else r < 1.0
        if not (r > 0.0 and upper_ok):
            raise InputError("--r must lie in (0, 1] for alt and in (0, 1) for general")
    theta = 0.0 if args.kind == "gt" or (args.kind == "general" and r is None) else r
    return r, make_quadrature(theta, args.quad_tol) if theta < 1.0 else make_quadrature(1.0)


def cmd_verify(args, out) -> int:
    r, quad = _verify_params(args)
    if args.matrices:
        return _verify_single(args, r, quad, out)
    if args.n < 1 or args.dim < 1 or args.trials < 0:
        raise InputError("--n and --dim must be positive and --trials non-negative")

    def trial(i):
        mats = _instance(args.kind, args.n, args.dim, rng_for(args.seed, i))
        return mats, _evaluate(args.kind, mats, args.p, r, quad)

    results = run_trials(trial, args.trials)
    rows = [(args.seed, i, rep.lhs_log, rep.rhs_log, rep.gap, rep.quad_error)
            for i, (_, rep) in enumerate(results)]
    write_csv(out, ["seed", "instance", "lhs", "rhs", "gap", "quad_error"], rows)
    for i, (mats, rep) in enumerate(results):
        if not rep.holds(args.tol):
            dump_violation(args, {
                "kind": args.kind, "p": args.p, "r": r, "seed": args.seed, "instance": i,
                "lhs": rep.lhs_log, "rhs": rep.rhs_log, "gap": rep.gap, "quad_error": rep.quad_error,
                "matrices": [to_json(M) for M in mats],
            })
            return EXIT_VIOLATION
    return EXIT_OK


def _verify_single(args, r, quad, out) -> int:
    try:
        with open(args.matrices, encoding="utf-8") as fh:
            payload = json.load(fh)
        mats = [from_json(m) for m in payload["matrices"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read matrices from {args.matrices}: {exc}") from exc
    rep = _evaluate(args.kind, mats, args.p, r, quad)
    seed, inst = payload.get("seed", args.seed), payload.get("instance", 0)
    write_csv(out, ["seed", "instance", "lhs", "rhs", "gap", "quad_error"],
              [(seed, inst, rep.lhs_log, rep.rhs_log, rep.gap, rep.quad_error)])
    if not rep.holds(args.tol):
        dump_violation(args, {"kind": args.kind, "p": args.p, "r": r, "seed": seed, "instance": inst,
                              "gap": rep.gap, "matrices": payload["matrices"]})
        return EXIT_VIOLATION
    return EXIT_OK


# --- figure data and demos ---------------------------------------------------------


def _grid_args(args) -> None:
    if not args.step > 0 or args.tmax < args.tmin:
        raise InputError("need --step > 0 and --tmax >= --tmin")


def cmd_beta_table(args, out) -> int:
    _grid_args(args)
    if not 0.0 <= args.theta < 1.0:
        raise InputError("--theta must lie in [0, 1); theta = 1 is a point mass")
    write_csv(out, ["t", "beta"], beta_table(args.theta, args.tmin, args.tmax, args.step))
    return EXIT_OK


def cmd_counterexample(args, out) -> int:
    _grid_args(args)
    n = int(round((args.tmax - args.tmin) / args.step))
    grid = args.tmin + args.step * np.arange(n + 1)
    write_csv(out, ["t", "gamma", "kappa"], counterexample_report(args.set, grid))
    return EXIT_OK


def cmd_triple(args, out) -> int:
    if args.trials < 0 or args.dim < 1:
        raise InputError("--trials must be non-negative and --dim positive")
    quad = make_quadrature(0.0, args.quad_tol)

    def trial(i):
        rng = rng_for(args.seed, i)
        H = [random_hermitian(args.dim, rng) for _ in range(3)]
        return lieb_triple_rhs(*H), our_gt3_rhs(*H, quad=quad)

    res = run_trials(trial, args.trials)
    rows = [(args.seed, i, a, b, abs(a - b)) for i, (a, b) in enumerate(res)]
    write_csv(out, ["seed", "instance", "lieb", "ours", "abs_diff"], rows)
    worst = max((row[-1] for row in rows), default=0.0)
    print(f"max |lieb - ours| = {worst:.3e}", file=sys.stderr)
    if worst > args.tol:
        i = int(np.argmax([row[-1] for row in rows]))
        rng = rng_for(args.seed, i)
        H = [random_hermitian(args.dim, rng) for _ in range(3)]
        dump_violation(args, {"seed": args.seed, "instance": i, "abs_diff": worst,
                              "matrices": [to_json(M) for M in H]})
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_pinch_demo(args, out) -> int:
    if args.dim < 1 or args.m < 1 or args.dim ** args.m > 1024:
        raise InputError("need --dim >= 1, --m >= 1 and dim**m <= 1024")
    rng = rng_for(args.seed, 0)
    A = random_positive_definite(args.dim, rng)
    B = random_positive_definite(args.dim, rng)
    rows = [tensor_pinch_gt_demo(A, B, m) for m in range(1, args.m + 1)]
    write_csv(out, ["m", "value", "lower", "upper"], [(r.m, r.value, r.lower, r.upper) for r in rows])
    if any(r.lower > r.upper + 1e-10 for r in rows):
        dump_violation(args, {"seed": args.seed, "A": to_json(A), "B": to_json(B)})
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_recoverability(args, out) -> int:
    if args.dimA < 1 or args.dimB < 1 or args.trials < 0:
        raise InputError("dimensions must be positive and --trials non-negative")
    quad = make_quadrature(0.0, args.quad_tol)
    d = args.dimA * args.dimB

    def trial(i):
        rng = rng_for(args.seed, i)
        rho, sigma = random_density(d, rng), random_density(d, rng)
        return rho, sigma, strengthened_monotonicity_report(rho, sigma, (args.dimA, args.dimB), quad)

    res = run_trials(trial, args.trials)
    rows = [(args.seed, r.delta, r.dm, r.neg_log_f, r.appf_lower, r.appf_upper, r.converged)
            for _, _, r in res]
    write_csv(out, ["seed", "Delta", "DM", "negLogF", "appF_lower", "appF_upper", "converged"], rows)
    for i, (rho, sigma, r) in enumerate(res):
        checks = r.checks(args.tol)
        if not all(checks.values()):
            dump_violation(args, {"seed": args.seed, "instance": i, "dims": [args.dimA, args.dimB],
                                  "checks": checks, "rho_AB": to_json(rho), "sigma_AB": to_json(sigma)})
            return EXIT_VIOLATION
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="traceineq",
        description="Multivariate trace inequalities: figure data and randomized verification. "
                    "All logarithms are natural.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-o", "--output", help="write CSV here instead of stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0, help="seed for all random instances")
        p.add_argument("--dump", help="file for the JSON dump of a violating instance")

    p = sub.add_parser("beta-table", help="CSV t,beta of the interpolation density")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--tmin", type=float, default=-2.0)
    p.add_argument("--tmax", type=float, default=2.0)
    p.add_argument("--step", type=float, default=0.05)
    p.set_defaults(func=cmd_beta_table)

    p = sub.add_parser("verify", help="randomized campaign for one inequality family")
    p.add_argument("kind", choices=["gt", "alt", "general"])
    p.add_argument("--n", type=int, default=3, help="number of matrices")
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--p", type=float, default=2.0, help="Schatten index, at least 1")
    p.add_argument("--r", type=float, default=None,
                   help="ALT exponent (alt default 0.5; for general selects the ALT form)")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--quad-tol", type=float, default=1e-10)
    p.add_argument("--matrices", help="JSON file with one instance to re-run instead of sampling")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterexample", help="CSV t,gamma,kappa for a counterexample set")
    p.add_argument("--set", type=int, choices=[1, 2], required=True)
    p.add_argument("--tmin", type=float, default=-3.0)
    p.add_argument("--tmax", type=float, default=3.0)
    p.add_argument("--step", type=float, default=0.05)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("triple-equivalence", help="resolvent form vs rotated form of the triple bound")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--quad-tol", type=float, default=1e-10)
    common(p)
    p.set_defaults(func=cmd_triple)

    p = sub.add_parser("pinch-demo", help="finite-m pinching squeeze for Golden-Thompson")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--m", type=int, default=4, help="largest tensor power")
    common(p)
    p.set_defaults(func=cmd_pinch_demo)

    p = sub.add_parser("recoverability", help="remainder of monotonicity vs recovery bounds")
    p.add_argument("--dimA", type=int, default=2)
    p.add_argument("--dimB", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--quad-tol", type=float, default=1e-10)
    common(p)
    p.set_defaults(func=cmd_recoverability)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as out:
                return args.func(args, out)
        return args.func(args, sys.stdout)
    except (InputError, DomainError, QuadratureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
