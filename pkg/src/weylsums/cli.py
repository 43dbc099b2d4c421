"""Reproducible experiment runner: every module surface as a subcommand.

Each run writes its result artifacts (JSON and/or CSV) plus a manifest
recording the full configuration, package version, ISO-8601 timestamp and
wall time into the output directory.  Result artifacts are byte-identical
across runs with the same configuration and seed (fixed reduction orders,
counter-based RNG); the manifest carries the timestamp and is the one file
allowed to differ.

Exit codes: 0 success, 2 invalid configuration, 3 resource limit,
4 lemma-check failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import cantor as ct
from . import complete_sums as cs
from . import discrepancy as dc
from . import large_values as lv
from . import weyl_sums as ws
from .errors import (
    LemmaCheckFailureError,
    PreconditionError,
    ResourceLimitError,
    WeylSumsError,
)
from .phasecore import TURN, Phase, RationalPoint

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_RESOURCE_LIMIT = 3
EXIT_LEMMA_FAILURE = 4


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _primes_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma list of integers: {text!r}") from exc


def _uint64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _fmt(value: float) -> str:
    return format(value, ".17g")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _random_point(rng, d: int) -> tuple[Phase, ...]:
    return tuple(Phase(int(f)) for f in rng.integers(0, TURN, size=d, dtype=np.uint64))


def _point_from_args(args) -> tuple:
    """--x 'a1/q,...' exact rational point, or a Philox draw at --d coordinates."""
    if getattr(args, "x", None):
        parts = [Fraction(v) for v in args.x.split(",")]
        q = 1
        for f in parts:
            q = q * f.denominator // math.gcd(q, f.denominator)
        return RationalPoint(a=tuple(int(f * q) for f in parts), q=q)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    return _random_point(rng, args.d)


# ---------------------------------------------------------------------------
# subcommand implementations: each returns {artifact-name: payload-spec}


def _run_gauss_check(args, out: Path) -> None:
    primes = args.primes if args.primes else ((args.p,) if args.p else None)
    if not primes:
        raise PreconditionError("gauss-check needs --p or --primes")
    reports = [cs.gauss_magnitude_check(p, cap=args.cap) for p in primes]
    _write_json(out / "gauss_check.json", [asdict(r) for r in reports])


def _run_monomial_check(args, out: Path) -> None:
    value = cs.monomial_complete_sum(args.d, args.p, args.a)
    _write_json(
        out / "monomial_check.json",
        {
            "d": args.d,
            "p": args.p,
            "a": args.a,
            "value_re": value.real,
            "value_im": value.imag,
            "expected": float(args.p ** (args.d - 1)),
        },
    )


def _run_weil_check(args, out: Path) -> None:
    coeffs = [int(v) for v in args.coeffs.split(",")]
    report = cs.weil_check(coeffs, args.p)
    _write_json(out / "weil_check.json", asdict(report))


def _table(args):
    cache = Path(args.out) / "cache" if args.cache else None
    return cs.cached_table(args.d, args.p, cache_dir=cache, cap=args.cap, override=args.force)


def _run_moments(args, out: Path) -> None:
    table = _table(args)
    rows = []
    for nu in range(1, args.nu + 1):
        incl = cs.mordell_moment(args.d, args.p, nu, include_zero=True, table=table)
        excl = cs.mordell_moment(args.d, args.p, nu, include_zero=False, table=table)
        rows.append((args.d, args.p, nu, incl, excl, float(cs.moment_main_term(args.d, nu))))
    _write_csv(
        out / "moments.csv",
        ["d", "p", "nu", "moment_with_zero", "moment_without_zero", "main_term_A"],
        rows,
    )


def _run_box_moments(args, out: Path) -> None:
    table = _table(args)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    lmin = min(max(int(float(args.p) ** 0.8) + 1, 2), args.p)
    rows = []
    for _ in range(args.count):
        side = int(rng.integers(lmin, args.p + 1))
        starts = tuple(int(v) for v in rng.integers(0, args.p, size=args.d))
        rep = cs.box_moment(args.d, args.p, args.nu, cs.DiscreteBox(starts=starts, side=side), table=table)
        rows.append((args.d, args.p, args.nu, side, rep.value, rep.predicted_main_term, rep.ratio))
    _write_csv(
        out / "box_moments.csv",
        ["d", "p", "nu", "side", "value", "predicted", "ratio"],
        rows,
    )


def _run_enumerate_lp(args, out: Path) -> None:
    lp = lv.enumerate_Lp(args.d, args.p, gamma=float(args.gamma), table=_table(args))
    _write_json(
        out / "enumerate_lp.json",
        {
            "d": args.d,
            "p": args.p,
            "gamma": float(args.gamma),
            "count": len(lp.members),
            "density": lp.density,
            "members": [list(m) for m in lp.members] if len(lp.members) <= args.emit_limit else None,
        },
    )


def _run_orbit_count(args, out: Path) -> None:
    a = tuple(int(v) for v in args.a.split(","))
    box = cs.DiscreteBox(starts=(0,) * len(a), side=args.side)
    rep = lv.orbit_in_box_count(a, args.p, box)
    _write_json(
        out / "orbit_count.json",
        {"p": args.p, "a": list(a), "side": args.side, "count": rep.count, "reference": rep.reference},
    )


def _run_box_density(args, out: Path) -> None:
    lp = lv.enumerate_Lp(args.d, args.p, gamma=float(args.gamma), table=_table(args))
    sweep = lv.minimal_witness_side(lp)
    _write_json(out / "box_density.json", {"d": args.d, "p": args.p, **sweep})


def _run_amplify(args, out: Path) -> None:
    plan = lv.amplification_plan(args.p, args.tau, args.d, gamma=args.gamma, seed=args.seed)
    reports = []
    for axis in range(plan.d):
        for sign in (+1, -1):
            x = lv.neighborhood_point(plan, axis, sign)
            reports.append(lv.amplified_sum_check(plan, x).to_json_dict())
    _write_json(out / "amplify.json", reports)


def _run_amplify_mono(args, out: Path) -> None:
    report = lv.monomial_amplified_check(args.a, args.p, args.d, args.tau)
    _write_json(out / "amplify_mono.json", report.to_json_dict())


def _run_weyl_trace(args, out: Path) -> None:
    x = _point_from_args(args)
    trace = ws.weyl_sum_trace(x, ws.checkpoint_grid(args.n_max), m=args.m)
    _write_csv(out / "weyl_trace.csv", ["N", "re", "im", "magnitude"], trace.rows())


def _run_mr_scan(args, out: Path) -> None:
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    maxima = []
    for _ in range(args.count):
        x = _random_point(rng, args.d)
        maxima.append(ws.mr_ratio_scan(x, args.n_max).max_ratio)
    maxima_sorted = sorted(maxima)
    _write_json(
        out / "mr_scan.json",
        {
            "d": args.d,
            "n_max": args.n_max,
            "count": args.count,
            "median_max_ratio": maxima_sorted[len(maxima_sorted) // 2],
            "max_ratio": maxima_sorted[-1],
            "ratios": maxima,
        },
    )


def _run_sigma_scan(args, out: Path) -> None:
    x = _point_from_args(args)
    trace = ws.weyl_sum_trace(x, ws.dyadic_grid(args.n_max, start_exp=1), m=args.m)
    est = ws.sigma_estimate(trace)
    _write_json(
        out / "sigma_scan.json",
        {"n_max": args.n_max, "sigma_estimate": est.value, "degenerate": est.degenerate},
    )


def _run_exceptional_scan(args, out: Path) -> None:
    x = _point_from_args(args)
    hits = ws.exceptional_scan(x, args.alpha, args.n_max, m=args.m)
    _write_json(out / "exceptional_scan.json", {"alpha": args.alpha, "qualifying_N": hits})


def _run_measure_estimate(args, out: Path) -> None:
    rep = lv.measure_estimate(args.d, args.alpha, args.i, args.samples, seed=args.seed)
    _write_json(out / "measure_estimate.json", asdict(rep))


def _run_cantor_build(args, out: Path) -> None:
    result = ct.large_sum_cantor(
        args.d, args.tau, args.epsilon, args.primes, args.depth, gamma=float(args.gamma), cap=args.cap
    )
    (out / "cantor_boxes.jsonl").write_text(result.collection.to_jsonl())
    _write_json(
        out / "cantor_summary.json",
        {
            "d": args.d,
            "tau": str(args.tau),
            "primes": list(args.primes),
            "depth": args.depth,
            "cells_per_axis": list(result.cells_per_axis),
            "box_count": len(result.collection.boxes),
            "certificates_pass": all(c.passed for c in result.certificates),
            "dimension_value": result.dimension_value,
            "epsilon_requested": result.epsilon_requested,
            "epsilon_effective": result.epsilon_effective,
        },
    )


def _run_cantor_dim(args, out: Path) -> None:
    shrink = Fraction(1, args.shrink)
    sched = ct.geometric_schedule(args.d, [(args.cells, shrink)] * args.depth)
    coll = ct.build_cantor(sched, args.depth, rule=args.rule, seed=args.seed)
    scales = [Fraction(1, args.shrink**k) for k in range(1, args.depth + 2)]
    dim_f = ct.dimension_formula(sched, args.depth)
    dim_b = ct.box_counting_dimension(coll, scales)
    _write_json(
        out / "cantor_dim.json",
        {
            "d": args.d,
            "cells_per_axis": args.cells,
            "shrink": args.shrink,
            "depth": args.depth,
            "dimension_formula": dim_f,
            "box_counting_dimension": dim_b,
        },
    )


def _run_pattern_demo(args, out: Path) -> None:
    spec = ct.PatternSpec(a=Fraction(1), b=Fraction(1, args.cells), c=args.c, rule=args.rule, seed=args.seed)
    boxes = ct.make_pattern(ct.unit_box(args.d), spec)
    coll = ct.BoxCollection(depth=1, boxes=tuple(boxes))
    (out / "pattern.jsonl").write_text(coll.to_jsonl())


def _run_discrepancy(args, out: Path) -> None:
    x = _point_from_args(args)
    rows = dc.scan_rows(x, args.n_max, m=args.m)
    _write_csv(out / "discrepancy.csv", ["N", "D_N", "D_star_N", "S_magnitude", "ratio"], rows)


def _run_koksma_check(args, out: Path) -> None:
    if args.count < 1:
        raise PreconditionError("need count >= 1")
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    worst = None
    for _ in range(args.count):
        x = _random_point(rng, args.d)
        n = int(rng.integers(1, args.n_max + 1))
        rep = dc.koksma_relation_check(x, n)
        if worst is None or rep.ratio > worst.ratio:
            worst = rep
    _write_json(out / "koksma_check.json", asdict(worst))


def _run_discrepancy_scan(args, out: Path) -> None:
    x = _point_from_args(args)
    hits = dc.discrepancy_scan(x, args.alpha, args.n_max, m=args.m)
    _write_json(out / "discrepancy_scan.json", {"alpha": args.alpha, "qualifying_N": hits})


# ---------------------------------------------------------------------------
# argument wiring


def _add_common(sp, *, d=None, p=False, seed=True):
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--cap", type=int, default=cs.DEFAULT_CAP, help="max table entries")
    sp.add_argument("--threads", type=int, default=1, help="worker count (outputs are independent of it)")
    sp.add_argument("--force", action="store_true", help="override the resource cap")
    sp.add_argument("--cache", action="store_true", help="cache complete-sum tables under OUT/cache")
    if seed:
        sp.add_argument("--seed", type=_uint64, default=0)
    if d is not None:
        sp.add_argument("--d", type=int, default=d)
    if p:
        sp.add_argument("--p", type=int, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weylsums", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("gauss-check", help="Gauss magnitude law over all (a, b), b != 0")
    _add_common(sp, p=False)
    sp.add_argument("--p", type=int)
    sp.add_argument("--primes", type=_primes_list, help="comma list; overrides --p")
    sp.set_defaults(func=_run_gauss_check)

    sp = sub.add_parser("monomial-check", help="complete monomial sum = p^(d-1)")
    _add_common(sp, d=2, p=True)
    sp.add_argument("--a", type=int, default=1)
    sp.set_defaults(func=_run_monomial_check)

    sp = sub.add_parser("weil-check", help="character-sum magnitude vs (deg-1) sqrt(p)")
    _add_common(sp, p=True)
    sp.add_argument("--coeffs", required=True, help="f coefficients, constant first, comma list")
    sp.set_defaults(func=_run_weil_check)

    sp = sub.add_parser("moments", help="power moments of |T| over F_p^d")
    _add_common(sp, d=2, p=True)
    sp.add_argument("--nu", type=int, default=2)
    sp.set_defaults(func=_run_moments)

    sp = sub.add_parser("box-moments", help="moments over random sub-boxes vs the main term")
    _add_common(sp, d=2, p=True)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--count", type=int, default=50)
    sp.set_defaults(func=_run_box_moments)

    sp = sub.add_parser("enumerate-lp", help="the large-sum set L_p and its density")
    _add_common(sp, d=2, p=True)
    sp.add_argument("--gamma", type=_fraction, default=Fraction(1))
    sp.add_argument("--emit-limit", type=int, default=10000)
    sp.set_defaults(func=_run_enumerate_lp)

    sp = sub.add_parser("orbit-count", help="lambda-orbit points inside an origin-cornered box")
    _add_common(sp, p=True)
    sp.add_argument("--a", default="1,1", help="nonzero prefix coefficients, comma list")
    sp.add_argument("--side", type=int, required=True)
    sp.set_defaults(func=_run_orbit_count)

    sp = sub.add_parser("box-density", help="minimal box side containing an L_p witness")
    _add_common(sp, d=3, p=True)
    sp.add_argument("--gamma", type=_fraction, default=Fraction(1))
    sp.set_defaults(func=_run_box_density)

    sp = sub.add_parser("amplify", help="neighborhood large-sum checks in all 2d directions")
    _add_common(sp, d=2, p=True)
    sp.add_argument("--tau", type=_fraction, required=True)
    sp.add_argument("--gamma", type=_fraction, default=Fraction(1))
    sp.set_defaults(func=_run_amplify)

    sp = sub.add_parser("amplify-mono", help="monomial neighborhood check at N = p^d")
    _add_common(sp, d=2, p=True)
    sp.add_argument("--tau", type=_fraction, required=True)
    sp.add_argument("--a", type=int, default=1)
    sp.set_defaults(func=_run_amplify_mono)

    sp = sub.add_parser("weyl-trace", help="streaming |S| trace over the checkpoint grid")
    _add_common(sp, d=2)
    sp.add_argument("--x", help="exact rational point 'a1/q1,a2/q2,...'")
    sp.add_argument("--m", type=_primes_list, default=None, help="sparse exponents")
    sp.add_argument("--N-max", dest="n_max", type=int, default=4096)
    sp.set_defaults(func=_run_weyl_trace)

    sp = sub.add_parser("mr-scan", help="dyadic |S| / (sqrt(N) log^1.5 N) ratios, random points")
    _add_common(sp, d=2)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--N-max", dest="n_max", type=int, default=10**5)
    sp.set_defaults(func=_run_mr_scan)

    sp = sub.add_parser("sigma-scan", help="finite-scale growth exponent over a dyadic trace")
    _add_common(sp, d=2)
    sp.add_argument("--x", help="exact rational point")
    sp.add_argument("--m", type=_primes_list, default=None)
    sp.add_argument("--N-max", dest="n_max", type=int, default=2**16)
    sp.set_defaults(func=_run_sigma_scan)

    sp = sub.add_parser("exceptional-scan", help="checkpoints with |S| >= N^alpha")
    _add_common(sp, d=2)
    sp.add_argument("--x", help="exact rational point")
    sp.add_argument("--m", type=_primes_list, default=None)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--N-max", dest="n_max", type=int, default=10**4)
    sp.set_defaults(func=_run_exceptional_scan)

    sp = sub.add_parser("measure-estimate", help="Monte Carlo measure of {|S(x;i)| >= i^alpha}")
    _add_common(sp, d=2)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--i", type=int, required=True)
    sp.add_argument("--samples", type=int, default=10**4)
    sp.set_defaults(func=_run_measure_estimate)

    sp = sub.add_parser("cantor-build", help="large-sum-guided Cantor construction + certificates")
    _add_common(sp, d=3)
    sp.add_argument("--tau", type=_fraction, required=True)
    sp.add_argument("--epsilon", type=_fraction, default=Fraction(1, 20))
    sp.add_argument("--primes", type=_primes_list, required=True)
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--gamma", type=_fraction, default=Fraction(1))
    sp.set_defaults(func=_run_cantor_build)

    sp = sub.add_parser("cantor-dim", help="dimension formula vs box counting on a geometric schedule")
    _add_common(sp, d=2)
    sp.add_argument("--cells", type=int, default=2, help="cells per axis per level")
    sp.add_argument("--shrink", type=int, default=4, help="delta_{k-1}/delta_k")
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--rule", default="centered", choices=("corner", "centered", "seeded-random"))
    sp.set_defaults(func=_run_cantor_dim)

    sp = sub.add_parser("pattern-demo", help="a single (1, 1/m, c)-pattern as JSONL")
    _add_common(sp, d=2)
    sp.add_argument("--cells", type=int, default=3)
    sp.add_argument("--c", type=_fraction, default=Fraction(1, 10))
    sp.add_argument("--rule", default="centered", choices=("corner", "centered", "seeded-random"))
    sp.set_defaults(func=_run_pattern_demo)

    sp = sub.add_parser("discrepancy", help="N, D_N, D*_N, |S| rows over the checkpoint grid")
    _add_common(sp, d=2)
    sp.add_argument("--x", help="exact rational point")
    sp.add_argument("--m", type=_primes_list, default=None)
    sp.add_argument("--N-max", dest="n_max", type=int, default=1024)
    sp.set_defaults(func=_run_discrepancy)

    sp = sub.add_parser("koksma-check", help="|S| <= 2 pi D*_N over random evaluations")
    _add_common(sp, d=2)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--N-max", dest="n_max", type=int, default=1000)
    sp.set_defaults(func=_run_koksma_check)

    sp = sub.add_parser("discrepancy-scan", help="checkpoints with D_N >= N^alpha")
    _add_common(sp, d=2)
    sp.add_argument("--x", help="exact rational point")
    sp.add_argument("--m", type=_primes_list, default=None)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--N-max", dest="n_max", type=int, default=10**4)
    sp.set_defaults(func=_run_discrepancy_scan)

    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    try:
        args.func(args, out)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE_LIMIT
    except LemmaCheckFailureError as exc:
        print(f"lemma check failed: {exc}", file=sys.stderr)
        return EXIT_LEMMA_FAILURE
    except (PreconditionError, WeylSumsError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    wall = time.monotonic() - start
    config = {
        k: (str(v) if isinstance(v, Fraction) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and not callable(v)
    }
    manifest = {
        "command": args.command,
        "config": config,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_time_s": wall,
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


def main() -> None:
    sys.exit(run())
