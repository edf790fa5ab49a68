"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from .. import crosscheck, diagnostics
from ..models import coverage as cov
from ..models import interval as itv
from ..models import normal as nrm
from ..models import pareto as par
from . import config as cfgmod
from . import experiment

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        values = [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _kv(text: str) -> dict[str, str]:
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def cmd_simulate(args) -> int:
    cfg = cfgmod.load_config(args.config)
    cfg = cfg.with_overrides(replications=args.replications, seed=args.seed, workers=args.workers)
    curve = experiment.run_experiment(cfg)
    path = experiment.emit_csv(curve, args.out or cfg.output_path)
    print(f"wrote {path}")
    for i in np.flatnonzero(~curve.is_optimal):
        print(f"arm {i}: slope {curve.slope[i]:.4g} +- {curve.slope_se[i]:.2g}, target 1/M {curve.target_inv_M[i]:.4g}")
    return EXIT_OK


INDEX_PARAMS = {
    "pareto": ({"alpha", "beta"}, {"score": "tail_exponent", "floor_l": None}),
    "coverage": ({"measure"}, {"d_schedule": "sqrt"}),
    "interval": ({"low", "high"}, {}),
    "normal_chk": ({"mu", "sigma"}, {}),
    "normal_var": ({"sigma"}, {"mu": "0"}),
    "normal_thr": ({"mu", "sigma_known", "kappa"}, {}),
}


def _index_fn(family: str, raw: dict[str, str]):
    """Closed-form index of an estimate given by ``raw``, as a function of (t, n)."""
    required, optional = INDEX_PARAMS[family]
    unknown = set(raw) - required - set(optional)
    missing = required - set(raw)
    if unknown or missing:
        raise ValueError(f"{family}: unknown params {sorted(unknown)}, missing {sorted(missing)}")
    p = {**optional, **raw}
    num = lambda k: float(p[k])
    if family == "pareto":
        score = par.SCORES.get(p["score"])
        if score is None:
            raise ValueError(f"unknown Pareto score {p['score']!r}")
        floor = score.floor_l if p["floor_l"] is None else num("floor_l")
        est = par.ParetoParams(num("alpha"), num("beta"))
        return lambda t, n: par.pareto_index(par.ParetoStats(t, est.beta, (t - 1) / est.alpha), n, score, floor)
    if family == "coverage":
        measure = num("measure")
        if not 0.0 < measure <= 1.0:
            raise ValueError("measure must lie in (0, 1]")
        schedule = cov.PartitionSchedule(p["d_schedule"])
        return lambda t, n: cov.coverage_index(cov.CoverageStats(np.full(t, 0.5)), n, schedule, measure=measure)
    if family == "interval":
        est = itv.IntervalParams(num("low"), num("high"))
        return lambda t, n: itv.interval_index(itv.IntervalStats(t, est.low, est.high), n, itv.MEAN_SCORE)
    if family in ("normal_chk", "normal_var"):
        est = nrm.NormalParams(num("mu"), num("sigma"))
        fn = nrm.index_chk if family == "normal_chk" else nrm.index_var
        return lambda t, n: fn(nrm.NormalStats(t, est.mu, est.sigma**2 * (t - 1)), n)
    spec = nrm.ThresholdSpec(num("kappa"), num("sigma_known"))
    mu = num("mu")
    return lambda t, n: nrm.index_threshold(nrm.NormalStats(t, mu, 0.0), n, spec)


def cmd_index_table(args) -> int:
    fn = _index_fn(args.family, args.params)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["family", "t", "n", "index"])
    for t in args.t:
        for n in args.n:
            writer.writerow([args.family, t, n, "%.12g" % fn(t, n)])
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    if args.draws < 1:
        raise ValueError("--draws must be positive")
    rows = diagnostics.BOUND_CHECKS[args.lemma](args.draws, args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["check", "empirical", "analytic", "result"])
    for row in rows:
        writer.writerow([row.check, "%.6g" % row.empirical, "%.6g" % row.analytic, "pass" if row.passed else "FAIL"])
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAILED


def cmd_oracle_check(args) -> int:
    names = list(crosscheck.CHECKS) if args.family == "all" else [args.family]
    ok = True
    print("family,cases,max_abs_err_M,max_abs_err_index,duality_excess,result")
    for name in names:
        try:
            rep = crosscheck.check_family(name, args.grid_resolution)
        except RuntimeError as exc:
            print(f"{name},0,,,,FAIL ({exc})")
            ok = False
            continue
        passed = rep.passed()
        ok &= passed
        print(f"{name},{rep.cases},{rep.m_error:.3e},{rep.index_error:.3e},{rep.duality_excess:.3e},"
              f"{'pass' if passed else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ucbscore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured experiment and write the CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("index-table", help="print closed-form index values")
    p.add_argument("--family", required=True, choices=sorted(INDEX_PARAMS))
    p.add_argument("--params", required=True, type=_kv, help="estimate parameters, e.g. mu=0,sigma=1")
    p.add_argument("--n", required=True, type=_int_list)
    p.add_argument("--t", required=True, type=_int_list)
    p.set_defaults(func=cmd_index_table)

    p = sub.add_parser("verify-bounds", help="Monte Carlo check of estimator laws and tail bounds")
    p.add_argument("--lemma", required=True, choices=sorted(diagnostics.BOUND_CHECKS))
    p.add_argument("--draws", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("oracle-check", help="closed forms versus brute-force oracles")
    p.add_argument("--family", required=True, choices=sorted(crosscheck.CHECKS) + ["all"])
    p.add_argument("--grid-resolution", type=int, default=64)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
