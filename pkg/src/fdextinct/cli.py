"""Command-line entry point: ``fdextinct {simulate,sweep,ratefit,check,exponents}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import outputs
from .diagnostics import CHECKS, run_checks
from .exponents import ParamError, derive, validate_params
from .experiment import (EXIT_CONFIG, EXIT_OK, EXIT_VERDICT, ConfigError, parse_config,
                         run_experiment, run_sweep, validate_config)
from .rescale import InsufficientData, fit_rate
from .solver import norm_orders


def _window(text: str):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("window is 'lo,hi'")
    return tuple(parts)


def _add_overrides(p):
    p.add_argument("config", type=Path)
    p.add_argument("--Rmax", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--dt-init", type=float)
    p.add_argument("--eps-ext", type=float)
    p.add_argument("--window", type=_window)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")


def _load(args):
    cfg = parse_config(args.config.read_text())
    kw, skw = {}, {}
    if args.Rmax is not None:
        kw["R_max"] = args.Rmax
    if args.M is not None:
        kw["M"] = args.M
    if args.window is not None:
        kw["window"] = args.window
    if args.workers is not None:
        kw["workers"] = args.workers
    if args.out is not None:
        kw["out"] = args.out
    if args.dt_init is not None:
        skw["dt_init"] = args.dt_init
        skw["dt_max"] = max(cfg.solver.dt_max, args.dt_init)
    if args.eps_ext is not None:
        skw["eps_ext"] = args.eps_ext
    if skw:
        kw["solver"] = replace(cfg.solver, **skw)
    cfg = replace(cfg, **kw)
    validate_config(cfg)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    s = run_experiment(cfg)
    print(f"T_e_est = {s.T_e_est!r}  status = {s.status}")
    for c in s.checks:
        print(f"  check {c['check']:<20} {'PASS' if c['pass'] else 'FAIL'}  margin={c['worst_margin']!r}")
    for f in s.ratefits:
        print(f"  rate r={f['r']!s:<6} slope={f['slope']:.6f} expected={f['expected']:.6f} "
              f"{'PASS' if f['pass'] else 'FAIL'}")
    if s.error:
        print(s.error, file=sys.stderr)
    return s.exit_code


def cmd_sweep(args) -> int:
    cfg = _load(args)
    _, rows = run_sweep(cfg)
    for r in rows:
        print(f"N={r['N']:g} m={r['m']:g} q={r['q']:g}: {r['status']}")
    bad = [r for r in rows if r["status"] not in ("pass",) and not r["status"].startswith("skipped")]
    return EXIT_VERDICT if bad else EXIT_OK


def cmd_ratefit(args) -> int:
    traj = outputs.load_trajectory(args.trajectory)
    fits = []
    for r in norm_orders(traj.params.m):
        try:
            fits.append(fit_rate(traj, r, args.window, args.tolerance))
        except InsufficientData as exc:
            print(f"r={r}: {exc}", file=sys.stderr)
    chash = outputs.read_header(args.trajectory).get("config_hash", "")
    out = Path(args.out) if args.out else args.trajectory.parent / "ratefit.csv"
    out.write_text(outputs.ratefit_csv(fits, chash))
    for f in fits:
        print(f"r={f.row()['r']!s:<6} slope={f.slope:.6f} +- {f.band:.2e} "
              f"expected={f.expected:.6f} rel_dev={f.rel_dev:.3e} {'PASS' if f.passed else 'FAIL'}")
    return EXIT_OK if fits and all(f.passed for f in fits) else EXIT_VERDICT


def cmd_check(args) -> int:
    d = Path(args.trajectory_dir)
    traj = outputs.load_trajectory(d / "trajectory.csv")
    names = args.checks.split(",") if args.checks else ["barrier", "linf_lower", "positivity", "dt_bound"]
    if traj.params.regime != "rates":
        names = [n for n in names if n != "barrier"]
    reports = run_checks(traj, names)
    chash = outputs.read_header(d / "trajectory.csv").get("config_hash", "")
    out = Path(args.out) if args.out else d / "checks.csv"
    out.write_text(outputs.checks_csv(reports, chash))
    for r in reports:
        print(f"{r.name:<20} {'PASS' if r.passed else 'FAIL'}  margin={r.worst_margin!r}  {r.note}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERDICT


def cmd_exponents(args) -> int:
    try:
        ex = derive(validate_params(args.N, args.m, args.q))
    except ParamError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for k, v in ex.as_dict().items():
        print(f"{k:<11} {v!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fdextinct", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("simulate", help="run one experiment from a config file")
    _add_overrides(p)
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("sweep", help="run the (N, m, q) sweep of a config file")
    _add_overrides(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("ratefit", help="fit extinction rates from a trajectory.csv")
    p.add_argument("trajectory", type=Path)
    p.add_argument("--window", type=_window, default=(0.7, 0.99))
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ratefit)
    p = sub.add_parser("check", help="re-run diagnostics on a simulate output directory")
    p.add_argument("trajectory_dir", type=Path)
    p.add_argument("--checks", help=f"comma list from {', '.join(CHECKS)}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("exponents", help="print the derived exponents")
    p.add_argument("--N", type=float, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.set_defaults(func=cmd_exponents)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
