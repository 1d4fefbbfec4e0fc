"""Experiment configuration, single runs, and parameter sweeps.

Configuration text is INI-style (read with :mod:`configparser`)::

    [params]
    N = 1
    m = 0.5
    q = 0.75
    # regime = rates | positivity

    [initial]
    family = capped_power     # flat | capped_power | indicator | gaussian
    A = 1

    [grid]
    R_max = 20
    M = 2048

    [solver]
    dt_init = 1e-3
    eps_ext = 1e-8
    boundary = dirichlet_zero # or barrier_clamp

    [checks]
    enabled = barrier, linf_lower, positivity, dt_bound

    [ratefit]
    window = 0.7, 0.99
    tolerance = 0.1

    [output]
    dir = out

    [sweep]
    m = 0.4, 0.5, 0.6
    q = 0.7, 0.8
    N = 1
    workers = 2

Any key left out takes the default of :class:`ExperimentConfig` /
:class:`~fdextinct.solver.SolverConfig`.
"""
from __future__ import annotations

import configparser
import hashlib
import itertools
import json
import logging
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import outputs
from .diagnostics import CHECKS, run_checks
from .exponents import ParamError, derive, validate_params
from .grid import make_uniform_grid
from .rescale import InsufficientData, fit_rate, rescaled_norm_series
from .solver import SolverConfig, SolverError, norm_orders, run

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

DEFAULT_CHECKS = ("barrier", "linf_lower", "positivity", "dt_bound")
FAMILIES = {"flat": {"A": 1.0}, "capped_power": {"A": 1.0},
            "indicator": {"R": 1.0, "A": 1.0}, "gaussian": {"A": 1.0, "sigma": 1.0}}


class ConfigError(ValueError):
    pass


class ParseError(ConfigError):
    def __init__(self, msg, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {msg}" if where else msg)
        self.line, self.key = line, key


class ValidationError(ConfigError):
    def __init__(self, cause: Exception):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause


class EmptySweep(ConfigError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    N: float = 1.0
    m: float = 0.5
    q: float = 0.75
    regime: str = "rates"
    family: str = "flat"
    family_args: tuple = ()  # sorted (name, value) pairs
    R_max: float = 20.0
    M: int = 2048
    solver: SolverConfig = SolverConfig()
    checks: tuple = DEFAULT_CHECKS
    window: tuple = (0.7, 0.99)
    rate_tolerance: float = 0.1
    out: str = "out"
    sweep_N: tuple = ()
    sweep_m: tuple = ()
    sweep_q: tuple = ()
    workers: int = 0  # 0 = os.cpu_count()

    @property
    def is_sweep(self) -> bool:
        return bool(self.sweep_N or self.sweep_m or self.sweep_q)

    def family_params(self) -> dict:
        args = dict(FAMILIES[self.family])
        args.update(dict(self.family_args))
        return args

    def echo(self) -> dict:
        d = asdict(self)
        d["solver"] = asdict(self.solver)
        d["family_args"] = self.family_params()
        return d

    def config_hash(self) -> str:
        d = self.echo()
        d.pop("out")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTION_KEYS = {
    "params": {"N", "m", "q", "regime"},
    "initial": {"family", "A", "R", "sigma"},
    "grid": {"R_max", "M"},
    "solver": {f.name for f in fields(SolverConfig)},
    "checks": {"enabled"},
    "ratefit": {"window", "tolerance"},
    "output": {"dir"},
    "sweep": {"N", "m", "q", "workers"},
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def _floats(text: str, val: str, section: str, key: str) -> tuple:
    try:
        return tuple(float(x) for x in val.replace(";", ",").split(",") if x.strip())
    except ValueError:
        raise ParseError(f"expected a number or list of numbers, got {val!r}",
                         _line_of(text, section, key), f"{section}.{key}") from None


def _bool(val: str) -> bool:
    v = val.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(val)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text; every omitted key takes its default."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None

    for sec in cp.sections():
        if sec not in _SECTION_KEYS:
            raise ParseError(f"unknown section [{sec}]", _line_of(text, sec))
        for key in cp[sec]:
            if key not in _SECTION_KEYS[sec]:
                raise ParseError("unknown key", _line_of(text, sec, key), f"{sec}.{key}")

    def get(sec, key, conv=float, default=None):
        if not cp.has_option(sec, key):
            return default
        raw = cp.get(sec, key)
        try:
            return conv(raw)
        except (TypeError, ValueError):
            raise ParseError(f"cannot interpret {raw!r}", _line_of(text, sec, key),
                             f"{sec}.{key}") from None

    base = ExperimentConfig()
    kw: dict = {}
    for key in ("N", "m", "q"):
        v = get("params", key)
        if v is not None:
            kw[key] = v
    kw["regime"] = get("params", "regime", str, base.regime).strip()

    family = get("initial", "family", str, base.family).strip()
    if family not in FAMILIES:
        raise ParseError(f"unknown initial-datum family {family!r}; known: {sorted(FAMILIES)}",
                         _line_of(text, "initial", "family"), "initial.family")
    fargs = {}
    for key in ("A", "R", "sigma"):
        v = get("initial", key)
        if v is not None:
            if key not in FAMILIES[family]:
                raise ParseError(f"family {family!r} takes no parameter {key!r}",
                                 _line_of(text, "initial", key), f"initial.{key}")
            fargs[key] = v
    kw["family"] = family
    kw["family_args"] = tuple(sorted(fargs.items()))

    kw["R_max"] = get("grid", "R_max", float, base.R_max)
    M = get("grid", "M", float, float(base.M))
    if M != int(M):
        raise ParseError("M must be an integer", _line_of(text, "grid", "M"), "grid.M")
    kw["M"] = int(M)

    skw = {}
    for f in fields(SolverConfig):
        if not cp.has_option("solver", f.name):
            continue
        if f.name == "boundary":
            conv = lambda s: s.strip()
        elif f.name == "adaptive":
            conv = _bool
        elif f.name in ("newton_max_iter", "snapshot_stride", "max_steps"):
            conv = lambda s: int(float(s))
        else:
            conv = float
        skw[f.name] = get("solver", f.name, conv)
    try:
        kw["solver"] = SolverConfig(**skw)
    except ValueError as exc:
        raise ParseError(str(exc), _line_of(text, "solver")) from None

    if cp.has_option("checks", "enabled"):
        names = tuple(x.strip() for x in cp.get("checks", "enabled").split(",") if x.strip())
        bad = [n for n in names if n not in CHECKS]
        if bad:
            raise ParseError(f"unknown check(s) {bad}; known: {CHECKS}",
                             _line_of(text, "checks", "enabled"), "checks.enabled")
        kw["checks"] = names
    if cp.has_option("ratefit", "window"):
        w = _floats(text, cp.get("ratefit", "window"), "ratefit", "window")
        if len(w) != 2:
            raise ParseError("window needs two fractions", _line_of(text, "ratefit", "window"),
                             "ratefit.window")
        kw["window"] = w
    kw["rate_tolerance"] = get("ratefit", "tolerance", float, base.rate_tolerance)
    kw["out"] = get("output", "dir", str, base.out).strip()
    for key in ("N", "m", "q"):
        if cp.has_option("sweep", key):
            kw["sweep_" + key] = _floats(text, cp.get("sweep", key), "sweep", key)
    kw["workers"] = int(get("sweep", "workers", float, float(base.workers)))

    cfg = ExperimentConfig(**kw)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise :class:`ValidationError` / :class:`ParseError` for inconsistent settings."""
    lo, hi = cfg.window
    if not (0 < lo < hi < 1):
        raise ParseError(f"window must satisfy 0 < lo < hi < 1, got {cfg.window}", key="ratefit.window")
    if cfg.R_max <= 0 or cfg.M < 16:
        raise ParseError("need R_max > 0 and M >= 16", key="grid")
    if cfg.is_sweep:
        return  # invalid combinations are skipped per run
    try:
        validate_params(cfg.N, cfg.m, cfg.q, cfg.regime)
    except (ParamError, ValueError) as exc:
        raise ValidationError(exc) from None
    if cfg.family == "capped_power" and not cfg.q > cfg.m:
        raise ValidationError(ValueError("capped_power needs q > m"))


def initial_profile(cfg: ExperimentConfig, params=None):
    """Callable ``r -> u0(r)`` for the configured family."""
    a = cfg.family_params()
    A = a.get("A", 1.0)
    if cfg.family == "flat":
        return lambda r: np.full_like(np.asarray(r, float), A)
    if cfg.family == "capped_power":
        decay = 2.0 / (cfg.q - cfg.m)

        def capped(r):
            r = np.asarray(r, float)
            out = np.full_like(r, A)
            big = r > 1.0
            out[big] = A * r[big] ** (-decay)
            return out
        return capped
    if cfg.family == "indicator":
        R = a["R"]
        return lambda r: np.where(np.asarray(r, float) <= R, A, 0.0)
    if cfg.family == "gaussian":
        s = a["sigma"]
        return lambda r: A * np.exp(-np.asarray(r, float) ** 2 / (2 * s * s))
    raise ConfigError(f"unknown family {cfg.family!r}")


@dataclass
class RunSummary:
    config: dict
    config_hash: str
    status: str
    exponents: dict | None = None
    T_e_est: float | None = None
    clipped_mass: float = 0.0
    clip_flagged: bool = False
    checks: list = field(default_factory=list)
    ratefits: list = field(default_factory=list)
    wall_time: float = 0.0
    error: str | None = None

    @property
    def exit_code(self) -> int:
        if self.status == "config_error":
            return EXIT_CONFIG
        if self.status == "solver_failure":
            return EXIT_SOLVER
        ok = all(c["pass"] for c in self.checks) and all(f["pass"] for f in self.ratefits)
        return EXIT_OK if ok else EXIT_VERDICT

    def as_dict(self) -> dict:
        d = asdict(self)
        d["exit_code"] = self.exit_code
        return d


def _fit_label(r) -> str:
    if r == "inf":
        return "Linf"
    return {1.0: "L1", 2.0: "L2"}.get(float(r), "Lm1")


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunSummary:
    """Simulate, check, fit, and (optionally) write all outputs to ``cfg.out``."""
    chash = cfg.config_hash()
    summary = RunSummary(cfg.echo(), chash, "ok")
    out = Path(cfg.out)
    t0 = time.perf_counter()
    try:
        validate_config(cfg)
        params = validate_params(cfg.N, cfg.m, cfg.q, cfg.regime)
    except ConfigError as exc:
        summary.status, summary.error = "config_error", str(exc)
        _flush(summary, out, write)
        return summary
    if params.regime == "rates":
        summary.exponents = derive(params).as_dict()
    grid = make_uniform_grid(params, cfg.R_max, cfg.M)
    u0 = initial_profile(cfg, params)
    try:
        traj = run(u0, grid, params, cfg.solver)
    except SolverError as exc:
        summary.status, summary.error = "solver_failure", f"{type(exc).__name__}: {exc}"
        summary.wall_time = time.perf_counter() - t0
        _flush(summary, out, write)
        return summary
    summary.T_e_est = traj.T_e_est
    summary.clipped_mass = traj.clipped_mass
    summary.clip_flagged = traj.clip_flagged

    names = [n for n in cfg.checks if not (n == "barrier" and params.regime != "rates")]
    if traj.T_e_est is None:
        names = [n for n in names if n not in ("linf_lower", "apriori_extinction")]
    reports = run_checks(traj, names)
    summary.checks = [r.row() for r in reports]
    fits = []
    series = None
    if params.regime == "rates" and traj.T_e_est is not None:
        for r in norm_orders(params.m):
            try:
                fits.append(fit_rate(traj, r, cfg.window, cfg.rate_tolerance))
            except InsufficientData as exc:
                log.warning("rate fit r=%s skipped: %s", r, exc)
        series = rescaled_norm_series(traj, strict=False)
    summary.ratefits = [f.row() for f in fits]
    summary.wall_time = time.perf_counter() - t0
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "trajectory.csv").write_text(outputs.trajectory_csv(traj, chash))
        outputs.write_snapshots(traj, out / "snapshots", chash)
        (out / "checks.csv").write_text(outputs.checks_csv(reports, chash))
        (out / "ratefit.csv").write_text(outputs.ratefit_csv(fits, chash))
        if series is not None:
            (out / "vnorms.csv").write_text(outputs.vnorms_csv(series, chash))
        _flush(summary, out, True)
    summary._trajectory = traj  # in-process convenience; not serialised
    return summary


def _flush(summary: RunSummary, out: Path, write: bool) -> None:
    if not write:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(outputs.dump_json(summary.as_dict()))


def sweep_combinations(cfg: ExperimentConfig):
    """Cartesian product of the sweep axes (unswept axes use the base value)."""
    if not cfg.is_sweep:
        raise EmptySweep("no sweep axes given")
    Ns = cfg.sweep_N or (cfg.N,)
    ms = cfg.sweep_m or (cfg.m,)
    qs = cfg.sweep_q or (cfg.q,)
    return list(itertools.product(Ns, ms, qs))


SWEEP_COLUMNS = ("N", "m", "q", "status", "alpha", "beta", "gamma", "theta", "kappa_star",
                 "decay", "rate_L1", "rate_Lm1", "rate_L2", "rate_Linf", "T_e_est",
                 "worst_check_margin", "dev_L1", "dev_Lm1", "dev_L2", "dev_Linf")


def _sweep_worker(cfg: ExperimentConfig) -> dict:
    return run_experiment(cfg, write=True).as_dict()


def run_sweep(cfg: ExperimentConfig, write: bool = True):
    """Run every admissible ``(N, m, q)`` of the sweep; returns ``(summaries, rows)``.

    Inadmissible combinations produce a ``skipped(<reason>)`` row; failing runs
    produce a row with their status and do not stop the sweep.
    """
    combos = sweep_combinations(cfg)
    out = Path(cfg.out)
    jobs, rows = [], []
    for k, (N, m, q) in enumerate(combos):
        row = {c: "" for c in SWEEP_COLUMNS}
        row.update(N=N, m=m, q=q)
        sub = replace(cfg, N=N, m=m, q=q, sweep_N=(), sweep_m=(), sweep_q=(),
                      out=str(out / f"run_{k:03d}"))
        try:
            validate_config(sub)
        except ValidationError as exc:
            row["status"] = f"skipped({type(exc.cause).__name__})"
            rows.append(row)
            continue
        rows.append(row)
        jobs.append((len(rows) - 1, sub))

    workers = cfg.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_worker, sub) for _, sub in jobs]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except Exception as exc:  # a crashed worker must not stop the sweep
                    results.append({"status": f"failed({type(exc).__name__})", "checks": [],
                                    "ratefits": []})
    else:
        results = []
        for _, sub in jobs:
            try:
                results.append(_sweep_worker(sub))
            except Exception as exc:
                results.append({"status": f"failed({type(exc).__name__})", "checks": [],
                                "ratefits": []})

    summaries = []
    for (idx, _), res in zip(jobs, results):
        summaries.append(res)
        row = rows[idx]
        row["status"] = res["status"] if res["status"] != "ok" else (
            "pass" if res.get("exit_code") == EXIT_OK else "fail")
        for k, v in (res.get("exponents") or {}).items():
            if k in row:
                row[k] = v
        if res.get("T_e_est") is not None:
            row["T_e_est"] = res["T_e_est"]
        if res["checks"]:
            row["worst_check_margin"] = min(c["worst_margin"] for c in res["checks"])
        for f in res["ratefits"]:
            row["dev_" + _fit_label(f["r"])] = f["rel_dev"]
    if write:
        out.mkdir(parents=True, exist_ok=True)
        text = outputs._csv_text(SWEEP_COLUMNS, rows, [f"config_hash={cfg.config_hash()}"])
        (out / "sweep.csv").write_text(text)
    return summaries, rows
