"""CSV/JSON serialisation of runs. Floats are written with ``repr`` (shortest round-trip)."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .exponents import validate_params
from .grid import State, make_uniform_grid, state_from_csv, state_to_csv
from .solver import NORM_LABELS, SolverConfig, Trajectory

TRAJECTORY_COLUMNS = ("t", "norm_L1", "norm_Lm1", "norm_L2", "norm_Linf", "dt", "newton_iters")
CHECK_COLUMNS = ("check", "pass", "worst_margin", "t", "r", "tolerance")
RATEFIT_COLUMNS = ("r", "slope", "stderr", "expected", "rel_dev", "pass", "window_lo", "window_hi")
VNORM_COLUMNS = ("s", "v_L1", "v_Lm1", "v_L2", "v_Linf")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _csv_text(columns, rows, header_lines) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def trajectory_meta(traj: Trajectory) -> dict:
    p = traj.params
    meta = {"params": {"N": p.N, "m": p.m, "q": p.q, "regime": p.regime},
            "T_e_est": traj.T_e_est, "clipped_mass": traj.clipped_mass,
            "solver": dict(vars(traj.config))}
    if traj.grid is not None:
        meta["grid"] = traj.grid.header()
    return meta


def trajectory_csv(traj: Trajectory, config_hash: str = "") -> str:
    rows = []
    for i in range(traj.t.size):
        row = {"t": traj.t[i], "dt": traj.dt[i], "newton_iters": int(traj.newton_iters[i])}
        for lab in NORM_LABELS:
            row["norm_" + lab] = traj.norms[lab][i]
        rows.append(row)
    header = [f"config_hash={config_hash}", "meta=" + json.dumps(trajectory_meta(traj), sort_keys=True)]
    return _csv_text(TRAJECTORY_COLUMNS, rows, header)


def read_header(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, val = line[1:].strip().partition("=")
            out[key] = val
    return out


def load_trajectory(path) -> Trajectory:
    """Rebuild a trajectory from ``trajectory.csv`` (and ``snapshots/`` beside it, if present)."""
    path = Path(path)
    hdr = read_header(path)
    meta = json.loads(hdr["meta"])
    p = meta["params"]
    params = validate_params(p["N"], p["m"], p["q"], p.get("regime", "rates"))
    cfg = SolverConfig(**meta["solver"])
    data = np.genfromtxt(path, delimiter=",", skip_header=len(hdr), names=True, ndmin=1)
    norms = {lab: np.asarray(data["norm_" + lab], dtype=float) for lab in NORM_LABELS}
    traj = Trajectory.from_norms(params, data["t"], norms, config=cfg, dt=data["dt"],
                                 T_e_est=meta["T_e_est"])
    traj.newton_iters = np.asarray(data["newton_iters"], dtype=int)
    traj.clipped_mass = meta.get("clipped_mass", 0.0)
    if "grid" in meta:
        g = meta["grid"]
        traj.grid = make_uniform_grid(g["N"], g["R_max"], g["M"])
    snapdir = path.parent / "snapshots"
    if snapdir.is_dir():
        snaps = []
        for f in sorted(snapdir.glob("snap_*.csv")):
            st, _ = state_from_csv(f.read_text())
            snaps.append(st)
        traj.snapshots = snaps
        if snaps and snaps[0].t == 0.0:
            traj.u0 = snaps[0].values
    return traj


def write_snapshots(traj: Trajectory, directory, config_hash: str = "") -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, snap in enumerate(traj.snapshots):
        (d / f"snap_{i:05d}.csv").write_text(
            state_to_csv(snap, traj.grid, header=f"config_hash={config_hash}"))


def checks_csv(reports, config_hash: str = "") -> str:
    return _csv_text(CHECK_COLUMNS, [r.row() for r in reports], [f"config_hash={config_hash}"])


def ratefit_csv(fits, config_hash: str = "") -> str:
    return _csv_text(RATEFIT_COLUMNS, [f.row() for f in fits], [f"config_hash={config_hash}"])


def vnorms_csv(series: dict, config_hash: str = "") -> str:
    rows = [{c: series[c][i] for c in VNORM_COLUMNS} for i in range(series["s"].size)]
    return _csv_text(VNORM_COLUMNS, rows, [f"config_hash={config_hash}"])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


__all__ = ["trajectory_csv", "load_trajectory", "write_snapshots", "checks_csv", "ratefit_csv",
           "vnorms_csv", "dump_json", "read_header", "State"]
