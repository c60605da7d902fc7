"""File formats: trajectory CSV/JSON, matrices, reports, density maps.

Text output uses 17 significant digits, enough for exact float round-trips;
loaders invert the writers.  Loaded STMs get their symplecticity residual
recomputed (files are not trusted on derived quantities).
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .phase import symplecticity_residual
from .propagation import IntegratorStats, Trajectory

__all__ = [
    "fmt",
    "write_json",
    "trajectory_to_csv",
    "trajectory_to_json",
    "load_trajectory",
    "save_matrix",
    "load_matrix",
    "invariant_report_to_csv",
    "density_map_to_csv",
]


def fmt(x) -> str:
    """17 significant digits; round-trips every finite double exactly."""
    return f"{float(x):.17g}"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        # JSON has no inf/nan literals; keep them readable and reloadable
        return None if math.isnan(obj) else ("1e999" if obj > 0 else "-1e999")
    return obj


def write_json(obj, path):
    """Deterministic JSON: sorted keys, fixed layout, no timestamps."""
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _trajectory_header(n_pairs: int) -> list:
    dim = 2 * n_pairs
    cols = ["t"]
    cols += [f"x_{i}" for i in range(1, dim + 1)]
    cols += [f"phi_{i}{j}" for i in range(1, dim + 1) for j in range(1, dim + 1)]
    cols += ["sympl_residual", "energy_drift"]
    return cols


def trajectory_to_csv(traj: Trajectory, path):
    dim = 2 * traj.n_pairs
    with open(path, "w", newline="") as fh:
        fh.write(",".join(_trajectory_header(traj.n_pairs)) + "\n")
        for i in range(len(traj)):
            row = [fmt(traj.times[i])]
            row += [fmt(v) for v in traj.states[i]]
            row += [fmt(v) for v in traj.stms[i].reshape(dim * dim)]  # row-major
            row += [fmt(traj.residuals[i]), fmt(traj.energy_drift[i])]
            fh.write(",".join(row) + "\n")


def trajectory_to_json(traj: Trajectory, path):
    obj = {
        "system": traj.system_name,
        "n_pairs": traj.n_pairs,
        "times": traj.times,
        "states": traj.states,
        "stms": traj.stms,
        "sympl_residual": traj.residuals,
        "energy_drift": traj.energy_drift,
        "stats": {
            "method": traj.stats.method,
            "steps": traj.stats.steps,
            "rejected": traj.stats.rejected,
            "rhs_evals": traj.stats.rhs_evals,
            "rel_tol": traj.stats.rel_tol,
            "abs_tol": traj.stats.abs_tol,
            "budget_exceedances": traj.stats.budget_exceedances,
        },
    }
    write_json(obj, path)


def _loaded_stats(meta=None) -> IntegratorStats:
    if meta:
        def num(key):  # NaN round-trips as JSON null
            v = meta.get(key)
            return math.nan if v is None else float(v)

        return IntegratorStats(
            method=meta.get("method", "loaded"),
            steps=int(meta.get("steps", 0)),
            rejected=int(meta.get("rejected", 0)),
            rhs_evals=int(meta.get("rhs_evals", 0)),
            rel_tol=num("rel_tol"),
            abs_tol=num("abs_tol"),
            budget_exceedances=int(meta.get("budget_exceedances", 0)),
        )
    return IntegratorStats("loaded", 0, 0, 0, math.nan, math.nan)


def load_trajectory(path) -> Trajectory:
    """Read back a trajectory written by either exporter (by extension)."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            obj = json.load(fh)
        times = np.asarray(obj["times"], dtype=float)
        states = np.asarray(obj["states"], dtype=float)
        stms = np.asarray(obj["stms"], dtype=float)
        drift = np.asarray(
            [math.nan if v is None else float(v) for v in obj["energy_drift"]]
        )
        residuals = np.array([symplecticity_residual(M) for M in stms])
        return Trajectory(
            obj.get("system", "loaded"), times, states, stms, residuals, drift,
            _loaded_stats(obj.get("stats")),
        )

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: no data rows")
    header = rows[0]
    n_cols = len(header)
    n_pairs = None
    for n in range(1, 64):
        if 1 + 2 * n + 4 * n * n + 2 == n_cols:
            n_pairs = n
            break
    if n_pairs is None or header != _trajectory_header(n_pairs):
        raise ValueError(f"{path}: not a trajectory CSV (unrecognized header)")
    dim = 2 * n_pairs
    m = len(rows) - 1
    times = np.empty(m)
    states = np.empty((m, dim))
    stms = np.empty((m, dim, dim))
    drift = np.empty(m)
    for i, row in enumerate(rows[1:]):
        vals = [float(v) for v in row]
        times[i] = vals[0]
        states[i] = vals[1 : 1 + dim]
        stms[i] = np.array(vals[1 + dim : 1 + dim + dim * dim]).reshape(dim, dim)
        drift[i] = vals[-1]
    residuals = np.array([symplecticity_residual(M) for M in stms])
    return Trajectory("loaded", times, states, stms, residuals, drift, _loaded_stats())


def save_matrix(M, path):
    path = Path(path)
    M = np.asarray(M, dtype=float)
    if path.suffix.lower() == ".json":
        write_json({"matrix": M}, path)
    else:
        with open(path, "w", newline="") as fh:
            for row in M:
                fh.write(",".join(fmt(v) for v in row) + "\n")


def load_matrix(path) -> np.ndarray:
    """Square matrix from a JSON {"matrix": [[...]]} or a bare CSV grid."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        with open(path) as fh:
            obj = json.load(fh)
        M = np.asarray(obj["matrix"] if isinstance(obj, dict) else obj, dtype=float)
    else:
        with open(path, newline="") as fh:
            M = np.asarray([[float(v) for v in row] for row in csv.reader(fh) if row], dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got shape {M.shape}")
    return M


def invariant_report_to_csv(report: dict, path):
    """Flatten the per-sample invariant report into one CSV row per epoch."""
    samples = report["samples"]
    if not samples:
        raise ValueError("empty invariant report")
    n = len(samples[0]["column_sums"])
    split_names = [s["split"] for s in samples[0]["splits"]]
    cols = ["t"]
    cols += [f"column_sum_{j}" for j in range(1, n + 1)]
    cols += [f"row_sum_{i}" for i in range(1, n + 1)]
    for name in split_names:
        cols += [f"nu_{name}", f"nu_c_{name}", f"beta_{name}"]
    cols += ["sympl_residual"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for s in samples:
            row = [fmt(s["t"])]
            row += [fmt(v) for v in s["column_sums"]]
            row += [fmt(v) for v in s["row_sums"]]
            for sp in s["splits"]:
                row += [fmt(sp["nu"]), fmt(sp["nu_complement"]), fmt(sp["beta"])]
            row.append(fmt(s["sympl_residual"]))
            fh.write(",".join(row) + "\n")


def density_map_to_csv(dm, path):
    """One row per grid cell: image point, density, probability, caustic."""
    with open(path, "w", newline="") as fh:
        fh.write("P_i,Q_i,sigma,prob,caustic_flag\n")
        for i in range(dm.prob.size):
            fh.write(
                ",".join(
                    [
                        fmt(dm.image[i, 0]),
                        fmt(dm.image[i, 1]),
                        "nan" if dm.caustic[i] else fmt(dm.sigma[i]),
                        fmt(dm.prob[i]),
                        "1" if dm.caustic[i] else "0",
                    ]
                )
                + "\n"
            )
