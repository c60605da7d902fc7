"""Command-line front end.

Subcommands
-----------
propagate   co-integrate a Hamiltonian system and its STM, write the trajectory
invariants  per-sample subdeterminant tables, bracket sums, split expansion
            factors / collapse angles, Wirtinger margins; nonzero exit on
            violations
skeleton    conjugate eigenpair analysis of one STM
surface     area, shadow and density-map report for a parameterized surface
example     the two case studies (heisenberg | disc) with configured controls

All commands read a JSON config (schema-validated, unknown keys rejected) and
write deterministic artifacts: JSON reports with sorted keys, CSV series with
17-significant-digit floats, no timestamps.

Exit codes: 0 success, 2 config error, 3 integration failure, 4 invariant
violation (including degenerate density maps), 5 input not symplectic.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io as sio
from .eigenskeleton import NotSymplecticError, compute_skeleton, verify_pairing
from .heisenberg import (
    bloch_control,
    constant_control,
    fourier_control,
    heisenberg_cost,
    heisenberg_cost_quadrature,
    moments,
    tabulated_control,
    zero_control,
)
from .invariants import (
    collapse_angle,
    pair_subsets,
    random_symplectic,
    subdet_table,
    wirtinger_check,
)
from .phase import pair_stack
from .propagation import IntegrationError, IntegratorSettings, propagate
from .rolling_disc import (
    disc_projection_area,
    disc_propagate,
    open_loop_control,
    zero_projection_control,
)
from .surfaces import (
    CausticError,
    density_map,
    lamina,
    linear_graph_surface,
    mapped_area_factor,
    parasymplectic_residual,
    shadow_area_factor,
    signed_shadow_integral,
    surface_area,
    unsigned_shadow_integral,
)
from .systems import builtin_system

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_VIOLATION = 4
EXIT_NOT_SYMPLECTIC = 5


class ConfigError(ValueError):
    """Raised for config problems the JSON schema cannot express."""


# ---------------------------------------------------------------------------
# config schemas
# ---------------------------------------------------------------------------

_NUMBER_ARRAY = {"type": "array", "items": {"type": "number"}}
_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_SPAN = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_INTEGRATOR = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "method": {"enum": ["rk45", "rk4"]},
        "rel_tol": _POSITIVE,
        "abs_tol": _POSITIVE,
        "max_step": _POSITIVE,
        "n_steps": {"type": "integer", "minimum": 1},
        "max_steps": {"type": "integer", "minimum": 1},
        "residual_budget": _POSITIVE,
    },
}

_SYSTEM = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
        },
    ]
}

_STM_SOURCE = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["matrix"],
            "properties": {"matrix": {"type": "array"}},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["trajectory"],
            "properties": {
                "trajectory": {"type": "string"},
                "sample": {"type": "integer"},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["random_symplectic"],
            "properties": {
                "random_symplectic": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["n_pairs"],
                    "properties": {
                        "n_pairs": {"type": "integer", "minimum": 1},
                        "scale": _POSITIVE,
                    },
                }
            },
        },
    ]
}

_CONTROL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family"],
    "properties": {
        "family": {"enum": ["zero", "constant", "bloch", "fourier", "tabulated"]},
        "u": {"type": "number"},
        "v": {"type": "number"},
        "u0": {"type": "number"},
        "u_cos": _NUMBER_ARRAY,
        "u_sin": _NUMBER_ARRAY,
        "v0": {"type": "number"},
        "v_cos": _NUMBER_ARRAY,
        "v_sin": _NUMBER_ARRAY,
        "times": _NUMBER_ARRAY,
        "u_values": _NUMBER_ARRAY,
        "v_values": _NUMBER_ARRAY,
        # disc-only steering of the third input
        "w": {"type": "number"},
        "compliant": {"type": "boolean"},
    },
}

_SCHEMAS = {
    "propagate": {
        "type": "object",
        "additionalProperties": False,
        "required": ["system", "initial_state", "t_span"],
        "properties": {
            "system": _SYSTEM,
            "initial_state": {**_NUMBER_ARRAY, "minItems": 2},
            "t_span": _SPAN,
            "samples": {"type": "integer", "minimum": 2},
            "t_eval": {**_NUMBER_ARRAY, "minItems": 2},
            "integrator": _INTEGRATOR,
            "output": {"type": "string"},
        },
    },
    "invariants": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "trajectory": {"type": "string"},
            "system": _SYSTEM,
            "initial_state": {**_NUMBER_ARRAY, "minItems": 2},
            "t_span": _SPAN,
            "samples": {"type": "integer", "minimum": 2},
            "integrator": _INTEGRATOR,
            "splits": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 1},
                    "minItems": 1,
                },
            },
            "tolerance": _POSITIVE,
            "output": {"type": "string"},
        },
    },
    "skeleton": {
        "type": "object",
        "additionalProperties": False,
        "required": ["stm"],
        "properties": {
            "stm": _STM_SOURCE,
            "tolerance": _POSITIVE,
            "output": {"type": "string"},
        },
    },
    "surface": {
        "type": "object",
        "additionalProperties": False,
        "required": ["surface"],
        "properties": {
            "surface": {
                "type": "object",
                "additionalProperties": False,
                "required": ["type", "n_pairs"],
                "properties": {
                    "type": {"enum": ["lamina", "linear_graph"]},
                    "pair": {"type": "integer", "minimum": 1},
                    "n_pairs": {"type": "integer", "minimum": 1},
                    "bounds": {"type": "array"},
                    "cells": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 1},
                    },
                    "coeffs": {"type": "array"},
                    "anchor": _NUMBER_ARRAY,
                },
            },
            "stm": _STM_SOURCE,
            "target_pair": {"type": "integer", "minimum": 1},
            "refine": {"type": "integer", "minimum": 2},
            "caustic_tol": _POSITIVE,
            "tolerance": _POSITIVE,
            "output": {"type": "string"},
        },
    },
    "example": {
        "type": "object",
        "additionalProperties": False,
        "required": ["example"],
        "properties": {
            "example": {"enum": ["heisenberg", "disc"]},
            "control": _CONTROL,
            "t_final": _POSITIVE,
            "initial_state": {**_NUMBER_ARRAY, "minItems": 5, "maxItems": 5},
            "samples": {"type": "integer", "minimum": 2},
            "rel_tol": _POSITIVE,
            "abs_tol": _POSITIVE,
            "quadrature_nodes": {"type": "integer", "minimum": 2},
            "snapshot_times": {**_NUMBER_ARRAY, "minItems": 1},
            "snapshot_bounds": {"type": "array"},
            "snapshot_cells": {
                "type": "array",
                "items": {"type": "integer", "minimum": 1},
                "minItems": 2,
                "maxItems": 2,
            },
            "output": {"type": "string"},
        },
    },
}


def _format_schema_error(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "required":
        missing = err.message.split("'")[1]
        full = f"{path}.{missing}" if path else missing
        return f"missing required field '{full}'"
    if err.validator == "additionalProperties":
        where = path or "top level"
        return f"unknown key at {where}: {err.message}"
    return f"{path or 'config'}: {err.message}"


def _validate_config(cfg, schema) -> None:
    validator = jsonschema.Draft202012Validator(schema)
    err = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if err is not None:
        raise ConfigError(_format_schema_error(err))


def _load_config(path) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


def _make_system(spec):
    if isinstance(spec, str):
        return builtin_system(spec)
    return builtin_system(spec["name"], **spec.get("params", {}))


def _make_settings(cfg) -> IntegratorSettings:
    return IntegratorSettings(**cfg.get("integrator", {}))


def _run_propagation(cfg):
    system = _make_system(cfg["system"])
    settings = _make_settings(cfg)
    return propagate(
        system,
        np.asarray(cfg["initial_state"], dtype=float),
        tuple(cfg["t_span"]),
        settings,
        samples=cfg.get("samples", 100),
        t_eval=cfg.get("t_eval"),
    )


def _resolve_stm(spec, rng) -> np.ndarray:
    if isinstance(spec, str):
        M = sio.load_matrix(spec)
    elif "matrix" in spec:
        M = np.asarray(spec["matrix"], dtype=float)
    elif "trajectory" in spec:
        traj = sio.load_trajectory(spec["trajectory"])
        M = traj.stms[spec.get("sample", -1)]
    elif "random_symplectic" in spec:
        rs = spec["random_symplectic"]
        M = random_symplectic(rs["n_pairs"], rng, scale=rs.get("scale", 1.0))
    else:  # pragma: no cover - schema forbids this
        raise ConfigError("unrecognized stm source")
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise ConfigError(f"stm must be square and even-dimensional, got shape {M.shape}")
    return M


def _split_name(pairs) -> str:
    return "+".join(str(p) for p in pairs)


def _tolerance(cfg, args, default=1e-8) -> float:
    if args.tol_override is not None:
        return float(args.tol_override)
    return float(cfg.get("tolerance", default))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_propagate(cfg, args, outdir: Path) -> int:
    traj = _run_propagation(cfg)
    base = cfg.get("output", "trajectory")
    if args.format == "json":
        path = outdir / f"{base}.json"
        sio.trajectory_to_json(traj, path)
    else:
        path = outdir / f"{base}.csv"
        sio.trajectory_to_csv(traj, path)
    drift = traj.energy_drift
    drift_txt = (
        "n/a" if np.all(np.isnan(drift)) else sio.fmt(float(np.nanmax(np.abs(drift))))
    )
    stats = traj.stats
    print(
        f"propagated {traj.system_name} over "
        f"[{sio.fmt(traj.times[0])}, {sio.fmt(traj.times[-1])}]: "
        f"{len(traj)} samples, max symplecticity residual {sio.fmt(traj.max_residual)}, "
        f"max |energy drift| {drift_txt}, "
        f"{stats.steps} steps ({stats.rejected} rejected)"
    )
    print(f"wrote {path}")
    return EXIT_OK


def cmd_invariants(cfg, args, outdir: Path) -> int:
    if "trajectory" in cfg:
        traj = sio.load_trajectory(cfg["trajectory"])
    elif all(k in cfg for k in ("system", "initial_state", "t_span")):
        traj = _run_propagation(cfg)
    else:
        raise ConfigError(
            "missing required field 'trajectory' (or inline 'system', "
            "'initial_state', 't_span')"
        )
    n = traj.n_pairs
    tol = _tolerance(cfg, args)
    splits = [tuple(s) for s in cfg.get("splits", [])] or list(pair_subsets(n, proper=True))
    for s in splits:
        if any(p < 1 or p > n for p in s):
            raise ConfigError(f"split {list(s)} out of range for {n} pairs")

    samples = []
    violations = []
    for i in range(len(traj)):
        t = float(traj.times[i])
        Phi = traj.stms[i]
        table = subdet_table(Phi)
        for j, v in enumerate(table.column_sums, start=1):
            if abs(v - 1.0) > tol:
                violations.append(
                    f"sample {i} (t={sio.fmt(t)}): column {j} sum deviates by {sio.fmt(v - 1.0)}"
                )
        for r, v in enumerate(table.row_sums, start=1):
            if abs(v - 1.0) > tol:
                violations.append(
                    f"sample {i} (t={sio.fmt(t)}): row {r} sum deviates by {sio.fmt(v - 1.0)}"
                )
        residual = float(traj.residuals[i])
        if residual > tol:
            violations.append(
                f"sample {i} (t={sio.fmt(t)}): symplecticity residual {sio.fmt(residual)}"
            )
        split_rows = []
        for s in splits:
            name = _split_name(s)
            row = {"split": name, "nu": math.nan, "nu_complement": math.nan, "beta": math.nan}
            if len(s) < n:
                try:
                    ca = collapse_angle(Phi, s, tol=tol)
                    row.update(nu=ca.nu_s, nu_complement=ca.nu_sc, beta=ca.beta)
                    if abs(ca.nu_s * ca.nu_sc * math.sin(ca.beta) - 1.0) > tol:
                        violations.append(
                            f"sample {i} (t={sio.fmt(t)}): split {name} collapse identity off"
                        )
                except ValueError as exc:
                    violations.append(f"sample {i} (t={sio.fmt(t)}): split {name}: {exc}")
            rep = wirtinger_check(Phi @ pair_stack(s, n))
            row["wirtinger_margin"] = rep.volume - rep.bound
            if rep.bound > rep.volume + tol:
                violations.append(
                    f"sample {i} (t={sio.fmt(t)}): split {name} breaks the volume lower bound"
                )
            split_rows.append(row)
        samples.append(
            {
                "t": t,
                "column_sums": table.column_sums.tolist(),
                "row_sums": table.row_sums.tolist(),
                "splits": split_rows,
                "sympl_residual": residual,
            }
        )

    report = {
        "system": traj.system_name,
        "n_pairs": n,
        "tolerance": tol,
        "splits": [list(s) for s in splits],
        "samples": samples,
        "violations": violations,
    }
    base = cfg.get("output", "invariants")
    sio.write_json(report, outdir / f"{base}.json")
    sio.invariant_report_to_csv(report, outdir / f"{base}.csv")

    col_err = max(
        abs(v - 1.0) for s in samples for v in s["column_sums"]
    )
    row_err = max(abs(v - 1.0) for s in samples for v in s["row_sums"])
    print(
        f"invariants over {len(traj)} samples, {len(splits)} splits: "
        f"max column-sum error {sio.fmt(col_err)}, max row-sum error {sio.fmt(row_err)}, "
        f"max residual {sio.fmt(traj.max_residual)}"
    )
    for line in violations:
        print(f"VIOLATION: {line}")
    print(f"wrote {outdir / (base + '.json')}")
    if violations:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_skeleton(cfg, args, outdir: Path) -> int:
    rng = np.random.default_rng(args.seed)
    Phi = _resolve_stm(cfg["stm"], rng)
    tol = _tolerance(cfg, args)
    sk = compute_skeleton(Phi, tol=tol)
    rep = verify_pairing(sk)
    export = {
        "n_pairs": sk.n_pairs,
        "lambdas": sk.lambdas.tolist(),
        "xi": sk.xi.tolist(),
        "eta": sk.eta.tolist(),
        "T": sk.T.tolist(),
        "input_residual": sk.input_residual,
        "t_residual": sk.t_residual,
        "pairing": {
            "eta_eigen_residual": rep.eta_eigen_residual.tolist(),
            "reciprocity": rep.reciprocity.tolist(),
            "orthonormality": rep.orthonormality,
            "image_norm_xi": rep.image_norm_xi.tolist(),
            "image_norm_eta": rep.image_norm_eta.tolist(),
            "image_gram_offdiag": rep.image_gram_offdiag,
        },
    }
    base = cfg.get("output", "skeleton")
    path = outdir / f"{base}.json"
    sio.write_json(export, path)
    spectrum = ", ".join(sio.fmt(v) for v in sk.lambdas)
    print(f"lambda spectrum: {spectrum}")
    print(f"max pairing residual: {sio.fmt(rep.max_pairing_residual)}")
    print(f"wrote {path}")
    return EXIT_OK


def _make_surface(spec):
    kind = spec["type"]
    n = spec["n_pairs"]
    kwargs = {}
    if "bounds" in spec:
        kwargs["bounds"] = tuple(tuple(b) for b in spec["bounds"])
    if "cells" in spec:
        kwargs["cells"] = tuple(spec["cells"])
    if "anchor" in spec:
        kwargs["anchor"] = np.asarray(spec["anchor"], dtype=float)
    pair = spec.get("pair", 1)
    if kind == "lamina":
        return lamina(pair, n, **kwargs)
    if "coeffs" not in spec:
        raise ConfigError("missing required field 'surface.coeffs' for linear_graph")
    return linear_graph_surface(pair, n, np.asarray(spec["coeffs"], dtype=float), **kwargs)


def cmd_surface(cfg, args, outdir: Path) -> int:
    rng = np.random.default_rng(args.seed)
    s = _make_surface(cfg["surface"])
    n = s.n_pairs
    Phi = (
        _resolve_stm(cfg["stm"], rng) if "stm" in cfg else np.eye(2 * n)
    )
    if Phi.shape[0] != 2 * n:
        raise ConfigError(
            f"stm dimension {Phi.shape[0]} does not match surface phase dimension {2 * n}"
        )
    target = cfg.get("target_pair", cfg["surface"].get("pair", 1))
    if not 1 <= target <= n:
        raise ConfigError(f"target_pair {target} out of range for {n} pairs")
    tol = _tolerance(cfg, args)

    area = surface_area(s)
    para_res = parasymplectic_residual(s)
    centers = s.cell_centers()
    factors = np.array([mapped_area_factor(s, Phi, pt) for pt in centers])
    mapped_area = float(np.sum(factors)) * s.cell_volume
    signed = signed_shadow_integral(s, Phi)
    unsigned = unsigned_shadow_integral(s, Phi)

    violations = []
    wirtinger_margin = math.inf
    shadow_sum_err = 0.0
    for pt, factor in zip(centers, factors):
        total = sum(shadow_area_factor(s, Phi, i, pt) for i in range(1, n + 1))
        if s.parasymplectic:
            shadow_sum_err = max(shadow_sum_err, abs(total - 1.0))
        wirtinger_margin = min(wirtinger_margin, factor - abs(total))
    if s.parasymplectic and shadow_sum_err > tol:
        violations.append(f"shadow-sum law broken by {sio.fmt(shadow_sum_err)}")
    if wirtinger_margin < -tol:
        violations.append(f"pointwise area bound broken by {sio.fmt(-wirtinger_margin)}")

    dm = density_map(s, Phi, target, caustic_tol=cfg.get("caustic_tol", 1e-12))
    if abs(dm.total_prob - 1.0) > 1e-6:
        violations.append(f"cell probabilities sum to {sio.fmt(dm.total_prob)}")

    refine = cfg.get("refine")
    refined = None
    if refine:
        rs = s.refined(refine)
        refined = {
            "factor": refine,
            "area": surface_area(rs),
            "signed_shadow": signed_shadow_integral(rs, Phi),
        }
        refined["area_change"] = refined["area"] - area

    base = cfg.get("output", "surface")
    csv_path = outdir / f"{base}_density.csv"
    sio.density_map_to_csv(dm, csv_path)
    report = {
        "surface": s.name,
        "n_pairs": n,
        "cells": list(s.cells),
        "parasymplectic": s.parasymplectic,
        "parasymplectic_residual": para_res,
        "area": area,
        "mapped_area": mapped_area,
        "expansion_min": float(np.min(factors)),
        "expansion_max": float(np.max(factors)),
        "signed_shadow": signed,
        "unsigned_shadow": unsigned,
        "shadow_sum_error": shadow_sum_err if s.parasymplectic else None,
        "wirtinger_margin_min": wirtinger_margin,
        "target_pair": target,
        "caustic_count": dm.caustic_count,
        "total_prob": dm.total_prob,
        "refined": refined,
        "violations": violations,
    }
    json_path = outdir / f"{base}.json"
    sio.write_json(report, json_path)
    print(
        f"surface {s.name}: area {sio.fmt(area)}, mapped area {sio.fmt(mapped_area)}, "
        f"signed shadow {sio.fmt(signed)}, caustic cells {dm.caustic_count}"
    )
    for line in violations:
        print(f"VIOLATION: {line}")
    print(f"wrote {json_path}")
    if violations:
        return EXIT_VIOLATION
    return EXIT_OK


def _control_from_config(spec):
    fam = spec.get("family", "zero")
    if fam == "zero":
        return zero_control()
    if fam == "constant":
        return constant_control(spec.get("u", 0.0), spec.get("v", 0.0))
    if fam == "bloch":
        return bloch_control()
    if fam == "fourier":
        return fourier_control(
            spec.get("u0", 0.0),
            spec.get("u_cos", []),
            spec.get("u_sin", []),
            spec.get("v0", 0.0),
            spec.get("v_cos", []),
            spec.get("v_sin", []),
        )
    for key in ("times", "u_values", "v_values"):
        if key not in spec:
            raise ConfigError(f"missing required field 'control.{key}' for tabulated control")
    return tabulated_control(spec["times"], spec["u_values"], spec["v_values"])


def _snapshot_grid(cfg, default_half=0.5):
    bounds = cfg.get("snapshot_bounds", [[-default_half, default_half]] * 2)
    cells = cfg.get("snapshot_cells", [8, 8])
    us = np.linspace(bounds[0][0], bounds[0][1], cells[0] + 1)
    vs = np.linspace(bounds[1][0], bounds[1][1], cells[1] + 1)
    return us, vs


def _example_heisenberg(cfg, outdir: Path, base: str):
    ctrl = _control_from_config(cfg.get("control", {"family": "zero"}))
    t_final = cfg.get("t_final", 1.0)
    rel_tol = cfg.get("rel_tol", 1e-12)
    m1 = moments(ctrl, t_final, rel_tol=rel_tol)
    f_closed = heisenberg_cost(m1.mu, m1.nu, m1.alpha)
    f_quad = heisenberg_cost_quadrature(
        ctrl, n_nodes=cfg.get("quadrature_nodes", 16), rel_tol=rel_tol
    )
    summary = {
        "example": "heisenberg",
        "control": ctrl.name,
        "mu1": m1.mu,
        "nu1": m1.nu,
        "alpha1": m1.alpha,
        "alpha_residual": m1.alpha_residual,
        "f_closed": f_closed,
        "f_quadrature": f_quad,
        "AD_minus_BC_max": None,
    }

    # evolving uncertainty surface: the flow image of an initial (X, Y) patch
    times = cfg.get("snapshot_times", [0.0, 0.5 * t_final, t_final])
    us, vs = _snapshot_grid(cfg)
    snap_path = outdir / f"{base}_snapshots.csv"
    with open(snap_path, "w", newline="") as fh:
        fh.write("t,u,v,x,y,z\n")
        for t in times:
            m = moments(ctrl, float(t), rel_tol=rel_tol)
            for X in us:
                for Y in vs:
                    x, y = X + m.mu, Y + m.nu
                    z = Y * m.mu - X * m.nu + m.alpha
                    fh.write(
                        ",".join(sio.fmt(v) for v in (t, X, Y, x, y, z)) + "\n"
                    )
    return summary, snap_path


def _example_disc(cfg, outdir: Path, base: str):
    spec = cfg.get("control", {"family": "zero"})
    heis = _control_from_config(spec)
    if spec.get("compliant", False):
        ctrl = zero_projection_control(heis.u, heis.v)
    else:
        w0 = spec.get("w", 0.0)
        ctrl = open_loop_control(heis.u, heis.v, lambda t: w0)
    t_final = cfg.get("t_final", 1.0)
    q0 = np.asarray(cfg.get("initial_state", [0.0, 0.0, 0.0, 0.5 * math.pi, 0.0]), dtype=float)
    samples = cfg.get("samples", 101)
    times = cfg.get("snapshot_times", [0.0, 0.5 * t_final, t_final])
    if any(t < 0 or t > t_final for t in times):
        raise ConfigError("snapshot_times must lie inside [0, t_final]")
    t_eval = np.unique(np.concatenate([np.linspace(0.0, t_final, samples), times]))
    traj = disc_propagate(
        ctrl,
        q0,
        (0.0, t_final),
        rel_tol=cfg.get("rel_tol", 1e-11),
        abs_tol=cfg.get("abs_tol", 1e-13),
        t_eval=t_eval,
    )
    ad_bc = max(abs(disc_projection_area(traj.integrals[i])) for i in range(len(traj)))
    summary = {
        "example": "disc",
        "control": heis.name + ("+compliant" if spec.get("compliant", False) else ""),
        "mu1": None,
        "nu1": None,
        "alpha1": None,
        "alpha_residual": None,
        "f_closed": None,
        "f_quadrature": None,
        "AD_minus_BC_max": ad_bc,
    }

    # contact-point shadow of an initial (phi, theta) uncertainty patch
    us, vs = _snapshot_grid(cfg, default_half=0.1)
    snap_path = outdir / f"{base}_snapshots.csv"
    index = {float(t): i for i, t in enumerate(traj.times)}
    with open(snap_path, "w", newline="") as fh:
        fh.write("t,u,v,dx,dy\n")
        for t in times:
            ints = traj.integrals[index[float(t)]]
            A, B, C, D = ints[:4]
            for du in us:
                for dv in vs:
                    dx = A * du + C * dv
                    dy = B * du + D * dv
                    fh.write(",".join(sio.fmt(v) for v in (t, du, dv, dx, dy)) + "\n")
    return summary, snap_path


def cmd_example(cfg, args, outdir: Path) -> int:
    base = cfg.get("output", cfg["example"])
    if cfg["example"] == "heisenberg":
        summary, snap_path = _example_heisenberg(cfg, outdir, base)
    else:
        summary, snap_path = _example_disc(cfg, outdir, base)
    path = outdir / f"{base}_summary.json"
    sio.write_json(summary, path)
    printable = {
        k: (sio.fmt(v) if isinstance(v, float) else v) for k, v in summary.items()
    }
    print(json.dumps(printable, indent=2, sort_keys=True))
    print(f"wrote {path} and {snap_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "propagate": cmd_propagate,
    "invariants": cmd_invariants,
    "skeleton": cmd_skeleton,
    "surface": cmd_surface,
    "example": cmd_example,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON run config")
    common.add_argument("--out", default=".", help="output directory (created if absent)")
    common.add_argument(
        "--tol-override",
        type=float,
        default=None,
        help="override the config's violation tolerance",
    )
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sources")
    common.add_argument(
        "--format",
        choices=("csv", "json"),
        default="csv",
        help="bulk artifact format where a choice applies",
    )
    parser = argparse.ArgumentParser(
        prog="symvol",
        description="Symplectic subvolume toolkit: propagation, invariants, "
        "eigenskeletons, surface density maps, case studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config)
        _validate_config(cfg, _SCHEMAS[args.command])
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](cfg, args, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotSymplecticError as exc:
        print(f"input not symplectic: {exc}", file=sys.stderr)
        return EXIT_NOT_SYMPLECTIC
    except CausticError as exc:
        print(f"degenerate projection: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
