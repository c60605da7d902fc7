import json
import math
import subprocess
import sys

import numpy as np
import pytest

from symvol.cli import main
from symvol.io import load_trajectory, trajectory_to_json
from symvol.propagation import IntegratorStats, Trajectory
from symvol.phase import symplecticity_residual

from conftest import BETA_FIXTURE, equal_rotation, squeeze_rotate


def write_config(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run(tmp_path, command, cfg, *extra):
    cfg_path = write_config(tmp_path, cfg)
    out = tmp_path / "out"
    argv = [command, "--config", cfg_path, "--out", str(out), *extra]
    return main(argv), out


def fixture_trajectory(path, stms, times=None):
    """Write a minimal trajectory file holding the given STM snapshots."""
    stms = np.asarray(stms, dtype=float)
    m, dim = stms.shape[0], stms.shape[1]
    if times is None:
        times = np.arange(m, dtype=float)
    traj = Trajectory(
        "fixture",
        times,
        np.zeros((m, dim)),
        stms,
        np.array([symplecticity_residual(M) for M in stms]),
        np.full(m, math.nan),
        IntegratorStats("fixture", 0, 0, 0, math.nan, math.nan),
    )
    trajectory_to_json(traj, path)
    return str(path)


class TestConfigErrors:
    def test_missing_required_field(self, tmp_path, capsys):
        code, _ = run(tmp_path, "propagate", {"system": "harmonic_oscillator", "initial_state": [1, 0]})
        assert code == 2
        assert "t_span" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "propagate",
            {"system": "harmonic_oscillator", "initial_state": [1, 0], "t_span": [0, 1], "extra": 1},
        )
        assert code == 2
        assert "unknown key" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["propagate", "--config", str(path)]) == 2

    def test_nonexistent_config(self, tmp_path):
        assert main(["propagate", "--config", str(tmp_path / "missing.json")]) == 2

    def test_unknown_system_name(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "propagate",
            {"system": "lorenz", "initial_state": [1, 0], "t_span": [0, 1]},
        )
        assert code == 2
        assert "lorenz" in capsys.readouterr().err

    def test_invariants_needs_a_source(self, tmp_path, capsys):
        code, _ = run(tmp_path, "invariants", {"splits": [[1]]})
        assert code == 2
        assert "trajectory" in capsys.readouterr().err


class TestPropagate:
    def test_harmonic_matches_rotation(self, tmp_path):
        code, out = run(
            tmp_path,
            "propagate",
            {
                "system": "harmonic_oscillator",
                "initial_state": [1.0, 0.0],
                "t_span": [0.0, math.pi / 2],
                "samples": 5,
                "integrator": {"rel_tol": 1e-12, "abs_tol": 1e-14},
            },
        )
        assert code == 0
        traj = load_trajectory(out / "trajectory.csv")
        for i, t in enumerate(traj.times):
            c, s = math.cos(t), math.sin(t)
            assert np.allclose(traj.stms[i], [[c, -s], [s, c]], atol=1e-9)
            assert np.allclose(traj.states[i], [c, s], atol=1e-9)

    def test_json_format_flag(self, tmp_path):
        code, out = run(
            tmp_path,
            "propagate",
            {"system": "pendulum", "initial_state": [0.0, 1.0], "t_span": [0.0, 1.0]},
            "--format",
            "json",
        )
        assert code == 0
        assert (out / "trajectory.json").exists()
        assert not (out / "trajectory.csv").exists()

    def test_rk4_output_is_byte_identical(self, tmp_path):
        cfg = {
            "system": "coupled_oscillators",
            "initial_state": [0.3, 0.0, -0.2, 0.1],
            "t_span": [0.0, 4.0],
            "samples": 9,
            "integrator": {"method": "rk4", "n_steps": 400},
        }
        _, out1 = run(tmp_path, "propagate", cfg)
        first = (out1 / "trajectory.csv").read_bytes()
        (out1 / "trajectory.csv").unlink()
        code, out2 = run(tmp_path, "propagate", cfg)
        assert code == 0
        assert (out2 / "trajectory.csv").read_bytes() == first


class TestInvariants:
    def test_fixture_split_report(self, tmp_path):
        traj_path = fixture_trajectory(
            tmp_path / "fix.json", [np.eye(4), squeeze_rotate()]
        )
        code, out = run(
            tmp_path,
            "invariants",
            {"trajectory": traj_path, "splits": [[1], [2], [1, 2]]},
        )
        assert code == 0
        report = json.loads((out / "invariants.json").read_text())
        assert report["violations"] == []
        row = report["samples"][1]
        assert np.allclose(row["column_sums"], 1.0, atol=1e-12)
        assert np.allclose(row["row_sums"], 1.0, atol=1e-12)
        by_name = {s["split"]: s for s in row["splits"]}
        assert by_name["1"]["nu"] == pytest.approx(1.25, abs=1e-12)
        assert by_name["1"]["nu_complement"] == pytest.approx(1.25, abs=1e-12)
        assert by_name["1"]["beta"] == pytest.approx(BETA_FIXTURE, abs=1e-12)
        assert by_name["1+2"]["beta"] is None  # full split has no complement (NaN -> null)
        assert (out / "invariants.csv").exists()

    def test_propagated_inline(self, tmp_path):
        code, out = run(
            tmp_path,
            "invariants",
            {
                "system": {"name": "coupled_oscillators", "params": {"epsilon": 0.25}},
                "initial_state": [0.1, 0.3, -0.2, 0.4],
                "t_span": [0.0, 2.0],
                "samples": 5,
            },
        )
        assert code == 0
        report = json.loads((out / "invariants.json").read_text())
        assert report["violations"] == []
        assert report["splits"]  # defaulted to all proper subsets

    def test_corrupted_stm_flags_violations(self, tmp_path, capsys):
        bad = np.diag([2.0, 1.0, 1.0, 1.0])
        traj_path = fixture_trajectory(tmp_path / "bad.json", [np.eye(4), bad])
        code, out = run(tmp_path, "invariants", {"trajectory": traj_path, "splits": [[1]]})
        assert code == 4
        assert "VIOLATION" in capsys.readouterr().out
        report = json.loads((out / "invariants.json").read_text())
        assert report["violations"]

    def test_tol_override_flags_roundoff(self, tmp_path):
        code, _ = run(
            tmp_path,
            "invariants",
            {
                "system": "pendulum",
                "initial_state": [0.0, 1.5],
                "t_span": [0.0, 5.0],
                "samples": 5,
            },
            "--tol-override",
            "1e-18",
        )
        assert code == 4

    def test_split_out_of_range(self, tmp_path, capsys):
        traj_path = fixture_trajectory(tmp_path / "fix.json", [np.eye(4)])
        code, _ = run(tmp_path, "invariants", {"trajectory": traj_path, "splits": [[3]]})
        assert code == 2
        assert "out of range" in capsys.readouterr().err


class TestSkeleton:
    def test_inline_matrix(self, tmp_path):
        code, out = run(
            tmp_path, "skeleton", {"stm": {"matrix": [[2.0, 0.0], [0.0, 0.5]]}}
        )
        assert code == 0
        sk = json.loads((out / "skeleton.json").read_text())
        assert sk["lambdas"] == pytest.approx([4.0])
        # directions are column-stacked, one column per lambda
        assert np.allclose(np.abs(sk["xi"]), [[1.0], [0.0]])
        assert np.allclose(np.abs(sk["eta"]), [[0.0], [1.0]])
        assert sk["t_residual"] <= 1e-12

    def test_trajectory_source(self, tmp_path):
        cfg = {
            "system": "pendulum",
            "initial_state": [0.0, 1.5],
            "t_span": [0.0, 6.0],
            "samples": 4,
            "integrator": {"rel_tol": 1e-12, "abs_tol": 1e-14},
        }
        code, out = run(tmp_path, "propagate", cfg, "--format", "json")
        assert code == 0
        code2, out2 = run(
            tmp_path,
            "skeleton",
            {"stm": {"trajectory": str(out / "trajectory.json"), "sample": -1}},
        )
        assert code2 == 0
        sk = json.loads((out2 / "skeleton.json").read_text())
        lam = sk["lambdas"][0]
        assert lam >= 1.0
        # report stores |  ||Phi xi|| - sqrt(lambda) |, which should vanish
        assert sk["pairing"]["image_norm_xi"][0] <= 1e-8
        assert sk["pairing"]["reciprocity"][0] <= 1e-8

    def test_non_symplectic_exits_5(self, tmp_path, capsys):
        code, _ = run(tmp_path, "skeleton", {"stm": {"matrix": [[2.0, 0.0], [0.0, 0.4]]}})
        assert code == 5
        assert "not symplectic" in capsys.readouterr().err

    def test_seed_reproducibility(self, tmp_path):
        cfg = {"stm": {"random_symplectic": {"n_pairs": 2}}}
        _, out1 = run(tmp_path, "skeleton", cfg, "--seed", "7")
        first = (out1 / "skeleton.json").read_bytes()
        (out1 / "skeleton.json").unlink()
        _, out2 = run(tmp_path, "skeleton", cfg, "--seed", "7")
        assert (out2 / "skeleton.json").read_bytes() == first
        (out2 / "skeleton.json").unlink()
        _, out3 = run(tmp_path, "skeleton", cfg, "--seed", "8")
        other = json.loads((out3 / "skeleton.json").read_text())
        assert not np.allclose(other["lambdas"], json.loads(first)["lambdas"])

    def test_stm_file_source(self, tmp_path):
        from symvol.io import save_matrix

        mpath = tmp_path / "phi.csv"
        save_matrix(squeeze_rotate(), mpath)
        code, out = run(tmp_path, "skeleton", {"stm": str(mpath)})
        assert code == 0
        sk = json.loads((out / "skeleton.json").read_text())
        assert sk["lambdas"] == pytest.approx([4.0, 1.0], abs=1e-10)


class TestSurface:
    def test_identity_lamina_report(self, tmp_path):
        code, out = run(
            tmp_path,
            "surface",
            {
                "surface": {"type": "lamina", "pair": 1, "n_pairs": 2, "cells": [8, 8]},
                "refine": 2,
            },
        )
        assert code == 0
        rep = json.loads((out / "surface.json").read_text())
        assert rep["area"] == pytest.approx(4.0, abs=1e-12)
        assert rep["mapped_area"] == pytest.approx(4.0, abs=1e-12)
        assert rep["signed_shadow"] == pytest.approx(4.0, abs=1e-12)
        assert rep["parasymplectic"] is True
        assert rep["caustic_count"] == 0
        assert rep["total_prob"] == pytest.approx(1.0, abs=1e-12)
        assert rep["refined"]["area_change"] == pytest.approx(0.0, abs=1e-12)
        lines = (out / "surface_density.csv").read_text().splitlines()
        assert lines[0] == "P_i,Q_i,sigma,prob,caustic_flag"
        assert len(lines) == 65

    def test_rotated_lamina_shadow(self, tmp_path):
        theta = 0.35
        code, out = run(
            tmp_path,
            "surface",
            {
                "surface": {"type": "lamina", "pair": 1, "n_pairs": 2, "cells": [4, 4]},
                "stm": {"matrix": equal_rotation(theta).tolist()},
                "target_pair": 1,
            },
        )
        assert code == 0
        rep = json.loads((out / "surface.json").read_text())
        # signed shadow sums all pair planes: invariant under the rotation
        assert rep["signed_shadow"] == pytest.approx(4.0, abs=1e-9)
        assert rep["mapped_area"] == pytest.approx(4.0, abs=1e-9)
        assert rep["violations"] == []
        # the target-plane density spreads by 1/cos^2(theta)
        lines = (out / "surface_density.csv").read_text().splitlines()[1:]
        sigmas = [float(line.split(",")[2]) for line in lines]
        assert all(
            s == pytest.approx(sigmas[0], rel=1e-9) for s in sigmas
        )  # uniform input stays uniform under a linear map

    def test_all_caustic_exits_4(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "surface",
            {
                "surface": {"type": "lamina", "pair": 1, "n_pairs": 2, "cells": [4, 4]},
                "stm": {"matrix": equal_rotation(math.pi / 2).tolist()},
                "target_pair": 1,
            },
        )
        assert code == 4
        assert "degenerate projection" in capsys.readouterr().err

    def test_dimension_mismatch(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "surface",
            {
                "surface": {"type": "lamina", "pair": 1, "n_pairs": 2},
                "stm": {"matrix": [[1.0, 0.0], [0.0, 1.0]]},
            },
        )
        assert code == 2
        assert "does not match" in capsys.readouterr().err

    def test_linear_graph_needs_coeffs(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "surface",
            {"surface": {"type": "linear_graph", "pair": 1, "n_pairs": 2}},
        )
        assert code == 2
        assert "coeffs" in capsys.readouterr().err


class TestExample:
    def test_heisenberg_bloch_summary(self, tmp_path):
        code, out = run(
            tmp_path,
            "example",
            {"example": "heisenberg", "control": {"family": "bloch"}},
        )
        assert code == 0
        s = json.loads((out / "heisenberg_summary.json").read_text())
        assert abs(s["mu1"]) <= 1e-9 and abs(s["nu1"]) <= 1e-9
        assert s["alpha1"] == pytest.approx(1.0, abs=1e-9)
        assert s["f_closed"] == pytest.approx(8.0 / 3.0, abs=1e-6)
        assert s["alpha_residual"] == pytest.approx(2.0, abs=1e-6)
        snap = (out / "heisenberg_snapshots.csv").read_text().splitlines()
        assert snap[0] == "t,u,v,x,y,z"
        assert len(snap) == 1 + 3 * 9 * 9

    def test_heisenberg_zero_summary(self, tmp_path):
        code, out = run(tmp_path, "example", {"example": "heisenberg"})
        assert code == 0
        s = json.loads((out / "heisenberg_summary.json").read_text())
        assert s["f_closed"] == pytest.approx(20.0 / 3.0, abs=1e-12)
        assert s["f_quadrature"] == pytest.approx(20.0 / 3.0, abs=1e-9)

    def test_disc_compliant_summary(self, tmp_path):
        code, out = run(
            tmp_path,
            "example",
            {
                "example": "disc",
                "control": {"family": "constant", "u": 1.0, "v": 0.3, "compliant": True},
                "t_final": 2.0,
                "initial_state": [0.0, 0.0, 0.0, 1.2, 0.0],
            },
        )
        assert code == 0
        s = json.loads((out / "disc_summary.json").read_text())
        assert s["AD_minus_BC_max"] <= 1e-9
        snap = (out / "disc_snapshots.csv").read_text().splitlines()
        assert snap[0] == "t,u,v,dx,dy"

    def test_disc_singularity_exits_3(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "example",
            {
                "example": "disc",
                "control": {"family": "constant", "u": 1.0, "v": 1.0},
                "t_final": 3.0,
            },
        )
        assert code == 3
        assert "integration failure" in capsys.readouterr().err

    def test_example_rerun_is_byte_identical(self, tmp_path):
        cfg = {"example": "heisenberg", "control": {"family": "bloch"}}
        _, out1 = run(tmp_path, "example", cfg)
        first = (out1 / "heisenberg_summary.json").read_bytes()
        snaps = (out1 / "heisenberg_snapshots.csv").read_bytes()
        for f in ("heisenberg_summary.json", "heisenberg_snapshots.csv"):
            (out1 / f).unlink()
        _, out2 = run(tmp_path, "example", cfg)
        assert (out2 / "heisenberg_summary.json").read_bytes() == first
        assert (out2 / "heisenberg_snapshots.csv").read_bytes() == snaps

    def test_snapshot_times_validated(self, tmp_path, capsys):
        code, _ = run(
            tmp_path,
            "example",
            {"example": "disc", "t_final": 1.0, "snapshot_times": [0.0, 2.0]},
        )
        assert code == 2
        assert "snapshot_times" in capsys.readouterr().err


def test_module_entry_point_wiring():
    proc = subprocess.run(
        [sys.executable, "-m", "symvol", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    for sub in ("propagate", "invariants", "skeleton", "surface", "example"):
        assert sub in proc.stdout
