"""State and state-transition-matrix propagation.

The nominal state and the STM are co-integrated as one augmented first-order
system [x | Phi columns, flattened column-major].  Two integrators are
provided: an embedded Dormand-Prince 5(4) pair with PI step-size control for
accuracy, and a fixed-step classical RK4 for byte-identical reproducibility.
Symplecticity drift of the STM is measured at every sample and recorded,
never corrected.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .phase import PhaseState, structure_matrix, symplecticity_residual
from .systems import HamiltonianSystem, variational_rhs

__all__ = [
    "IntegrationError",
    "IntegratorSettings",
    "IntegratorStats",
    "Stm",
    "Trajectory",
    "propagate",
    "solve_ode_rk45",
    "solve_ode_rk4",
]


class IntegrationError(RuntimeError):
    """Propagation failed (step-size underflow, divergence, or step budget)."""


# --- Dormand-Prince 5(4) tableau ---
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_ERR = _B5 - _B4

# PI controller exponents (Lund stabilisation), clip limits, safety factor
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0


def _error_norm(e, y0, y1, rel_tol, abs_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((e / scale) ** 2)))


def _initial_step(f, t0, y0, f0, direction, rel_tol, abs_tol, span):
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = np.asarray(f(t0 + direction * h0, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, 1e-3 * h0)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, span)


def solve_ode_rk45(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t_eval: np.ndarray,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    max_step: float = math.inf,
    max_steps: int = 10_000_000,
):
    """Integrate y' = f(t, y), sampling exactly at the t_eval nodes.

    t_eval must be strictly monotone starting at t0; integration direction
    follows the ordering (backward runs are allowed).  Returns (Y, stats)
    where Y[i] is the solution at t_eval[i] and stats counts steps,
    rejections and RHS evaluations.
    """
    y0 = np.asarray(y0, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size < 2 or t_eval[0] != t0:
        raise ValueError("t_eval must start at t0 and contain at least two nodes")
    d = np.diff(t_eval)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("t_eval must be strictly monotone")
    direction = 1.0 if d[0] > 0 else -1.0
    t_end = float(t_eval[-1])
    span = abs(t_end - t0)

    out = np.empty((t_eval.size, y0.size))
    out[0] = y0
    next_eval = 1

    t = float(t0)
    y = y0.copy()
    k1 = np.asarray(f(t, y), dtype=float)
    n_rhs = 2  # f0 plus the probe inside _initial_step
    h = _initial_step(f, t, y, k1, direction, rel_tol, abs_tol, span)
    h = min(h, max_step)
    err_prev = 1e-4
    n_steps = 0
    n_rejected = 0
    eps = np.finfo(float).eps

    while next_eval < t_eval.size:
        if n_steps + n_rejected >= max_steps:
            raise IntegrationError(f"step budget {max_steps} exhausted at t = {t}")
        # clamp the attempted step to land exactly on the next sample node
        remaining = abs(t_end - t)
        h_attempt = min(h, max_step, remaining)
        target = t_eval[next_eval]
        if abs(target - t) <= h_attempt * (1 + 1e-12):
            h_attempt = abs(target - t)
            lands = True
        else:
            lands = False
        if h_attempt < 16.0 * eps * max(abs(t), 1.0):
            raise IntegrationError(f"step size underflow at t = {t}")

        hs = direction * h_attempt
        k = np.empty((7, y.size))
        k[0] = k1
        ok = True
        for i in range(1, 7):
            yi = y + hs * (_A[i] @ k[:i])
            ki = np.asarray(f(t + _C[i] * hs, yi), dtype=float)
            n_rhs += 1
            if not np.all(np.isfinite(ki)):
                ok = False
                break
            k[i] = ki
        if ok:
            y_new = y + hs * (_B5 @ k)  # k[6] is already f(t+h, y_new): FSAL
            err_vec = hs * (_ERR @ k)
            finite = np.all(np.isfinite(y_new))
            err = _error_norm(err_vec, y, y_new, rel_tol, abs_tol) if finite else math.inf
        else:
            err = math.inf

        if err <= 1.0:
            t_new = t + hs
            if lands:
                t_new = float(target)
                out[next_eval] = y_new
                next_eval += 1
            t = t_new
            y = y_new
            k1 = k[6]
            n_steps += 1
            if err == 0.0:
                factor = _FAC_MAX
            else:
                factor = _SAFETY * err ** (-_PI_ALPHA) * err_prev**_PI_BETA
                factor = min(_FAC_MAX, max(_FAC_MIN, factor))
            h = h_attempt * factor
            err_prev = max(err, 1e-10)
        else:
            n_rejected += 1
            if math.isinf(err):
                h = h_attempt * 0.2
            else:
                factor = max(_FAC_MIN, _SAFETY * err ** (-0.2))
                h = h_attempt * min(1.0, factor)

    stats = {"steps": n_steps, "rejected": n_rejected, "rhs_evals": n_rhs}
    return out, stats


def solve_ode_rk4(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0: np.ndarray,
    t_eval: np.ndarray,
    n_steps: int = 1000,
):
    """Classical fixed-step RK4, hitting every t_eval node exactly.

    The n_steps budget is distributed over the sample intervals in proportion
    to their length (at least one step per interval).  Runs with identical
    inputs are bit-for-bit reproducible.
    """
    y0 = np.asarray(y0, dtype=float)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.size < 2 or t_eval[0] != t0:
        raise ValueError("t_eval must start at t0 and contain at least two nodes")
    span = abs(t_eval[-1] - t0)
    if span == 0:
        raise ValueError("degenerate time span")

    out = np.empty((t_eval.size, y0.size))
    out[0] = y0
    y = y0.copy()
    n_rhs = 0
    total_sub = 0
    for i in range(1, t_eval.size):
        ta, tb = float(t_eval[i - 1]), float(t_eval[i])
        m = max(1, int(round(n_steps * abs(tb - ta) / span)))
        h = (tb - ta) / m
        t = ta
        for _ in range(m):
            k1 = np.asarray(f(t, y), dtype=float)
            k2 = np.asarray(f(t + 0.5 * h, y + 0.5 * h * k1), dtype=float)
            k3 = np.asarray(f(t + 0.5 * h, y + 0.5 * h * k2), dtype=float)
            k4 = np.asarray(f(t + h, y + h * k3), dtype=float)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            n_rhs += 4
        total_sub += m
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"solution not finite at t = {tb}")
        out[i] = y
    stats = {"steps": total_sub, "rejected": 0, "rhs_evals": n_rhs}
    return out, stats


@dataclass(frozen=True)
class IntegratorSettings:
    """Integration controls.

    method is "rk45" (adaptive) or "rk4" (fixed step, n_steps over the whole
    span).  residual_budget is the symplecticity drift the run is expected to
    stay under; exceedances are counted and warned about, never repaired.
    """

    method: str = "rk45"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    n_steps: int = 1000
    max_steps: int = 10_000_000
    residual_budget: float = 1e-8

    def __post_init__(self):
        if self.method not in ("rk45", "rk4"):
            raise ValueError(f"unknown method {self.method!r}; use 'rk45' or 'rk4'")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")


@dataclass(frozen=True)
class IntegratorStats:
    method: str
    steps: int
    rejected: int
    rhs_evals: int
    rel_tol: float
    abs_tol: float
    budget_exceedances: int = 0


@dataclass(frozen=True)
class Stm:
    """State transition matrix over [t0, t1] with its recorded drift."""

    matrix: np.ndarray
    t0: float
    t1: float
    residual: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", M)
        if self.residual is None:
            object.__setattr__(self, "residual", symplecticity_residual(M))

    @property
    def n_pairs(self) -> int:
        return self.matrix.shape[0] // 2


class Trajectory:
    """Sampled (state, STM) history of one propagation run.

    times are the requested sample epochs (strictly monotone, starting at the
    initial epoch where the STM is the identity).  energy_drift is H(x(t)) -
    H(x(0)) when the system supplies a Hamiltonian, NaN otherwise.
    """

    def __init__(self, system_name, times, states, stms, residuals, energy_drift, stats):
        self.system_name = system_name
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.stms = np.asarray(stms, dtype=float)
        self.residuals = np.asarray(residuals, dtype=float)
        self.energy_drift = np.asarray(energy_drift, dtype=float)
        self.stats = stats
        d = np.diff(self.times)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sample times must be strictly monotone")

    def __len__(self):
        return self.times.size

    @property
    def n_pairs(self) -> int:
        return self.states.shape[1] // 2

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.states[i], float(self.times[i]))

    def stm(self, i: int) -> Stm:
        return Stm(self.stms[i], float(self.times[0]), float(self.times[i]), float(self.residuals[i]))

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))


def propagate(
    sys: HamiltonianSystem,
    x0,
    t_span,
    settings: IntegratorSettings = IntegratorSettings(),
    samples: int = 100,
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Co-integrate the state and its STM over t_span.

    Parameters
    ----------
    sys : HamiltonianSystem
    x0 : PhaseState or array of length 2n
    t_span : (t0, t1) with t1 != t0 (backward runs allowed)
    settings : IntegratorSettings
    samples : number of equally spaced sample epochs when t_eval is None
    t_eval : explicit sample epochs; must start at t0 and be strictly
        monotone toward t1

    Returns a Trajectory whose first sample is (x0, I).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 == t0:
        raise ValueError("degenerate time span: t1 must differ from t0")
    coords0 = x0.coords if isinstance(x0, PhaseState) else np.asarray(x0, dtype=float)
    state0 = PhaseState(coords0, t0)
    if state0.n_pairs != sys.n_pairs:
        raise ValueError(
            f"state has {state0.n_pairs} pairs but system {sys.name!r} has {sys.n_pairs}"
        )
    if t_eval is None:
        if samples < 2:
            raise ValueError("need at least two samples")
        t_eval = np.linspace(t0, t1, samples)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        if t_eval[0] != t0 or abs(t_eval[-1] - t1) > 1e-12 * max(1.0, abs(t1)):
            raise ValueError("t_eval must run from t0 to t1")

    dim = sys.dim
    J = structure_matrix(sys.n_pairs)
    # symmetry diagnostic once up front (variational_rhs warns if broken)
    variational_rhs(sys, state0, np.eye(dim))

    def rhs(t, y):
        x = y[:dim]
        if not np.all(np.isfinite(x)):
            return np.full(y.size, np.nan)
        st = PhaseState(x, t)
        g = np.asarray(sys.grad_H(st), dtype=float)
        Phi = y[dim:].reshape((dim, dim), order="F")
        H = sys.hessian(st)
        dPhi = J @ (H @ Phi)
        return np.concatenate([J @ g, dPhi.flatten(order="F")])

    y0 = np.concatenate([state0.coords, np.eye(dim).flatten(order="F")])
    if settings.method == "rk45":
        Y, raw = solve_ode_rk45(
            rhs, t0, y0, t_eval,
            rel_tol=settings.rel_tol, abs_tol=settings.abs_tol,
            max_step=settings.max_step, max_steps=settings.max_steps,
        )
    else:
        Y, raw = solve_ode_rk4(rhs, t0, y0, t_eval, n_steps=settings.n_steps)
    if not np.all(np.isfinite(Y)):
        raise IntegrationError("propagation produced non-finite samples")

    m = t_eval.size
    states = Y[:, :dim]
    stms = np.empty((m, dim, dim))
    residuals = np.empty(m)
    for i in range(m):
        stms[i] = Y[i, dim:].reshape((dim, dim), order="F")
        residuals[i] = symplecticity_residual(stms[i])

    if sys.hamiltonian is not None:
        e0 = float(sys.hamiltonian(state0))
        drift = np.array(
            [float(sys.hamiltonian(PhaseState(states[i], t_eval[i]))) - e0 for i in range(m)]
        )
    else:
        drift = np.full(m, np.nan)

    exceed = int(np.sum(residuals > settings.residual_budget))
    if exceed:
        warnings.warn(
            f"{exceed} samples exceed the symplecticity drift budget "
            f"{settings.residual_budget:.1e} (max {np.max(residuals):.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    stats = IntegratorStats(
        method=settings.method,
        steps=raw["steps"],
        rejected=raw["rejected"],
        rhs_evals=raw["rhs_evals"],
        rel_tol=settings.rel_tol,
        abs_tol=settings.abs_tol,
        budget_exceedances=exceed,
    )
    return Trajectory(sys.name, t_eval, states, stms, residuals, drift, stats)
