"""Shared fixtures: hand-checked symplectic matrices and surface helpers."""

import math

import numpy as np
import pytest

from symvol import SurfaceParam


def equal_rotation(theta: float, n_pairs: int = 2) -> np.ndarray:
    """Rotation by theta applied identically to the p-plane and the q-plane
    (symplectic and orthogonal); mixes pair 1 with pair 2."""
    if n_pairs != 2:
        raise ValueError("fixture supports n_pairs = 2")
    c, s = math.cos(theta), math.sin(theta)
    R = np.zeros((4, 4))
    R[0, 0], R[0, 2] = c, -s
    R[2, 0], R[2, 2] = s, c
    R[1, 1], R[1, 3] = c, -s
    R[3, 1], R[3, 3] = s, c
    return R


def squeeze_rotate(theta: float = math.pi / 4) -> np.ndarray:
    """diag(2, 1/2, 1, 1) after an equal rotation: symplectic, with pair-plane
    expansion factor 1.25 on both sides of the {1}|{2} split at theta = pi/4."""
    S = np.diag([2.0, 0.5, 1.0, 1.0])
    return S @ equal_rotation(theta)


# frozen by an out-of-tree plain RK4 run (h = 2.5e-5), good to ~2e-15
PENDULUM_X10 = np.array([0.053830314556607049, -0.084250604429936676])

# asin(0.64): collapse angle of the squeeze_rotate fixture for split {1}|{2}
BETA_FIXTURE = 0.694498265626556


def compose_surface(s: SurfaceParam, Phi: np.ndarray) -> SurfaceParam:
    """The surface s pushed through the linear map Phi about its anchor."""
    Phi = np.asarray(Phi, dtype=float)

    def embed(uv):
        return s.anchor + Phi @ (s.embed(uv) - s.anchor)

    def jac(uv):
        return Phi @ s.jacobian(uv)

    return SurfaceParam(
        k=s.k, n_pairs=s.n_pairs, bounds=s.bounds, cells=s.cells,
        embed=embed, jacobian=jac, anchor=s.anchor,
        parasymplectic=s.parasymplectic, name=f"{s.name}@mapped",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
