"""Parametrized 2k-surfaces in phase space and their mapped shadows.

A surface carries exact analytic Jacobians (closures over the parameters,
no mesh differencing).  Quadratures are midpoint sums over a rectangular
parameter grid.  The shadow machinery projects the mapped surface onto
coordinate pair planes; where the shadow determinant vanishes the density is
unbounded and the cell is flagged caustic rather than evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .invariants import poincare_cartan_sum, volume_2k
from .phase import pair_projection, pair_stack

__all__ = [
    "CausticError",
    "SurfaceParam",
    "lamina",
    "pair_block_surface",
    "linear_graph_surface",
    "surface_area",
    "pullback_density",
    "parasymplectic_residual",
    "mapped_area_factor",
    "shadow_area_factor",
    "signed_shadow_integral",
    "unsigned_shadow_integral",
    "DensityMap",
    "density_map",
]


class CausticError(ValueError):
    """Every cell of the requested shadow is caustic (degenerate projection)."""


@dataclass(frozen=True)
class SurfaceParam:
    """A 2k-dimensional parametrized surface patch in 2n phase coordinates.

    embed maps a parameter point (length 2k) to phase coordinates (length
    2n); jacobian returns the exact 2n x 2k tangent frame at that point.
    bounds/cells fix the rectangular parameter grid used by quadratures.
    anchor is the reference phase point used when a linear map is applied to
    surface deviations.  parasymplectic declares that the pullback of the
    symplectic 2k-form has unit density everywhere (checked, not trusted).
    """

    k: int
    n_pairs: int
    bounds: tuple
    cells: tuple
    embed: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    anchor: np.ndarray
    parasymplectic: bool = False
    name: str = ""

    def __post_init__(self):
        if self.k < 1 or self.n_pairs < self.k:
            raise ValueError("need 1 <= k <= n_pairs")
        if len(self.bounds) != 2 * self.k or len(self.cells) != 2 * self.k:
            raise ValueError("bounds and cells must have one entry per parameter axis (2k)")
        for (lo, hi), m in zip(self.bounds, self.cells):
            if not hi > lo:
                raise ValueError("each bounds entry must be (lo, hi) with hi > lo")
            if int(m) < 1:
                raise ValueError("cell counts must be >= 1")
        object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        object.__setattr__(self, "cells", tuple(int(m) for m in self.cells))
        object.__setattr__(self, "anchor", np.asarray(self.anchor, dtype=float))

    @property
    def cell_volume(self) -> float:
        v = 1.0
        for (lo, hi), m in zip(self.bounds, self.cells):
            v *= (hi - lo) / m
        return v

    def cell_centers(self) -> np.ndarray:
        """Midpoints of every grid cell, shape (#cells, 2k)."""
        axes = []
        for (lo, hi), m in zip(self.bounds, self.cells):
            h = (hi - lo) / m
            axes.append(lo + h * (np.arange(m) + 0.5))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, 2 * self.k)

    def refined(self, factor: int) -> "SurfaceParam":
        """Same patch with every axis cell count multiplied by factor."""
        return replace(self, cells=tuple(m * factor for m in self.cells))


def lamina(
    pair_j: int,
    n_pairs: int,
    bounds=((-1.0, 1.0), (-1.0, 1.0)),
    cells=(64, 64),
    anchor=None,
) -> SurfaceParam:
    """Flat rectangular patch of the (p_j, q_j) plane through the anchor."""
    if anchor is None:
        anchor = np.zeros(2 * n_pairs)
    anchor = np.asarray(anchor, dtype=float)
    P = pair_projection(pair_j, n_pairs)

    def embed(uv):
        return anchor + P @ np.asarray(uv, dtype=float)

    def jac(uv):
        return P.copy()

    return SurfaceParam(
        k=1, n_pairs=n_pairs, bounds=tuple(bounds), cells=tuple(cells),
        embed=embed, jacobian=jac, anchor=anchor, parasymplectic=True,
        name=f"lamina_pair{pair_j}",
    )


def pair_block_surface(
    pairs: Sequence[int],
    n_pairs: int,
    bounds=None,
    cells=None,
    anchor=None,
) -> SurfaceParam:
    """Flat 2k-dimensional patch spanning a stack of coordinate pair planes."""
    pairs = sorted(set(int(i) for i in pairs))
    k = len(pairs)
    if bounds is None:
        bounds = tuple(((-1.0, 1.0),) * (2 * k))
    if cells is None:
        cells = tuple((64,) * 2 if k == 1 else (8,) * (2 * k))
    if anchor is None:
        anchor = np.zeros(2 * n_pairs)
    anchor = np.asarray(anchor, dtype=float)
    L = pair_stack(pairs, n_pairs)

    def embed(uu):
        return anchor + L @ np.asarray(uu, dtype=float)

    def jac(uu):
        return L.copy()

    return SurfaceParam(
        k=k, n_pairs=n_pairs, bounds=tuple(bounds), cells=tuple(cells),
        embed=embed, jacobian=jac, anchor=anchor, parasymplectic=True,
        name="pair_block_" + "_".join(str(i) for i in pairs),
    )


def linear_graph_surface(
    pair_j: int,
    n_pairs: int,
    coeffs,
    bounds=((-1.0, 1.0), (-1.0, 1.0)),
    cells=(64, 64),
    anchor=None,
) -> SurfaceParam:
    """Graph over the (p_j, q_j) plane: the other coordinates are the linear
    image coeffs @ (u, v), in interleaved order with pair j skipped.

    The tilt leaves the pullback symplectic density at 1 only when the graph
    coordinates contribute no conjugate cross terms; parasymplecticity is
    still declared and must be checked by the caller when it matters.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (2 * n_pairs - 2, 2):
        raise ValueError(f"coeffs must have shape ({2 * n_pairs - 2}, 2)")
    if anchor is None:
        anchor = np.zeros(2 * n_pairs)
    anchor = np.asarray(anchor, dtype=float)
    P = pair_projection(pair_j, n_pairs)
    others = [r for r in range(2 * n_pairs) if r not in (2 * (pair_j - 1), 2 * pair_j - 1)]
    L = P.copy()
    L[others, :] += coeffs
    # the tilted frame is parasymplectic iff its own symplectic density is 1
    parasym = abs(poincare_cartan_sum(L) - 1.0) <= 1e-12

    def embed(uv):
        return anchor + L @ np.asarray(uv, dtype=float)

    def jac(uv):
        return L.copy()

    return SurfaceParam(
        k=1, n_pairs=n_pairs, bounds=tuple(bounds), cells=tuple(cells),
        embed=embed, jacobian=jac, anchor=anchor, parasymplectic=parasym,
        name=f"graph_pair{pair_j}",
    )


def surface_area(s: SurfaceParam) -> float:
    """Midpoint quadrature of the Riemannian 2k-area, sum sqrt(Gram) dcell."""
    total = 0.0
    for pt in s.cell_centers():
        total += volume_2k(s.jacobian(pt))
    return total * s.cell_volume


def pullback_density(s: SurfaceParam, point) -> float:
    """Pullback density of the symplectic 2k-form at one parameter point,
    (1/k!) omega^k on the tangent frame columns."""
    return poincare_cartan_sum(s.jacobian(np.asarray(point, dtype=float)))


def parasymplectic_residual(s: SurfaceParam) -> float:
    """max |pullback density - 1| over the grid's cell centers."""
    worst = 0.0
    for pt in s.cell_centers():
        worst = max(worst, abs(pullback_density(s, pt) - 1.0))
    return worst


def mapped_area_factor(s: SurfaceParam, Phi, point) -> float:
    """sqrt Gram of the mapped tangent frame Phi L at one parameter point."""
    Phi = np.asarray(Phi, dtype=float)
    return volume_2k(Phi @ s.jacobian(np.asarray(point, dtype=float)))


def shadow_area_factor(s: SurfaceParam, Phi, target, point) -> float:
    """Signed area factor of the mapped frame's projection onto a pair-plane
    stack: det(Pi_target^T Phi L).  target is a 1-based pair index (k = 1)
    or a subset of k pair indices."""
    Phi = np.asarray(Phi, dtype=float)
    if np.isscalar(target):
        P = pair_projection(int(target), s.n_pairs)
    else:
        P = pair_stack(sorted(int(i) for i in target), s.n_pairs)
    if P.shape[1] != 2 * s.k:
        raise ValueError("target stack width must match the surface dimension 2k")
    L = s.jacobian(np.asarray(point, dtype=float))
    return float(np.linalg.det(P.T @ Phi @ L))


def signed_shadow_integral(s: SurfaceParam, Phi=None) -> float:
    """Grid quadrature of the signed symplectic density of the mapped surface
    (the surface version of the antisymmetric subvolume sum)."""
    Phi = np.eye(2 * s.n_pairs) if Phi is None else np.asarray(Phi, dtype=float)
    total = 0.0
    for pt in s.cell_centers():
        total += poincare_cartan_sum(Phi @ s.jacobian(pt))
    return total * s.cell_volume


def unsigned_shadow_integral(s: SurfaceParam, Phi=None) -> float:
    """Grid quadrature of the unsigned symplectic density |.| per cell; bounds
    the signed integral from above (triangle inequality, cellwise)."""
    Phi = np.eye(2 * s.n_pairs) if Phi is None else np.asarray(Phi, dtype=float)
    total = 0.0
    for pt in s.cell_centers():
        total += abs(poincare_cartan_sum(Phi @ s.jacobian(pt)))
    return total * s.cell_volume


@dataclass(frozen=True)
class DensityMap:
    """First-order shadow density of a mapped surface on one pair plane.

    One record per grid cell: parameter midpoint (u, v), image-plane point
    (P, Q) of the mapped deviation from the anchor, density sigma (NaN on
    caustic cells), probability mass, and the caustic flag.  Probabilities
    sum to 1 over all cells including caustic ones.
    """

    target_pair: int
    uv: np.ndarray  # (m, 2)
    image: np.ndarray  # (m, 2)
    sigma: np.ndarray  # (m,)
    prob: np.ndarray  # (m,)
    caustic: np.ndarray  # (m,) bool

    @property
    def caustic_count(self) -> int:
        return int(np.sum(self.caustic))

    @property
    def total_prob(self) -> float:
        return float(np.sum(self.prob))


def density_map(
    s: SurfaceParam,
    Phi,
    target: int,
    caustic_tol: float = 1e-12,
    image_offset: Optional[np.ndarray] = None,
) -> DensityMap:
    """Map a uniformly weighted surface through Phi and project the result
    onto the (p_target, q_target) plane as a piecewise density.

    The map is first order about the surface anchor: deviations x - anchor
    are pushed through Phi, so image points are deviations on the target
    plane (shifted by image_offset when given).  Cells whose shadow
    determinant is below caustic_tol carry probability but no finite density
    and are flagged.  Raises CausticError when every cell is caustic.
    """
    if s.k != 1:
        raise ValueError("density maps are defined for 2-dimensional surfaces (k = 1)")
    Phi = np.asarray(Phi, dtype=float)
    P = pair_projection(int(target), s.n_pairs)
    centers = s.cell_centers()
    m = centers.shape[0]

    sqrtg = np.empty(m)
    shadow = np.empty(m)
    image = np.empty((m, 2))
    for a, pt in enumerate(centers):
        L = s.jacobian(pt)
        sqrtg[a] = volume_2k(L)
        shadow[a] = np.linalg.det(P.T @ Phi @ L)
        image[a] = P.T @ (Phi @ (s.embed(pt) - s.anchor))
    if image_offset is not None:
        image = image + np.asarray(image_offset, dtype=float)

    caustic = np.abs(shadow) < caustic_tol
    if bool(np.all(caustic)):
        raise CausticError(
            f"target pair {target} shadow is degenerate on every cell of {s.name or 'surface'}"
        )
    total_sqrtg = float(np.sum(sqrtg))
    prob = sqrtg / total_sqrtg
    sigma = np.full(m, np.nan)
    ok = ~caustic
    sigma[ok] = sqrtg[ok] / (np.abs(shadow[ok]) * s.cell_volume * total_sqrtg)
    return DensityMap(
        target_pair=int(target), uv=centers, image=image,
        sigma=sigma, prob=prob, caustic=caustic,
    )
