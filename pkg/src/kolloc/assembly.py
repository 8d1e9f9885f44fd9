"""Overdetermined collocation systems and row-weight schemes.

A trial space spanned by kernel translates Phi(., x_j), j = 1..N_X, is
collocated on interior points Y (operator rows [L Phi](y_i, x_j) with data
f(y_i)) and boundary points Z (identity rows theta * Phi(z_i, x_j) with data
theta * g(z_i)), stacked interior-first:

    A = [ [L Phi](Y, X) ; theta * Phi(Z, X) ],   rhs = [ f(Y) ; theta * g(Z) ].

theta defaults to h^(-3/2) with h the fill distance of the trial centers,
which balances the boundary residual against the interior one. Row weights
come in three schemes: "identity" (plain least squares), "random" (seeded
uniform draws from [0.5, 1.5]), and "trapezoid" (tensor trapezoid quadrature
weights on a transformed grid, turning the weighted residual into a
quadrature approximation of the continuous least-squares functional).
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from .geometry import PointSet, resolve_transform
from .kernels import MaternSpec, elliptic_matrix, matern_matrix
from .pde import EllipticProblem
from .validation import check_positive

__all__ = [
    "CollocationSystem",
    "theta_default",
    "assemble_system",
    "trapezoid_weights_1d",
    "build_weights",
    "weight_and_scale",
]

WEIGHT_SCHEMES = ("identity", "random", "trapezoid")


@dataclass(frozen=True)
class CollocationSystem:
    """Stacked least-squares system with interior rows before boundary rows."""

    design: np.ndarray
    rhs: np.ndarray
    row_weights: np.ndarray
    n_interior: int
    n_boundary: int
    theta: float

    def __post_init__(self):
        m, _ = self.design.shape
        if m != self.n_interior + self.n_boundary:
            raise ValueError("row count does not match n_interior + n_boundary")
        if self.rhs.shape != (m,) or self.row_weights.shape != (m,):
            raise ValueError("rhs and row_weights must have one entry per row")
        if not (np.all(np.isfinite(self.design)) and np.all(np.isfinite(self.rhs))):
            raise ValueError("system contains non-finite entries")


def theta_default(h: float) -> float:
    """Boundary scaling theta = h^(-3/2) for a trial fill distance h."""
    check_positive(h, "h")
    return h**-1.5


def assemble_system(
    prob: EllipticProblem,
    spec: MaternSpec,
    X: PointSet,
    Y: PointSet,
    Z: PointSet,
    theta: float,
) -> CollocationSystem:
    """Assemble the unweighted collocation system for a problem.

    X are the trial centers, Y the interior collocation points, Z the boundary
    collocation points (kind "boundary"). Row weights start at 1; apply
    `build_weights` + `weight_and_scale` for weighted variants.
    """
    if not (X.dim == Y.dim == Z.dim == prob.dim == spec.dim):
        raise ValueError("X, Y, Z, problem, and kernel dimensions must agree")
    if Z.kind != "boundary":
        raise ValueError("Z must be a boundary-only point set")
    check_positive(theta, "theta")
    top = elliptic_matrix(spec, prob.op, Y.points, X.points)
    bottom = theta * matern_matrix(spec, Z.points, X.points)
    rhs = np.concatenate([prob.f(Y.points), theta * prob.g(Z.points)])
    design = np.vstack([top, bottom])
    return CollocationSystem(
        design=design,
        rhs=rhs,
        row_weights=np.ones(len(design)),
        n_interior=len(Y),
        n_boundary=len(Z),
        theta=float(theta),
    )


def trapezoid_weights_1d(nodes) -> np.ndarray:
    """Trapezoid quadrature weights for sorted, strictly increasing nodes.

    w_0 = (t_1 - t_0)/2, w_i = (t_(i+1) - t_(i-1))/2, w_last = (t_last -
    t_(last-1))/2; the weights sum to the interval length exactly (telescoping).
    """
    t = np.asarray(nodes, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("need at least two 1-d nodes")
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ValueError("nodes must be strictly increasing")
    w = np.empty_like(t)
    w[0] = dt[0] / 2.0
    w[-1] = dt[-1] / 2.0
    w[1:-1] = (t[2:] - t[:-2]) / 2.0
    return w


def _grid_axes(pre_grid: PointSet) -> tuple[np.ndarray, int]:
    """Recover the per-axis nodes of a tensor grid, or raise."""
    n_total, d = pre_grid.points.shape
    n_axis = round(n_total ** (1.0 / d))
    if n_axis**d != n_total:
        raise ValueError("trapezoid weights require a tensor grid of points")
    axis = np.unique(pre_grid.points[:, 0])
    if len(axis) != n_axis:
        raise ValueError("trapezoid weights require a tensor grid of points")
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    rebuilt = np.stack([m.ravel() for m in mesh], axis=1)
    if not np.array_equal(rebuilt, pre_grid.points):
        raise ValueError(
            "trapezoid weights require lexicographically ordered tensor-grid points"
        )
    return axis, n_axis


def _boundary_trapezoid(axis_t: np.ndarray, n_axis: int, d: int) -> np.ndarray:
    """Arc-length trapezoid weights on the transformed grid's boundary nodes.

    Nodes shared by several faces (edges and corners) accumulate the weight of
    each incident face, so the weights sum to the boundary measure exactly
    (perimeter 8 for the square). Order matches the boundary mask of the
    lexicographic grid.
    """
    w1 = trapezoid_weights_1d(axis_t) if d > 1 else None
    shape = (n_axis,) * d
    total = n_axis**d
    idx = np.arange(total)
    multi = np.stack(np.unravel_index(idx, shape), axis=1)
    on_face = (multi == 0) | (multi == n_axis - 1)
    b_mask = on_face.any(axis=1)
    b_multi = multi[b_mask]
    w = np.zeros(len(b_multi))
    for k in range(d):
        face_rows = on_face[b_mask][:, k]
        if d == 1:
            w[face_rows] += 1.0  # counting measure on the two endpoints
            continue
        others = [j for j in range(d) if j != k]
        prod = np.ones(int(face_rows.sum()))
        for j in others:
            prod *= w1[b_multi[face_rows, j]]
        w[face_rows] += prod
    return w


def build_weights(
    scheme: str,
    pre_grid: PointSet,
    pre_boundary: PointSet,
    transform,
    seed: int | None = None,
    n_extra_interior: int = 0,
) -> np.ndarray:
    """Row weights for a system assembled on Y = T(pre_grid), Z = T boundary.

    Parameters
    ----------
    scheme : {"identity", "random", "trapezoid"}
        "random" draws each weight uniformly from [0.5, 1.5] with the given
        seed; "trapezoid" builds tensor quadrature weights for the transformed
        grid nodes (interior block, summing to the box volume) and arc-length
        weights for the boundary nodes (summing to the boundary measure).
    pre_grid, pre_boundary : PointSet
        The grid before the transform and its boundary subset, in the same
        order used for assembly.
    transform : str or callable
        Componentwise transform shared with the collocation points.
    seed : int, optional
        Required by the "random" scheme.
    n_extra_interior : int
        Number of extra interior rows appended after the grid rows (scattered
        clouds). Only "identity" and "random" support extras.

    Returns
    -------
    ndarray of shape (n_interior + n_extra_interior + n_boundary,)
        Strictly positive weights in assembly row order.
    """
    if scheme not in WEIGHT_SCHEMES:
        raise ValueError(f"scheme must be one of {WEIGHT_SCHEMES}, got {scheme!r}")
    if n_extra_interior < 0:
        raise ValueError("n_extra_interior must be nonnegative")
    m = len(pre_grid) + n_extra_interior + len(pre_boundary)
    if scheme == "identity":
        return np.ones(m)
    if scheme == "random":
        if seed is None:
            raise ValueError("the random weight scheme requires a seed")
        return np.random.default_rng(seed).uniform(0.5, 1.5, size=m)
    if n_extra_interior:
        raise ValueError("trapezoid weights are undefined for non-grid extra points")
    axis, n_axis = _grid_axes(pre_grid)
    _, fn = resolve_transform(transform)
    axis_t = np.asarray(fn(axis), dtype=float)
    w1 = trapezoid_weights_1d(axis_t)
    w_in = w1.copy()
    for _ in range(pre_grid.dim - 1):
        w_in = np.multiply.outer(w_in, w1)
    w_bd = _boundary_trapezoid(axis_t, n_axis, pre_grid.dim)
    if len(w_bd) != len(pre_boundary):
        raise ValueError("pre_boundary does not match the grid's boundary subset")
    return np.concatenate([w_in.ravel(), w_bd])


def weight_and_scale(system: CollocationSystem, w) -> CollocationSystem:
    """Scale rows of an unweighted system by sqrt(w); record w as row weights.

    Solving the scaled system by plain least squares minimizes the weighted
    residual sum(w_i * r_i^2).
    """
    w = np.asarray(w, dtype=float)
    m = len(system.design)
    if w.shape != (m,):
        raise ValueError(f"w must have shape ({m},)")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError("weights must be strictly positive and finite")
    if not np.all(system.row_weights == 1.0):
        raise ValueError("system rows were already scaled; assemble a fresh system")
    root = np.sqrt(w)
    return CollocationSystem(
        design=root[:, None] * system.design,
        rhs=root * system.rhs,
        row_weights=w,
        n_interior=system.n_interior,
        n_boundary=system.n_boundary,
        theta=system.theta,
    )
