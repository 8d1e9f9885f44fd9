"""Scikit-learn style estimator wrapping the collocation pipeline."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator

from .assembly import assemble_system, build_weights, theta_default, weight_and_scale
from .geometry import (
    PointSet,
    apply_transform,
    boundary_subset,
    fill_distance,
    resolve_transform,
    tensor_grid,
)
from .kernels import MaternSpec, matern_matrix
from .pde import EllipticProblem, make_problem
from .solver import solve_lstsq
from .validation import as_point_array, check_choice

__all__ = ["CollocationSolver", "METHODS"]

#: Supported assembly methods: variational least squares with trapezoid
#: quadrature weights, and weighted least squares with identity or seeded
#: random row weights.
METHODS = ("vls-tp", "wls-id", "wls-rd")

_METHOD_SCHEMES = {"vls-tp": "trapezoid", "wls-id": "identity", "wls-rd": "random"}


def _ceil_sqrt(value: float) -> int:
    n = math.isqrt(math.ceil(value))
    if n * n < value:
        n += 1
    return n


class CollocationSolver(BaseEstimator):
    """Kernel collocation solver for elliptic Dirichlet problems on the box.

    Fitting places a Matern trial space on the given centers, generates an
    oversampled collocation grid (optionally transformed toward steep solution
    features), assembles the interior/boundary least-squares system, applies
    the method's row weights, and solves by rank-revealing QR. Prediction
    evaluates the fitted kernel expansion.

    Parameters
    ----------
    problem : str or EllipticProblem
        One of the built-in problem names ("pde1" ... "pde4") or a problem
        instance.
    tau : int
        Kernel smoothness order; the expected L2 convergence rate.
    eps : float
        Kernel shape parameter.
    method : {"vls-tp", "wls-id", "wls-rd"}
        Row-weight scheme (trapezoid quadrature, identity, seeded random).
    gamma : float
        Oversampling factor; the collocation grid has
        ceil(sqrt(gamma * n_centers))^2 points before boundary extraction.
    transform : str, callable, or None
        Componentwise grid transform; None picks the problem's default.
    theta : float or None
        Boundary row scaling; None uses h^(-3/2) with h the fill distance of
        the trial centers.
    seed : int
        Seed for the random weight scheme.
    fill_probe_n : int
        Per-axis resolution of the brute-force fill-distance probe.

    Attributes
    ----------
    coef_ : ndarray of shape (n_centers,)
        Kernel expansion coefficients.
    h_x_ : float
        Measured fill distance of the trial centers.
    theta_ : float
        Boundary scaling actually used.
    result_ : LstsqResult
        Solver diagnostics (residual norm, rank, truncation flag).
    design_ : ndarray of shape (n_rows, n_centers)
        Row-scaled design matrix sqrt(W) A, kept for conditioning studies.
    kappa_w_ : float
        Condition number max(w)/min(w) of the row-weight matrix.
    stationarity_ : float
        ||A^T W r|| / ||A^T W rhs|| of the fitted system; near zero at a
        weighted least-squares minimizer.

    Examples
    --------
    >>> from kolloc import CollocationSolver, tensor_grid
    >>> est = CollocationSolver(problem="pde1", tau=4, gamma=3.0)
    >>> X = tensor_grid(9, 2).points
    >>> values = est.fit(X).predict([[0.1, -0.2]])
    """

    def __init__(
        self,
        problem="pde1",
        tau: int = 4,
        eps: float = 5.0,
        method: str = "wls-id",
        gamma: float = 3.0,
        transform=None,
        theta: float | None = None,
        seed: int = 0,
        fill_probe_n: int = 512,
    ):
        self.problem = problem
        self.tau = tau
        self.eps = eps
        self.method = method
        self.gamma = gamma
        self.transform = transform
        self.theta = theta
        self.seed = seed
        self.fill_probe_n = fill_probe_n

    def _resolve_problem(self) -> EllipticProblem:
        if isinstance(self.problem, EllipticProblem):
            return self.problem
        return make_problem(self.problem)

    def fit(self, X, y=None, extra_interior=None):
        """Fit the kernel expansion on trial centers X.

        Parameters
        ----------
        X : array-like of shape (n_centers, d)
            Trial centers inside the closed box.
        y : ignored
            Present for estimator-API compatibility.
        extra_interior : array-like of shape (m, d), optional
            Additional interior collocation points appended to the generated
            grid (for scattered clouds). Incompatible with "vls-tp".

        Returns
        -------
        self
        """
        check_choice(self.method, METHODS, "method")
        prob = self._resolve_problem()
        X = as_point_array(X, dim=prob.dim, name="X")
        x_set = PointSet(X, kind="mixed")
        spec = MaternSpec(self.tau, prob.dim, self.eps)
        transform = self.transform if self.transform is not None else prob.default_transform
        transform_name, _ = resolve_transform(transform)
        if float(self.gamma) < 1.0:
            raise ValueError(f"gamma must be at least 1, got {self.gamma}")

        n_axis = _ceil_sqrt(float(self.gamma) * len(x_set))
        pre_grid = tensor_grid(n_axis, prob.dim)
        _, pre_bd = boundary_subset(pre_grid)
        y_full = apply_transform(transform, pre_grid)
        _, z_set = boundary_subset(y_full)

        extra = None
        if extra_interior is not None:
            extra = as_point_array(extra_interior, dim=prob.dim, name="extra_interior")
            y_set = PointSet(np.vstack([y_full.points, extra]), kind="mixed")
        else:
            y_set = y_full

        h_x = fill_distance(x_set, probe_n=self.fill_probe_n)
        theta = float(self.theta) if self.theta is not None else theta_default(h_x)

        w = build_weights(
            _METHOD_SCHEMES[self.method],
            pre_grid,
            pre_bd,
            transform,
            seed=self.seed,
            n_extra_interior=0 if extra is None else len(extra),
        )
        system = assemble_system(prob, spec, x_set, y_set, z_set, theta)
        scaled = weight_and_scale(system, w)
        result = solve_lstsq(scaled.design, scaled.rhs)

        grad = scaled.design.T @ (scaled.design @ result.coeffs - scaled.rhs)
        ref = np.linalg.norm(scaled.design.T @ scaled.rhs)
        grad_norm = float(np.linalg.norm(grad))

        self.problem_ = prob
        self.spec_ = spec
        self.transform_ = transform_name
        self.x_points_ = x_set
        self.y_points_ = y_set
        self.z_points_ = z_set
        self.n_features_in_ = prob.dim
        self.h_x_ = h_x
        self.theta_ = theta
        self.system_shape_ = scaled.design.shape
        self.design_ = scaled.design
        self.result_ = result
        self.coef_ = result.coeffs
        self.kappa_w_ = float(w.max() / w.min())
        self.stationarity_ = grad_norm / ref if ref > 0 else (0.0 if grad_norm == 0 else np.inf)
        return self

    def predict(self, P) -> np.ndarray:
        """Evaluate the fitted kernel expansion at points P."""
        if not hasattr(self, "coef_"):
            raise ValueError("this CollocationSolver instance is not fitted yet")
        P = as_point_array(P, dim=self.spec_.dim, name="P")
        return matern_matrix(self.spec_, P, self.x_points_.points) @ self.coef_
