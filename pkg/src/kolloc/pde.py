"""Benchmark elliptic Dirichlet problems on the square (-1, 1)^2.

Operator convention throughout the package:

    L u = sum_ij a_ij(x) d2u/dxi dxj - b(x) . grad u - c(x) u,

so the Helmholtz-type operator Lap u - u has a = I, b = 0, c = 1, and the
divergence-form operator div(kappa grad u) with scalar kappa expands to
a = kappa I, b = -grad kappa, c = 0.

Four problems are built in:

- "pde1": Lap u - u = f with u* = sech(pi(x-1/2)) + sech(pi(y-3/4));
  steep ridges, paired with the sine grid transform.
- "pde2": div(kappa grad u) = f, kappa = -arctan(100(x+y)) - 3pi/4 (strictly
  negative with a sharp interior transition), u* = (1-x^2) cos(pi y / 2);
  paired with the signed-square transform.
- "pde3": Lap u - u = f with a Gaussian bump u* = exp(-10 ||x - x0||^2);
  center configurable, signed-square transform.
- "pde4": div(kappa grad u) = 1 with homogeneous boundary data and no closed
  form; solutions are compared against a finite-difference reference.

Sources f and boundary data g are supplied in closed form from the analytic
jets; `manufactured_source` recomputes f generically from the operator and
the exact jet as an independent route.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .validation import as_point_array

__all__ = [
    "EllipticOperator",
    "ExactSolution",
    "EllipticProblem",
    "make_problem",
    "manufactured_source",
]

PROBLEM_NAMES = ("pde1", "pde2", "pde3", "pde4")


@dataclass(frozen=True)
class EllipticOperator:
    """Coefficient callbacks of a second-order elliptic operator.

    a(x) -> (d, d) symmetric matrix, b(x) -> (d,), c(x) -> scalar, each
    evaluated at a single point. Callbacks must be cheap; assembly calls them
    once per collocation point.
    """

    a: Callable[[np.ndarray], np.ndarray]
    b: Callable[[np.ndarray], np.ndarray]
    c: Callable[[np.ndarray], float]


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form solution with vectorized value/gradient/hessian callbacks.

    Each callback takes an (n, d) array and returns (n,), (n, d), and
    (n, d, d) arrays respectively.
    """

    u: Callable[[np.ndarray], np.ndarray]
    grad_u: Callable[[np.ndarray], np.ndarray]
    hess_u: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EllipticProblem:
    """A Dirichlet problem L u = f in Omega, u = g on the boundary."""

    name: str
    dim: int
    op: EllipticOperator
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    exact: ExactSolution | None
    default_transform: str


def _sech(t):
    return 1.0 / np.cosh(t)


def _helmholtz_operator() -> EllipticOperator:
    eye = np.eye(2)
    zero = np.zeros(2)
    return EllipticOperator(a=lambda x: eye, b=lambda x: zero, c=lambda x: 1.0)


def _make_pde1() -> EllipticProblem:
    def parts(pts):
        t1 = np.pi * (pts[:, 0] - 0.5)
        t2 = np.pi * (pts[:, 1] - 0.75)
        return _sech(t1), np.tanh(t1), _sech(t2), np.tanh(t2)

    def u(pts):
        pts = as_point_array(pts, dim=2)
        s1, _, s2, _ = parts(pts)
        return s1 + s2

    def grad_u(pts):
        pts = as_point_array(pts, dim=2)
        s1, th1, s2, th2 = parts(pts)
        g = np.empty_like(pts)
        g[:, 0] = -np.pi * s1 * th1
        g[:, 1] = -np.pi * s2 * th2
        return g

    def hess_u(pts):
        pts = as_point_array(pts, dim=2)
        s1, th1, s2, th2 = parts(pts)
        h = np.zeros((len(pts), 2, 2))
        h[:, 0, 0] = np.pi**2 * s1 * (th1**2 - s1**2)
        h[:, 1, 1] = np.pi**2 * s2 * (th2**2 - s2**2)
        return h

    def f(pts):
        pts = as_point_array(pts, dim=2)
        s1, th1, s2, th2 = parts(pts)
        lap = np.pi**2 * (s1 * (th1**2 - s1**2) + s2 * (th2**2 - s2**2))
        return lap - (s1 + s2)

    return EllipticProblem(
        name="pde1",
        dim=2,
        op=_helmholtz_operator(),
        f=f,
        g=u,
        exact=ExactSolution(u=u, grad_u=grad_u, hess_u=hess_u),
        default_transform="sine",
    )


def _diffusion_kappa(pts):
    return -np.arctan(100.0 * (pts[:, 0] + pts[:, 1])) - 0.75 * np.pi


def _diffusion_grad_kappa(pts):
    dk = -100.0 / (1.0 + (100.0 * (pts[:, 0] + pts[:, 1])) ** 2)
    return np.stack([dk, dk], axis=1)


def _divergence_form_operator() -> EllipticOperator:
    eye = np.eye(2)

    def a(x):
        return float(_diffusion_kappa(x[None, :])[0]) * eye

    def b(x):
        return -_diffusion_grad_kappa(x[None, :])[0]

    return EllipticOperator(a=a, b=b, c=lambda x: 0.0)


def _pde2_solution_parts(pts):
    x, y = pts[:, 0], pts[:, 1]
    cosy = np.cos(0.5 * np.pi * y)
    siny = np.sin(0.5 * np.pi * y)
    return x, y, cosy, siny


def _make_pde2() -> EllipticProblem:
    def u(pts):
        pts = as_point_array(pts, dim=2)
        x, _, cosy, _ = _pde2_solution_parts(pts)
        return (1.0 - x**2) * cosy

    def grad_u(pts):
        pts = as_point_array(pts, dim=2)
        x, _, cosy, siny = _pde2_solution_parts(pts)
        g = np.empty_like(pts)
        g[:, 0] = -2.0 * x * cosy
        g[:, 1] = -0.5 * np.pi * (1.0 - x**2) * siny
        return g

    def hess_u(pts):
        pts = as_point_array(pts, dim=2)
        x, _, cosy, siny = _pde2_solution_parts(pts)
        h = np.empty((len(pts), 2, 2))
        h[:, 0, 0] = -2.0 * cosy
        h[:, 0, 1] = h[:, 1, 0] = np.pi * x * siny
        h[:, 1, 1] = -0.25 * np.pi**2 * (1.0 - x**2) * cosy
        return h

    def f(pts):
        pts = as_point_array(pts, dim=2)
        kappa = _diffusion_kappa(pts)
        gk = _diffusion_grad_kappa(pts)
        h = hess_u(pts)
        g = grad_u(pts)
        return kappa * (h[:, 0, 0] + h[:, 1, 1]) + np.einsum("nd,nd->n", gk, g)

    return EllipticProblem(
        name="pde2",
        dim=2,
        op=_divergence_form_operator(),
        f=f,
        g=u,
        exact=ExactSolution(u=u, grad_u=grad_u, hess_u=hess_u),
        default_transform="signed-square",
    )


def _make_pde3(center) -> EllipticProblem:
    center = np.asarray(center, dtype=float)
    if center.shape != (2,) or np.any(np.abs(center) > 1.0):
        raise ValueError("pde3 center must be a point inside [-1, 1]^2")

    def u(pts):
        pts = as_point_array(pts, dim=2)
        d = pts - center
        return np.exp(-10.0 * np.einsum("nd,nd->n", d, d))

    def grad_u(pts):
        pts = as_point_array(pts, dim=2)
        d = pts - center
        return -20.0 * d * u(pts)[:, None]

    def hess_u(pts):
        pts = as_point_array(pts, dim=2)
        d = pts - center
        val = u(pts)
        dyad = d[:, :, None] * d[:, None, :]
        return (400.0 * dyad - 20.0 * np.eye(2)) * val[:, None, None]

    def f(pts):
        pts = as_point_array(pts, dim=2)
        d = pts - center
        r2 = np.einsum("nd,nd->n", d, d)
        return (400.0 * r2 - 41.0) * u(pts)

    return EllipticProblem(
        name="pde3",
        dim=2,
        op=_helmholtz_operator(),
        f=f,
        g=u,
        exact=ExactSolution(u=u, grad_u=grad_u, hess_u=hess_u),
        default_transform="signed-square",
    )


def _make_pde4() -> EllipticProblem:
    def f(pts):
        pts = as_point_array(pts, dim=2)
        return np.ones(len(pts))

    def g(pts):
        pts = as_point_array(pts, dim=2)
        return np.zeros(len(pts))

    return EllipticProblem(
        name="pde4",
        dim=2,
        op=_divergence_form_operator(),
        f=f,
        g=g,
        exact=None,
        default_transform="identity",
    )


def make_problem(name: str, center=(0.0, 0.0)) -> EllipticProblem:
    """Build one of the benchmark problems by name.

    Parameters
    ----------
    name : {"pde1", "pde2", "pde3", "pde4"}
    center : pair of floats
        Bump center for "pde3"; ignored by the other problems.
    """
    if name == "pde1":
        return _make_pde1()
    if name == "pde2":
        return _make_pde2()
    if name == "pde3":
        return _make_pde3(center)
    if name == "pde4":
        return _make_pde4()
    raise ValueError(f"unknown problem {name!r}; expected one of {PROBLEM_NAMES}")


def manufactured_source(prob: EllipticProblem, pts) -> np.ndarray:
    """Apply the problem's operator to its exact solution, pointwise.

    Independent of the problem's own closed-form f; used to cross-check it.
    Errors when the problem has no exact solution.
    """
    if prob.exact is None:
        raise ValueError(f"problem {prob.name!r} has no exact solution")
    pts = as_point_array(pts, dim=prob.dim)
    val = prob.exact.u(pts)
    grad = prob.exact.grad_u(pts)
    hess = prob.exact.hess_u(pts)
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        a = np.asarray(prob.op.a(p), dtype=float)
        b = np.asarray(prob.op.b(p), dtype=float)
        c = float(prob.op.c(p))
        out[i] = np.sum(a * hess[i]) - b @ grad[i] - c * val[i]
    return out
