"""Matern kernels of integer smoothness and their second-order jets.

The kernel of order tau on R^d is

    Phi(x, y) = c_nu * g_nu(eps*r),   r = ||x - y||,  nu = tau - d/2,

with the radial profile g_mu(s) = s^mu * K_mu(s) (K_mu the modified Bessel
function of the second kind) and c_nu = 1 / (2^(nu-1) * Gamma(nu)) chosen so
that Phi(x, x) = 1. The shape parameter eps rescales distances only; the
normalization keeps the diagonal at 1 for every eps.

Closed-form first and second derivatives follow from the identity
g_mu'(s) = -s * g_(mu-1)(s):

    grad_x Phi = psi1(r) * (x - y),            psi1(r) = -c_nu eps^2 g_(nu-1)(eps r)
    hess_x Phi = psi1(r) I + q2(r) (x-y)(x-y)^T, q2(r) = c_nu eps^4 g_(nu-2)(eps r)

so second-order elliptic operators apply to the kernel without numerical
differentiation. nu >= 2 is required for the hessian profile to stay
integrable at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import kv

from .validation import as_point_array

__all__ = [
    "MaternSpec",
    "KernelJet",
    "bessel_k",
    "radial_profile",
    "matern_eval",
    "matern_matrix",
    "matern_jet",
    "jet_matrices",
    "apply_elliptic",
    "elliptic_matrix",
]

# Below this scaled distance the profile is replaced by its limit value; above
# the upper cutoff the kernel and all derivatives underflow to exactly 0.
_TINY_S = 1e-8
_HUGE_S = 705.0


@dataclass(frozen=True)
class MaternSpec:
    """Kernel order tau, spatial dimension, and shape parameter.

    nu = tau - dim/2 must be at least 2 so the kernel has two classical
    derivatives; tau in {4, 5, 6} are the primary targets.
    """

    tau: int
    dim: int
    eps: float = 5.0

    def __post_init__(self):
        if int(self.tau) != self.tau:
            raise ValueError(f"tau must be an integer, got {self.tau}")
        object.__setattr__(self, "tau", int(self.tau))
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2, or 3, got {self.dim}")
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be positive, got {self.eps}")
        object.__setattr__(self, "eps", float(self.eps))
        if self.nu < 2.0:
            raise ValueError(
                f"tau - dim/2 must be at least 2 for a twice-differentiable kernel, "
                f"got nu={self.nu}"
            )

    @property
    def nu(self) -> float:
        return self.tau - self.dim / 2.0

    @property
    def norm_c(self) -> float:
        return 1.0 / (2.0 ** (self.nu - 1.0) * math.gamma(self.nu))


def bessel_k(mu: float, s):
    """Modified Bessel function of the second kind K_mu(s).

    mu must be a nonnegative integer or half-integer; s must be strictly
    positive (scalar or array).
    """
    mu = float(mu)
    if mu < 0 or abs(2.0 * mu - round(2.0 * mu)) > 1e-12:
        raise ValueError(f"mu must be a nonnegative integer or half-integer, got {mu}")
    arr = np.asarray(s, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError("s must be strictly positive and finite")
    out = kv(mu, arr)
    return float(out) if np.isscalar(s) else out


def radial_profile(mu: float, s):
    """Radial profile g_mu(s) = s^mu * K_mu(s) for s >= 0.

    Continuously extended to g_mu(0) = 2^(mu-1) * Gamma(mu) for mu > 0 (the
    limit does not exist for mu = 0, where s must stay positive), and cut off
    to exactly 0 beyond s = 705 where the Bessel factor underflows.
    """
    mu = float(mu)
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("s must be nonnegative")
    out = np.zeros_like(arr)
    if mu > 0:
        tiny = arr < _TINY_S
        out[tiny] = 2.0 ** (mu - 1.0) * math.gamma(mu)
        mid = ~tiny & (arr <= _HUGE_S)
    else:
        if np.any(arr == 0.0):
            raise ValueError("g_0 has no finite limit at s = 0")
        mid = arr <= _HUGE_S
    sm = arr[mid]
    out[mid] = sm**mu * kv(mu, sm)
    return float(out) if np.isscalar(s) else out


def _profiles(spec: MaternSpec, r: np.ndarray):
    """(phi, psi1, q2) evaluated at distances r, with exact coincident values.

    q2 is forced to 0 where r = 0: the dyadic hessian term it multiplies
    vanishes there identically, and for nu = 2 its profile alone diverges.
    """
    s = spec.eps * r
    zero = r == 0.0
    c = spec.norm_c
    phi = c * radial_profile(spec.nu, s)
    phi[zero] = 1.0
    psi1 = -c * spec.eps**2 * radial_profile(spec.nu - 1.0, s)
    mu2 = spec.nu - 2.0
    q2 = np.zeros_like(s)
    nz = ~zero
    if mu2 > 0:
        q2[nz] = c * spec.eps**4 * radial_profile(mu2, s[nz])
    else:
        inside = nz & (s <= _HUGE_S)
        q2[inside] = c * spec.eps**4 * kv(0.0, s[inside])
    return phi, psi1, q2


def matern_eval(spec: MaternSpec, x, y) -> float:
    """Kernel value Phi(x, y); exactly 1 at coincident points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = float(np.linalg.norm(x - y))
    if r == 0.0:
        return 1.0
    return spec.norm_c * float(radial_profile(spec.nu, spec.eps * r))


def matern_matrix(spec: MaternSpec, P, X) -> np.ndarray:
    """Kernel matrix Phi(p_i, x_j) of shape (len(P), len(X))."""
    P = as_point_array(P, name="P")
    X = as_point_array(X, dim=P.shape[1], name="X")
    r = cdist(P, X)
    s = spec.eps * r
    out = np.zeros_like(r)
    mid = (s >= _TINY_S) & (s <= _HUGE_S)
    out[mid] = spec.norm_c * s[mid] ** spec.nu * kv(spec.nu, s[mid])
    near = s < _TINY_S
    out[near] = 1.0  # g_nu(s)/g_nu(0) -> 1; pins the unit diagonal exactly
    return out


@dataclass(frozen=True)
class KernelJet:
    """Value, gradient, and hessian of Phi(., y) at a point x."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def matern_jet(spec: MaternSpec, x, y) -> KernelJet:
    """Second-order jet of the kernel in its first argument.

    At coincident points the gradient vanishes and the hessian equals
    -eps^2 / (2*(nu-1)) times the identity.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise ValueError(f"x and y must be points of dimension {spec.dim}")
    u = x - y
    r = np.array([float(np.linalg.norm(u))])
    phi, psi1, q2 = _profiles(spec, r)
    grad = psi1[0] * u
    hess = psi1[0] * np.eye(spec.dim) + q2[0] * np.outer(u, u)
    return KernelJet(value=float(phi[0]), gradient=grad, hessian=hess)


def jet_matrices(spec: MaternSpec, P, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized jets of Phi(p_i, x_j) in the first argument.

    Returns (value, gradient, hessian) arrays of shapes (m, n), (m, n, d),
    and (m, n, d, d).
    """
    P = as_point_array(P, dim=spec.dim, name="P")
    X = as_point_array(X, dim=spec.dim, name="X")
    diff = P[:, None, :] - X[None, :, :]
    r = np.sqrt(np.einsum("mnd,mnd->mn", diff, diff))
    phi, psi1, q2 = _profiles(spec, r)
    grad = psi1[..., None] * diff
    eye = np.eye(spec.dim)
    hess = psi1[..., None, None] * eye + q2[..., None, None] * (
        diff[..., :, None] * diff[..., None, :]
    )
    return phi, grad, hess


def apply_elliptic(spec: MaternSpec, op, x, y) -> float:
    """Apply a second-order elliptic operator to the kernel's first argument.

    The operator convention is L u = sum_ij a_ij d2u/dxi dxj - b . grad u - c u
    with coefficient callbacks a(x) -> (d, d), b(x) -> (d,), c(x) -> scalar
    evaluated at the application point x.
    """
    jet = matern_jet(spec, x, y)
    x = np.asarray(x, dtype=float)
    a = np.asarray(op.a(x), dtype=float)
    b = np.asarray(op.b(x), dtype=float)
    c = float(op.c(x))
    return float(np.sum(a * jet.hessian) - b @ jet.gradient - c * jet.value)


def elliptic_matrix(spec: MaternSpec, op, P, X, row_block: int = 256) -> np.ndarray:
    """Matrix [L Phi](p_i, x_j) with the operator applied in the first slot.

    Rows are processed in blocks to bound memory; coefficient callbacks are
    evaluated once per row point.
    """
    P = as_point_array(P, dim=spec.dim, name="P")
    X = as_point_array(X, dim=spec.dim, name="X")
    m, n = len(P), len(X)
    out = np.empty((m, n))
    for lo in range(0, m, row_block):
        hi = min(lo + row_block, m)
        block = P[lo:hi]
        diff = block[:, None, :] - X[None, :, :]
        r = np.sqrt(np.einsum("mnd,mnd->mn", diff, diff))
        phi, psi1, q2 = _profiles(spec, r)
        for i in range(hi - lo):
            p = block[i]
            a = np.asarray(op.a(p), dtype=float)
            b = np.asarray(op.b(p), dtype=float)
            c = float(op.c(p))
            u = diff[i]
            u_a_u = np.einsum("nd,de,ne->n", u, a, u)
            out[lo + i] = psi1[i] * (np.trace(a) - u @ b) + q2[i] * u_a_u - c * phi[i]
    return out
