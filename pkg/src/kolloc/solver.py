"""Dense least-squares and symmetric-pencil eigenvalue routines.

Least squares goes through a rank-revealing orthogonal factorization (pivoted
QR), never through normal equations: the design matrices here have condition
numbers growing like a high negative power of the fill distance, and squaring
them would destroy the digits the experiments measure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["LstsqResult", "solve_lstsq", "cond2", "gen_eig_extremes"]

#: Relative singular-value cutoff for rank truncation.
LSTSQ_CUTOFF = 1e-14

#: Largest dimension cond2 accepts; full SVDs beyond this are not desk-scale.
COND2_MAX_DIM = 5000


@dataclass(frozen=True)
class LstsqResult:
    """Minimum-norm least-squares solution with rank diagnostics."""

    coeffs: np.ndarray
    residual_norm: float
    rank: int
    truncated: bool


def _check_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError(f"{name} must be a nonempty 2-d array")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def solve_lstsq(A, b, cutoff: float = LSTSQ_CUTOFF) -> LstsqResult:
    """Solve min ||A x - b||_2 for a tall matrix A.

    Uses a column-pivoted QR factorization with relative truncation threshold
    `cutoff`; `truncated` reports whether the numerical rank fell short of the
    column count. Deterministic for identical inputs.
    """
    A = _check_matrix(A, "A")
    m, n = A.shape
    if m < n:
        raise ValueError(f"A must have at least as many rows as columns, got {A.shape}")
    b = np.asarray(b, dtype=float)
    if b.shape != (m,):
        raise ValueError(f"b must have shape ({m},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("b contains non-finite entries")
    x, _, rank, _ = scipy.linalg.lstsq(A, b, cond=cutoff, lapack_driver="gelsy")
    residual = float(np.linalg.norm(A @ x - b))
    return LstsqResult(coeffs=x, residual_norm=residual, rank=int(rank), truncated=rank < n)


def cond2(M) -> float:
    """Spectral condition number sigma_max / sigma_min via full SVD.

    Accepts matrices up to dimension 5000; returns inf when the smallest
    singular value underflows to zero.
    """
    M = _check_matrix(M, "M")
    if max(M.shape) > COND2_MAX_DIM:
        raise ValueError(f"cond2 accepts dimensions up to {COND2_MAX_DIM}, got {M.shape}")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        raise ValueError("cond2 is undefined for the zero matrix")
    if s[-1] <= np.finfo(float).eps * s[0]:
        return float("inf")
    return float(s[0] / s[-1])


def gen_eig_extremes(G1, G2, jitter: float = 1e-12) -> tuple[float, float]:
    """Extreme eigenvalues of the symmetric pencil G1 v = lambda G2 v.

    G2 must be positive definite up to a single diagonal jitter of
    jitter * trace(G2)/n applied when its Cholesky factorization fails. The
    pencil is reduced with that Cholesky factor (L^-1 G1 L^-T) and solved with
    a symmetric eigensolver. For positive semidefinite G1 the returned minimum
    is clamped at zero against roundoff.
    """
    G1 = _check_matrix(G1, "G1")
    G2 = _check_matrix(G2, "G2")
    n = G1.shape[0]
    if G1.shape != (n, n) or G2.shape != (n, n):
        raise ValueError("G1 and G2 must be square with matching shapes")
    for M, name in ((G1, "G1"), (G2, "G2")):
        scale = np.abs(M).max()
        if scale == 0.0:
            raise ValueError(f"{name} must be nonzero")
        if np.abs(M - M.T).max() > 1e-10 * scale:
            raise ValueError(f"{name} is not symmetric within 1e-10 relative")
    G1 = 0.5 * (G1 + G1.T)
    G2 = 0.5 * (G2 + G2.T)
    try:
        L = scipy.linalg.cholesky(G2, lower=True)
    except scipy.linalg.LinAlgError:
        bump = jitter * np.trace(G2) / n
        try:
            L = scipy.linalg.cholesky(G2 + bump * np.eye(n), lower=True)
        except scipy.linalg.LinAlgError as err:
            raise ValueError("G2 is not positive definite, even after jitter") from err
    half = scipy.linalg.solve_triangular(L, G1, lower=True)
    reduced = scipy.linalg.solve_triangular(L, half.T, lower=True)
    reduced = 0.5 * (reduced + reduced.T)
    eigs = scipy.linalg.eigvalsh(reduced)
    lam_min, lam_max = float(eigs[0]), float(eigs[-1])
    if lam_min < 0.0 and abs(lam_min) <= 1e-10 * max(abs(lam_max), 1.0):
        lam_min = 0.0
    return lam_min, lam_max
