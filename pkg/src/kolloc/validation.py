"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = ["as_point_array", "check_choice", "check_positive"]


def as_point_array(points, dim: int | None = None, name: str = "points") -> np.ndarray:
    """Coerce to a float array of shape (n, d) and validate it.

    Parameters
    ----------
    points : array-like
        Point coordinates. A single point of shape (d,) is promoted to (1, d).
    dim : int, optional
        Required spatial dimension. When omitted, any d in {1, 2, 3} passes.
    name : str
        Argument name used in error messages.

    Returns
    -------
    ndarray of shape (n, d)
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of shape (n, d), got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    d = arr.shape[1]
    if dim is not None and d != dim:
        raise ValueError(f"{name} must have dimension {dim}, got {d}")
    if dim is None and d not in (1, 2, 3):
        raise ValueError(f"{name} must have dimension 1, 2, or 3, got {d}")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value


def check_choice(value: str, options: tuple[str, ...], name: str) -> str:
    if value not in options:
        raise ValueError(f"{name} must be one of {options}, got {value!r}")
    return value
