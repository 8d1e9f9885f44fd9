"""Point sets, transforms, and mesh metrics on the box Omega = (-1, 1)^d.

Everything in this module is specific to the closed unit box [-1, 1]^d in
dimensions 1 to 3: tensor grids, componentwise coordinate transforms that fix
the boundary, boundary extraction, brute-force fill/separation metrics, the
closest-point projection onto the box boundary, and a seeded scattered-cloud
generator with locally boosted density.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import math

import numpy as np
from scipy.spatial import cKDTree

from .validation import as_point_array, check_positive

__all__ = [
    "PointSet",
    "MeshMetrics",
    "tensor_grid",
    "apply_transform",
    "resolve_transform",
    "boundary_subset",
    "fill_distance",
    "separation_distance",
    "mesh_metrics",
    "oversample_counts",
    "closest_point_square",
    "scattered_cloud_near_line",
]

# Coordinates are accepted up to this slack beyond [-1, 1]; points closer than
# this to each other are considered duplicates.
BOX_TOL = 1e-12

TransformLike = Literal["identity", "sine", "signed-square"] | Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PointSet:
    """An ordered set of distinct points in the closed box [-1, 1]^d.

    Parameters
    ----------
    points : ndarray of shape (n, d)
        Coordinates, d in {1, 2, 3}.
    kind : {"mixed", "boundary"}
        "boundary" asserts every point lies on the box boundary (max-norm 1
        within tolerance); "mixed" allows interior and boundary points.
    """

    points: np.ndarray
    kind: Literal["mixed", "boundary"] = "mixed"

    def __post_init__(self):
        pts = as_point_array(self.points, name="points")
        object.__setattr__(self, "points", pts)
        if self.kind not in ("mixed", "boundary"):
            raise ValueError(f"kind must be 'mixed' or 'boundary', got {self.kind!r}")
        if np.any(np.abs(pts) > 1.0 + BOX_TOL):
            raise ValueError("points fall outside the closed box [-1, 1]^d")
        if self.kind == "boundary":
            if np.any(np.abs(np.max(np.abs(pts), axis=1) - 1.0) > BOX_TOL):
                raise ValueError("boundary point set contains interior points")
        if len(pts) >= 2:
            d_min, _ = cKDTree(pts).query(pts, k=2)
            if d_min[:, 1].min() < BOX_TOL:
                raise ValueError("point set contains duplicate points (within 1e-12)")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class MeshMetrics:
    """Fill distance, separation distance, and their ratio for a point set."""

    fill_h: float
    separation_q: float
    mesh_ratio_rho: float = field(init=False)

    def __post_init__(self):
        if self.fill_h <= 0 or self.separation_q <= 0:
            raise ValueError("fill and separation distances must be positive")
        object.__setattr__(self, "mesh_ratio_rho", self.fill_h / self.separation_q)


def tensor_grid(n_per_axis: int, dim: int) -> PointSet:
    """Regular tensor grid of n_per_axis^dim points on [-1, 1]^dim.

    Points are ordered lexicographically by coordinate tuple (the first axis
    varies slowest). Endpoints are included, so grid lines land exactly on the
    boundary.
    """
    n = int(n_per_axis)
    if n < 2:
        raise ValueError(f"n_per_axis must be at least 2, got {n}")
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2, or 3, got {dim}")
    axis = np.linspace(-1.0, 1.0, n)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return PointSet(pts, kind="mixed")


def resolve_transform(transform: TransformLike) -> tuple[str, Callable[[np.ndarray], np.ndarray]]:
    """Resolve a transform name or callable to (name, vectorized map).

    Built-in maps act componentwise and fix {-1, 0, 1}:

    - "identity": p -> p
    - "sine": p -> sin(pi*p/2)
    - "signed-square": p -> sign(p)*p^2
    """
    if callable(transform):
        return getattr(transform, "__name__", "custom"), transform
    if transform == "identity":
        return "identity", lambda p: p
    if transform == "sine":
        return "sine", lambda p: np.sin(0.5 * np.pi * p)
    if transform == "signed-square":
        return "signed-square", lambda p: np.sign(p) * p * p
    raise ValueError(
        f"transform must be 'identity', 'sine', 'signed-square', or a callable, got {transform!r}"
    )


def apply_transform(transform: TransformLike, pset: PointSet) -> PointSet:
    """Apply a componentwise coordinate transform to a point set.

    The transform must map [-1, 1] into itself; outputs are clipped against
    floating-point overshoot and validated like any point set.
    """
    _, fn = resolve_transform(transform)
    out = np.asarray(fn(pset.points), dtype=float)
    if out.shape != pset.points.shape:
        raise ValueError("transform changed the shape of the point array")
    if np.any(np.abs(out) > 1.0 + BOX_TOL):
        raise ValueError("transform produced coordinates outside [-1, 1]")
    out = np.clip(out, -1.0, 1.0)
    return PointSet(out, kind=pset.kind)


def boundary_subset(pset: PointSet) -> tuple[PointSet, PointSet]:
    """Split a point set into (all points, boundary points).

    The first element is the full set unchanged (collocation sets keep their
    boundary nodes); the second contains the points with max-norm 1 within
    tolerance, in the original order, marked kind="boundary".
    """
    mask = np.abs(np.max(np.abs(pset.points), axis=1) - 1.0) <= BOX_TOL
    if not np.any(mask):
        raise ValueError("point set has no boundary points")
    return pset, PointSet(pset.points[mask], kind="boundary")


def _default_probe_n(dim: int) -> int:
    return 512 if dim <= 2 else 64


def _interior_probe(probe_n: int, dim: int) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, probe_n)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _boundary_probe(probe_n: int, dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    axis = np.linspace(-1.0, 1.0, probe_n)
    faces = []
    for ax in range(dim):
        others = [axis] * (dim - 1)
        mesh = np.meshgrid(*others, indexing="ij")
        flat = [m.ravel() for m in mesh]
        for side in (-1.0, 1.0):
            face = np.empty((len(flat[0]), dim))
            face[:, ax] = side
            k = 0
            for j in range(dim):
                if j != ax:
                    face[:, j] = flat[k]
                    k += 1
            faces.append(face)
    return np.vstack(faces)


def fill_distance(pset: PointSet, probe_n: int | None = None) -> float:
    """Brute-force fill distance sup_x min_j ||x - p_j|| over the box.

    The supremum is approximated by maximizing over a probe_n-per-axis tensor
    grid (over the box boundary instead when the set is boundary-only), so the
    result is a lower estimate accurate to the probe spacing. Defaults to 512
    probes per axis for d <= 2 and 64 for d = 3.
    """
    n = _default_probe_n(pset.dim) if probe_n is None else int(probe_n)
    if n < 2:
        raise ValueError("probe_n must be at least 2")
    if pset.kind == "boundary":
        probe = _boundary_probe(n, pset.dim)
    else:
        probe = _interior_probe(n, pset.dim)
    dist, _ = cKDTree(pset.points).query(probe, workers=-1)
    return float(dist.max())


def separation_distance(pset: PointSet) -> float:
    """Half the minimal pairwise distance. Errors on singleton sets."""
    if len(pset) < 2:
        raise ValueError("separation distance is undefined for fewer than 2 points")
    d_min, _ = cKDTree(pset.points).query(pset.points, k=2, workers=-1)
    return float(d_min[:, 1].min()) / 2.0


def mesh_metrics(pset: PointSet, probe_n: int | None = None) -> MeshMetrics:
    """Fill distance, separation distance, and mesh ratio in one report."""
    return MeshMetrics(
        fill_h=fill_distance(pset, probe_n=probe_n),
        separation_q=separation_distance(pset),
    )


def oversample_counts(gamma: float, n_x: int) -> int:
    """Collocation count ceil(sqrt(gamma*n_x))^2 for a trial-space size n_x.

    n_x must be a perfect square (trial centers come from tensor grids) and
    gamma >= 1; the result is again a perfect square.
    """
    gamma = float(gamma)
    if gamma < 1.0:
        raise ValueError(f"gamma must be at least 1, got {gamma}")
    n_x = int(n_x)
    root = math.isqrt(n_x)
    if root * root != n_x:
        raise ValueError(f"n_x must be a perfect square, got {n_x}")
    target = gamma * n_x
    n_axis = math.isqrt(math.ceil(target))
    if n_axis * n_axis < target:
        n_axis += 1
    return n_axis * n_axis


def closest_point_square(x) -> np.ndarray:
    """Closest point on the boundary of [-1, 1]^d, with deterministic ties.

    For points outside the closed box the projection is the coordinate clip.
    For interior points, the coordinate with maximal |x_i| is pushed to its
    nearest face; ties pick the smallest coordinate index, and a coordinate
    exactly at 0 is pushed to the +1 face.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] not in (1, 2, 3):
        raise ValueError("x must be a single point of dimension 1, 2, or 3")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite coordinates")
    if np.max(np.abs(x)) >= 1.0:
        return np.clip(x, -1.0, 1.0)
    out = x.copy()
    i = int(np.argmax(np.abs(x)))  # argmax takes the smallest index on ties
    out[i] = 1.0 if x[i] >= 0.0 else -1.0
    return out


def scattered_cloud_near_line(
    n_target: int,
    line_normal,
    width: float,
    seed: int,
    dim: int = 2,
) -> PointSet:
    """Seeded scattered cloud in the open box, denser inside a diagonal strip.

    Half of the points are drawn from the strip {x : |n.x| <= width/2} around
    the line {x : n.x = 0} through the origin (n = normalized line_normal) and
    half from its complement, subject to a minimum spacing of
    0.4/sqrt(n_target); the strip is much smaller than its complement, so its
    point density, and hence its fill resolution, is strictly finer.

    Parameters
    ----------
    n_target : int
        Number of points to generate.
    line_normal : array-like of shape (dim,)
        Normal of the line (hyperplane) through the origin.
    width : float
        Full width of the densified strip.
    seed : int
        Seed for the deterministic generator.
    dim : int
        Spatial dimension, default 2.

    Returns
    -------
    PointSet
        Exactly n_target points, all strictly inside the open box.
    """
    n_target = int(n_target)
    if n_target < 1:
        raise ValueError("n_target must be positive")
    check_positive(width, "width")
    normal = np.asarray(line_normal, dtype=float)
    if normal.shape != (dim,):
        raise ValueError(f"line_normal must have shape ({dim},)")
    norm = np.linalg.norm(normal)
    if norm == 0.0:
        raise ValueError("line_normal must be nonzero")
    normal = normal / norm

    rng = np.random.default_rng(seed)
    min_sep = 0.4 / math.sqrt(n_target)
    margin = min(1e-9 + min_sep / 4.0, 0.01)
    half_width = width / 2.0

    # Cell hash at resolution min_sep keeps the spacing check O(1) per draw.
    inv = 1.0 / min_sep
    grid: dict[tuple[int, ...], list[np.ndarray]] = {}

    def admissible(p: np.ndarray) -> bool:
        key = tuple(int(math.floor(c * inv)) for c in p)
        for off in np.ndindex(*([3] * dim)):
            nb = tuple(k + o - 1 for k, o in zip(key, off))
            for q in grid.get(nb, ()):
                if np.linalg.norm(p - q) < min_sep:
                    return False
        return True

    accepted = np.empty((n_target, dim))
    count = 0
    tries = 0
    max_tries = 200 * n_target
    while count < n_target:
        if tries >= max_tries:
            raise ValueError(
                f"scattered cloud generation stalled after {max_tries} draws; "
                "reduce n_target or widen the strip"
            )
        tries += 1
        want_strip = count % 2 == 0
        p = rng.uniform(-1.0 + margin, 1.0 - margin, size=dim)
        if (abs(float(normal @ p)) <= half_width) != want_strip:
            continue
        if not admissible(p):
            continue
        accepted[count] = p
        key = tuple(int(math.floor(c * inv)) for c in p)
        grid.setdefault(key, []).append(p)
        count += 1
    return PointSet(accepted, kind="mixed")
