"""Convergence sweeps, rate fits, CSV emission, and the FD reference engine.

A sweep fits one CollocationSolver per (method, tau, gamma, n_x) combination,
measures the relative L2 error on a fixed evaluation grid, and collects the
results into records that serialize to a stable CSV layout. Rate fits are
log-log least squares per (pde, method, tau, gamma) group, excluding
truncated solves and errors at rounding level.

The homogeneous diffusion benchmark has no closed-form solution; its errors
are measured against a sparse finite-difference reference computed once per
sweep on a fine grid and evaluated by bilinear interpolation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from .estimator import METHODS, CollocationSolver
from .geometry import scattered_cloud_near_line, tensor_grid
from .pde import _diffusion_kappa, make_problem
from .solver import cond2

__all__ = [
    "RunConfig",
    "ConvergenceRecord",
    "RateFit",
    "FDReference",
    "relative_l2",
    "fit_rate",
    "run_convergence",
    "fit_rates",
    "fd_reference_pde4",
    "emit_outputs",
    "RECORDS_HEADER",
    "RATES_HEADER",
]

RECORDS_HEADER = "method,pde,tau,eps,gamma,NX,NY,NZ,hX,rel_l2,cond,kappaW,truncated,seed,wall_ms"
RATES_HEADER = "pde,method,tau,gamma,slope,intercept,r_squared,points_used"

#: Errors below this are rounding noise and are excluded from rate fits.
RATE_FLOOR = 1e-11


@dataclass(frozen=True)
class RunConfig:
    """Sweep definition for one benchmark problem.

    Parameters
    ----------
    pde : int
        Benchmark id, 1 through 4.
    method : str
        One of the solver methods, or "all" to sweep every method.
    tau_list, gamma_list, nx_axis_list : sequences
        Smoothness orders, oversampling factors, and trial grid resolutions
        to sweep (n_x is the per-axis count; the trial set has n_x^2 centers).
    eps : float
        Kernel shape parameter.
    transform : str, callable, or None
        Grid transform for trial and collocation nodes; None picks the
        benchmark default.
    eval_grid_n : int
        Per-axis size of the fixed error-evaluation grid.
    seed : int
        Master seed; per-record seeds derive from it together with the sweep
        coordinates, so shrinking a list does not reshuffle the others.
    output_dir : str or None
        When set, records.csv, rates.csv and a convergence plot are written
        there.
    log_cond : bool
        Record the 2-norm condition number of each scaled design matrix
        (full SVD per solve; noticeably slower).
    fill_probe_n : int
        Probe resolution handed to the fill-distance estimate.
    pde3_center : tuple of float
        Bump center of benchmark 3.
    cloud_n, cloud_width : int, float
        Size and strip width of the scattered interior cloud appended to the
        collocation set of benchmark 4.
    fd_reference_n : int
        Per-axis grid size of the finite-difference reference for
        benchmark 4.
    """

    pde: int
    method: str
    tau_list: tuple = (4, 5, 6)
    eps: float = 5.0
    gamma_list: tuple = (1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
    nx_axis_list: tuple = (9, 13, 17, 21, 25, 33, 41)
    transform: object = None
    eval_grid_n: int = 86
    seed: int = 0
    output_dir: str | None = None
    log_cond: bool = False
    fill_probe_n: int = 512
    pde3_center: tuple = (0.0, 0.0)
    cloud_n: int = 7338
    cloud_width: float = 0.2
    fd_reference_n: int = 513


@dataclass(frozen=True)
class ConvergenceRecord:
    """One solve of a sweep: sizes, error, diagnostics, timing."""

    method: str
    pde: int
    tau: int
    eps: float
    gamma: float
    N_X: int
    N_Y: int
    N_Z: int
    h_X: float
    rel_l2: float
    cond_logged: float | None
    kappa_W: float
    truncated: bool
    seed: int
    wall_ms: float
    note: str = field(default="", compare=False)


@dataclass(frozen=True)
class RateFit:
    """Log-log least-squares fit of error against fill distance."""

    slope: float
    intercept: float
    r_squared: float
    points_used: int


def relative_l2(approx, exact) -> float:
    """Relative Euclidean error ||approx - exact|| / ||exact||."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    if approx.shape != exact.shape:
        raise ValueError(f"shape mismatch {approx.shape} vs {exact.shape}")
    ref = float(np.linalg.norm(exact))
    if ref == 0.0:
        raise ValueError("reference vector has zero norm")
    return float(np.linalg.norm(approx - exact)) / ref


def fit_rate(h_values, errors) -> RateFit:
    """Fit log(error) = slope*log(h) + intercept by least squares.

    Requires at least two points with positive h and error.
    """
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.shape != e.shape or h.ndim != 1:
        raise ValueError("h_values and errors must be 1-d of equal length")
    if len(h) < 2:
        raise ValueError("need at least two points to fit a rate")
    if np.any(h <= 0.0) or np.any(e <= 0.0):
        raise ValueError("h values and errors must be positive")
    x = np.log(h)
    y = np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r_squared = 1.0 - ss_res / ss_tot
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(r_squared),
        points_used=len(h),
    )


class FDReference:
    """Finite-difference reference solution, bilinear evaluation.

    Parameters
    ----------
    axis : ndarray of shape (n,)
        Grid nodes shared by both axes.
    values : ndarray of shape (n, n)
        Solution values, indexed [i, j] for x = axis[i], y = axis[j].
    """

    def __init__(self, axis, values):
        self.axis = np.asarray(axis, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.axis), len(self.axis)):
            raise ValueError("values must be square over the axis nodes")
        self._interp = RegularGridInterpolator(
            (self.axis, self.axis), self.values, method="linear"
        )

    def __call__(self, pts) -> np.ndarray:
        return self._interp(np.asarray(pts, dtype=float))

    def save(self, path) -> None:
        """Store axis and values as a .npz archive."""
        np.savez(path, axis=self.axis, values=self.values)

    @classmethod
    def load(cls, path) -> "FDReference":
        with np.load(path) as data:
            return cls(data["axis"], data["values"])


def _solve_divergence_fd(kappa_fn, f_fn, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Solve div(kappa grad u) = f, u = 0 on the boundary, on an n x n grid.

    Five-point conservative scheme with arithmetic-mean face coefficients.
    Returns (axis, values) with values[i, j] at (axis[i], axis[j]).
    """
    if n < 5:
        raise ValueError("n must be at least 5")
    axis = np.linspace(-1.0, 1.0, n)
    step = axis[1] - axis[0]
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    nodes = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    kap = np.asarray(kappa_fn(nodes), dtype=float).reshape(n, n)
    rhs_full = np.asarray(f_fn(nodes), dtype=float).reshape(n, n)

    m = n - 2
    # face coefficients between interior node (i, j) and its four neighbors,
    # arithmetic means of the nodal kappa (interior indices 1..n-2)
    I = np.arange(1, n - 1)
    kE = 0.5 * (kap[I][:, I] + kap[I + 1][:, I])
    kW = 0.5 * (kap[I][:, I] + kap[I - 1][:, I])
    kN = 0.5 * (kap[I][:, I] + kap[I][:, I + 1])
    kS = 0.5 * (kap[I][:, I] + kap[I][:, I - 1])

    diag = -(kE + kW + kN + kS).ravel() / step**2
    offE = (kE / step**2).ravel()
    offW = (kW / step**2).ravel()
    offN = (kN / step**2).ravel()
    offS = (kS / step**2).ravel()

    # east/west couple rows i +- 1 (offset m in row-major (i, j) order),
    # north/south couple columns j +- 1 (offset 1, masked at row seams)
    in_row = np.ones(m * m, dtype=bool)
    in_row[m - 1 :: m] = False  # no north neighbor for j = m-1
    in_row_s = np.ones(m * m, dtype=bool)
    in_row_s[0::m] = False  # no south neighbor for j = 0

    A = sparse.diags(
        [diag, offE[: m * (m - 1)], offW[m:], np.where(in_row, offN, 0.0)[:-1],
         np.where(in_row_s, offS, 0.0)[1:]],
        offsets=[0, m, -m, 1, -1],
        format="csc",
    )
    b = rhs_full[1:-1, 1:-1].ravel().copy()
    # homogeneous Dirichlet data: boundary terms vanish, nothing to move

    u_int = spsolve(A, b)
    resid = np.linalg.norm(A @ u_int - b)
    ref = np.linalg.norm(b)
    if ref > 0 and resid / ref > 1e-10:
        raise RuntimeError(f"FD solve residual {resid / ref:.3e} exceeds 1e-10")

    values = np.zeros((n, n))
    values[1:-1, 1:-1] = u_int.reshape(m, m)
    return axis, values


def fd_reference_pde4(n: int = 513) -> FDReference:
    """Reference solution of the homogeneous diffusion benchmark."""
    prob = make_problem("pde4")
    axis, values = _solve_divergence_fd(_diffusion_kappa, prob.f, n)
    return FDReference(axis, values)


def _record_seed(master: int, tau: int, gamma: float, n_x: int) -> int:
    seq = np.random.SeedSequence([int(master), int(tau), int(round(gamma * 1000)), int(n_x)])
    return int(seq.generate_state(1)[0])


def _failure_record(method, cfg, tau, gamma, n_x, seed, exc) -> ConvergenceRecord:
    return ConvergenceRecord(
        method=method,
        pde=cfg.pde,
        tau=tau,
        eps=cfg.eps,
        gamma=gamma,
        N_X=n_x * n_x,
        N_Y=0,
        N_Z=0,
        h_X=float("nan"),
        rel_l2=float("nan"),
        cond_logged=None,
        kappa_W=float("nan"),
        truncated=False,
        seed=seed,
        wall_ms=0.0,
        note=f"{type(exc).__name__}: {exc}",
    )


def run_convergence(cfg: RunConfig, reference: FDReference | None = None):
    """Run the sweep defined by cfg and return its records.

    Parameters
    ----------
    cfg : RunConfig
    reference : FDReference, optional
        Reference solution for benchmark 4; computed on demand when omitted.

    Returns
    -------
    list of ConvergenceRecord
        One per (method, tau, gamma, n_x), in sweep order. Failed solves
        yield records with NaN error and the exception text in note. When
        cfg.output_dir is set the CSV files and plot are written as a side
        effect.
    """
    if cfg.pde not in (1, 2, 3, 4):
        raise ValueError(f"unknown benchmark id {cfg.pde}")
    methods = list(METHODS) if cfg.method == "all" else [cfg.method]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")

    prob = make_problem(f"pde{cfg.pde}", center=tuple(cfg.pde3_center))
    eval_pts = tensor_grid(cfg.eval_grid_n, prob.dim).points
    if prob.exact is not None:
        u_ref = prob.exact.u(eval_pts)
        cloud = None
    else:
        if reference is None:
            reference = fd_reference_pde4(cfg.fd_reference_n)
        u_ref = reference(eval_pts)
        cloud = scattered_cloud_near_line(
            cfg.cloud_n, (1.0, -1.0), cfg.cloud_width, seed=cfg.seed
        )

    records = []
    for method in methods:
        for tau in cfg.tau_list:
            for gamma in cfg.gamma_list:
                for n_x in cfg.nx_axis_list:
                    seed = _record_seed(cfg.seed, tau, gamma, n_x)
                    try:
                        records.append(
                            _run_one(
                                cfg, prob, method, tau, gamma, n_x, seed,
                                eval_pts, u_ref, cloud,
                            )
                        )
                    except Exception as exc:  # noqa: BLE001 - sweep must survive
                        records.append(
                            _failure_record(method, cfg, tau, gamma, n_x, seed, exc)
                        )

    if cfg.output_dir is not None:
        emit_outputs(records, fit_rates(records), cfg.output_dir)
    return records


def _run_one(cfg, prob, method, tau, gamma, n_x, seed, eval_pts, u_ref, cloud):
    est = CollocationSolver(
        problem=prob,
        tau=tau,
        eps=cfg.eps,
        method=method,
        gamma=gamma,
        transform=cfg.transform,
        seed=seed,
        fill_probe_n=cfg.fill_probe_n,
    )
    X = tensor_grid(n_x, prob.dim).points
    extra = None if cloud is None else cloud.points
    t0 = time.perf_counter()
    est.fit(X, extra_interior=extra)
    u_h = est.predict(eval_pts)
    wall_ms = (time.perf_counter() - t0) * 1e3
    cond_logged = cond2(est.design_) if cfg.log_cond else None
    return ConvergenceRecord(
        method=method,
        pde=cfg.pde,
        tau=tau,
        eps=cfg.eps,
        gamma=gamma,
        N_X=len(est.x_points_),
        N_Y=len(est.y_points_),
        N_Z=len(est.z_points_),
        h_X=est.h_x_,
        rel_l2=relative_l2(u_h, u_ref),
        cond_logged=cond_logged,
        kappa_W=est.kappa_w_,
        truncated=est.result_.truncated,
        seed=seed,
        wall_ms=wall_ms,
    )


def _usable(rec: ConvergenceRecord) -> bool:
    return (
        not rec.truncated
        and math.isfinite(rec.rel_l2)
        and rec.rel_l2 >= RATE_FLOOR
        and math.isfinite(rec.h_X)
        and rec.h_X > 0.0
    )


def fit_rates(records) -> list[tuple]:
    """Per-(pde, method, tau, gamma) rate fits over the usable records.

    Returns a list of (pde, method, tau, gamma, RateFit) tuples in first-seen
    group order; groups with fewer than two usable points are dropped.
    """
    groups: dict[tuple, list[ConvergenceRecord]] = {}
    for rec in records:
        groups.setdefault((rec.pde, rec.method, rec.tau, rec.gamma), []).append(rec)
    out = []
    for key, recs in groups.items():
        usable = [r for r in recs if _usable(r)]
        if len(usable) < 2:
            continue
        h = [r.h_X for r in usable]
        e = [r.rel_l2 for r in usable]
        out.append((*key, fit_rate(h, e)))
    return out


def _fmt(x: float) -> str:
    return "%.17g" % x


def records_to_csv(records) -> str:
    """Serialize records to the stable CSV layout (note column excluded)."""
    lines = [RECORDS_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    r.method,
                    str(r.pde),
                    str(r.tau),
                    _fmt(r.eps),
                    _fmt(r.gamma),
                    str(r.N_X),
                    str(r.N_Y),
                    str(r.N_Z),
                    _fmt(r.h_X),
                    _fmt(r.rel_l2),
                    "" if r.cond_logged is None else _fmt(r.cond_logged),
                    _fmt(r.kappa_W),
                    "true" if r.truncated else "false",
                    str(r.seed),
                    _fmt(r.wall_ms),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def rates_to_csv(rates) -> str:
    lines = [RATES_HEADER]
    for pde, method, tau, gamma, fit in rates:
        lines.append(
            ",".join(
                [
                    str(pde),
                    method,
                    str(tau),
                    _fmt(gamma),
                    _fmt(fit.slope),
                    _fmt(fit.intercept),
                    _fmt(fit.r_squared),
                    str(fit.points_used),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def emit_outputs(records, rates, output_dir) -> None:
    """Write records.csv, rates.csv, and a log-log convergence plot."""
    import pathlib

    out = pathlib.Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(records_to_csv(records))
    (out / "rates.csv").write_text(rates_to_csv(rates))
    _plot_convergence(records, out / "convergence.png")


def _plot_convergence(records, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    groups: dict[tuple, list[ConvergenceRecord]] = {}
    for rec in records:
        if _usable(rec):
            groups.setdefault((rec.method, rec.tau, rec.gamma), []).append(rec)
    if not groups:
        return
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for (method, tau, gamma), recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda r: r.h_X)
        ax.loglog(
            [r.h_X for r in recs],
            [r.rel_l2 for r in recs],
            marker="o",
            markersize=3,
            linewidth=1,
            label=f"{method} tau={tau} gamma={gamma:g}",
        )
    ax.set_xlabel("fill distance h")
    ax.set_ylabel("relative L2 error")
    ax.grid(True, which="both", alpha=0.3)
    if len(groups) <= 12:
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
