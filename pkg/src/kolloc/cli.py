"""Command-line driver: convergence sweeps, stability checks, single solves.

Subcommands
-----------
converge
    Sweep (method, tau, gamma, n_x) on one benchmark and emit records.csv,
    rates.csv and a convergence plot.
stability
    Run one of the empirical checks: the interior and boundary Riemann
    selections (lemma1, lemma2), the norm-equivalence constants (equiv), or
    the Rayleigh stability constant sweep (rayleigh).
solve
    Fit a single configuration and dump the solution on the evaluation grid.
reference
    Compute and store the finite-difference reference for benchmark 4.

Every flag may instead be given in a flat ``key = value`` config file passed
with --config; explicit flags win over the file. List-valued options accept
comma syntax ("9,13,17") and, for gamma, colon ranges ("1:0.5:4"). Exit
status is 0 on success and 1 with a stderr diagnostic when a run fails or a
checked invariant does not hold.
"""

from __future__ import annotations

import argparse
import math
import pathlib
import sys

import numpy as np

from .assembly import build_weights, theta_default
from .estimator import METHODS, CollocationSolver
from .experiments import (
    FDReference,
    RunConfig,
    fd_reference_pde4,
    fit_rate,
    relative_l2,
    run_convergence,
)
from .geometry import PointSet, boundary_subset, fill_distance, tensor_grid
from .kernels import MaternSpec, elliptic_matrix, matern_matrix
from .pde import make_problem
from .stability import (
    boundary_riemann_points,
    check_bound,
    fine_quadrature,
    lower_riemann_points,
    norm_equiv_constants,
    stability_rayleigh,
)

__all__ = ["main"]

_FMT = "%.17g"

#: Kernel centers for the default test functions of the selection checks.
_CHECK_CENTERS = ((0.3, -0.2), (-0.55, 0.7), (0.1, 0.45))


def _parse_int(text: str) -> int:
    return int(text)


def _parse_float(text: str) -> float:
    return float(text)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text: str) -> tuple:
    return tuple(int(p) for p in text.split(",") if p.strip())


def _parse_float_list(text: str) -> tuple:
    """Comma list ("1,1.5,2") or inclusive colon range ("1:0.5:4")."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range syntax is start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("range step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(max(count, 0)))
    return tuple(float(p) for p in text.split(",") if p.strip())


def _parse_pair(text: str) -> tuple:
    parts = [float(p) for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated reals, got {text!r}")
    return tuple(parts)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    out = {}
    for raw in pathlib.Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line is not key = value: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().lower().replace("-", "_")] = value.strip()
    return out


class _Options:
    """String-level option resolution: flag beats config beats default."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = args
        self._config = config

    def get(self, key, parse, default=None, required=False):
        value = getattr(self._args, key, None)
        if value is None:
            value = self._config.get(key)
        if value is None:
            if required:
                raise ValueError(f"missing required option --{key.replace('_', '-')}")
            return default
        return parse(value) if isinstance(value, str) else value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kolloc",
        description="Meshfree kernel collocation: convergence and stability studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("converge", help="run a convergence sweep")
    conv.add_argument("--config")
    conv.add_argument("--pde")
    conv.add_argument("--method")
    conv.add_argument("--tau")
    conv.add_argument("--gamma")
    conv.add_argument("--nx")
    conv.add_argument("--eps")
    conv.add_argument("--seed")
    conv.add_argument("--out")
    conv.add_argument("--log-cond", dest="log_cond")
    conv.add_argument("--center")
    conv.add_argument("--reference", help="path to a stored FD reference (.npz)")

    stab = sub.add_parser("stability", help="run an empirical stability check")
    stab.add_argument("--config")
    stab.add_argument("--check")
    stab.add_argument("--tau")
    stab.add_argument("--nx")
    stab.add_argument("--eps")
    stab.add_argument("--C", dest="c_scale")
    stab.add_argument("--h", dest="h_scale")
    stab.add_argument("--out")

    solve = sub.add_parser("solve", help="fit one configuration and dump the solution")
    solve.add_argument("--config")
    solve.add_argument("--pde")
    solve.add_argument("--method")
    solve.add_argument("--tau")
    solve.add_argument("--nx")
    solve.add_argument("--gamma")
    solve.add_argument("--eps")
    solve.add_argument("--seed")
    solve.add_argument("--dump-solution", dest="dump_solution")

    ref = sub.add_parser("reference", help="compute the FD reference for benchmark 4")
    ref.add_argument("--config")
    ref.add_argument("--pde")
    ref.add_argument("--n")
    ref.add_argument("--out")
    return parser


def _cmd_converge(opts: _Options) -> int:
    pde = opts.get("pde", _parse_int, required=True)
    cfg = RunConfig(
        pde=pde,
        method=opts.get("method", str, default="all"),
        tau_list=opts.get("tau", _parse_int_list, default=(4, 5, 6)),
        eps=opts.get("eps", _parse_float, default=5.0),
        gamma_list=opts.get("gamma", _parse_float_list, default=(1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)),
        nx_axis_list=opts.get("nx", _parse_int_list, default=(9, 13, 17, 21, 25, 33, 41)),
        seed=opts.get("seed", _parse_int, default=0),
        output_dir=opts.get("out", str),
        log_cond=opts.get("log_cond", _parse_bool, default=False),
        pde3_center=opts.get("center", _parse_pair, default=(0.0, 0.0)),
    )
    ref_path = opts.get("reference", str)
    reference = FDReference.load(ref_path) if ref_path is not None else None
    records = run_convergence(cfg, reference=reference)
    failures = [r for r in records if r.note]
    for rec in records:
        status = "FAILED " + rec.note if rec.note else _FMT % rec.rel_l2
        print(
            f"{rec.method} pde{rec.pde} tau={rec.tau} gamma={rec.gamma:g} "
            f"NX={rec.N_X} rel_l2={status}"
        )
    if failures:
        print(f"{len(failures)} of {len(records)} solves failed", file=sys.stderr)
        return 1
    print(f"completed {len(records)} solves")
    return 0


def _write_csv(path: pathlib.Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _fmt_cell(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return _FMT % x
    return str(x)


def _interior_oracle(v, n_axis: int = 1001) -> float:
    """Composite trapezoid value of the box integral of v**2."""
    axis = np.linspace(-1.0, 1.0, n_axis)
    w1 = np.full(n_axis, axis[1] - axis[0])
    w1[0] *= 0.5
    w1[-1] *= 0.5
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    vals = np.asarray(v(pts), dtype=float) ** 2
    return float(vals @ np.outer(w1, w1).ravel())


def _boundary_oracle(v, n_axis: int = 100001) -> float:
    """Composite trapezoid value of the boundary line integral of v**2."""
    axis = np.linspace(-1.0, 1.0, n_axis)
    w1 = np.full(n_axis, axis[1] - axis[0])
    w1[0] *= 0.5
    w1[-1] *= 0.5
    total = 0.0
    for ax in range(2):
        for sign in (-1.0, 1.0):
            pts = np.empty((n_axis, 2))
            pts[:, ax] = sign
            pts[:, 1 - ax] = axis
            total += float((np.asarray(v(pts), dtype=float) ** 2) @ w1)
    return total


def _selection_check_rows(check, spec, op, C, h):
    rows = []
    ok = True
    for center in _CHECK_CENTERS:
        x0 = np.asarray([center])
        if check == "lemma1":
            def v(pts, x0=x0):
                return elliptic_matrix(spec, op, pts, x0, row_block=65536).ravel()

            sel = lower_riemann_points(v, C, h)
            oracle = _interior_oracle(v)
        else:
            def v(pts, x0=x0):
                return matern_matrix(spec, pts, x0).ravel()

            sel = boundary_riemann_points(v, C, h)
            oracle = _boundary_oracle(v)
        rep = check_bound(sel, oracle)
        lo, hi = C * h / 2.0, C * h
        bracket_ok = lo <= sel.fill_h_P <= hi
        # The fill bracket is an interior guarantee; boundary selections sit
        # below it by construction, so only the sum bounds gate lemma2.
        ok = ok and (bracket_ok or check == "lemma2") and rep.delta_holds
        rows.append(
            [
                _fmt_cell(float(center[0])),
                _fmt_cell(float(center[1])),
                _fmt_cell(float(C)),
                _fmt_cell(float(h)),
                _fmt_cell(sel.cell_edge_delta),
                _fmt_cell(sel.fill_h_P),
                _fmt_cell(lo),
                _fmt_cell(hi),
                _fmt_cell(bracket_ok),
                _fmt_cell(rep.lhs),
                _fmt_cell(rep.delta_lhs),
                _fmt_cell(rep.rhs),
                _fmt_cell(rep.holds),
                _fmt_cell(rep.delta_holds),
                _fmt_cell(rep.flagged),
                _fmt_cell(rep.margin if math.isfinite(rep.margin) else float("inf")),
            ]
        )
        print(
            f"{check} center={center} fill={sel.fill_h_P:.5g} "
            f"bracket=[{lo:.5g},{hi:.5g}] lhs={rep.lhs:.6g} rhs={rep.rhs:.6g} "
            f"holds={rep.holds} flagged={rep.flagged}"
        )
    return rows, ok


_SELECTION_HEADER = (
    "center_x,center_y,C,h,delta,fill_h_P,bracket_lo,bracket_hi,bracket_ok,"
    "lhs,delta_lhs,rhs,holds,delta_holds,flagged,margin"
)


def _cmd_stability(opts: _Options) -> int:
    check = opts.get("check", str, required=True)
    tau = opts.get("tau", _parse_int, default=4)
    eps = opts.get("eps", _parse_float, default=5.0)
    out = opts.get("out", str)
    out_dir = pathlib.Path(out) if out is not None else None
    spec = MaternSpec(tau, 2, eps)
    op = make_problem("pde1").op

    if check in ("lemma1", "lemma2"):
        C = opts.get("c_scale", _parse_float, default=1.0)
        h = opts.get("h_scale", _parse_float, default=0.1)
        rows, ok = _selection_check_rows(check, spec, op, C, h)
        if out_dir is not None:
            _write_csv(out_dir / f"{check}.csv", _SELECTION_HEADER, rows)
        if not ok:
            print(f"{check}: bound or bracket violated", file=sys.stderr)
            return 1
        return 0

    if check == "equiv":
        n_x = opts.get("nx", _parse_int, default=9)
        rows = []
        spreads = []
        for n_y_axis in (4 * n_x, 8 * n_x):
            X = tensor_grid(n_x, 2)
            grid = tensor_grid(n_y_axis, 2)
            _, bd = boundary_subset(grid)
            w = build_weights("trapezoid", grid, bd, "identity")
            theta = theta_default(fill_distance(X))
            fine = fine_quadrature(4 * n_y_axis, 2)
            rep = norm_equiv_constants(
                spec, op, X, grid, bd, w, theta, fine, scheme="trapezoid"
            )
            spreads.append(rep.spread)
            rows.append(
                [
                    _fmt_cell(n_x),
                    _fmt_cell(n_y_axis),
                    _fmt_cell(fine.n_axis),
                    _fmt_cell(rep.c_low),
                    _fmt_cell(rep.c_high),
                    _fmt_cell(rep.spread),
                    _fmt_cell(rep.h_X),
                    _fmt_cell(rep.N_Y),
                    rep.scheme,
                ]
            )
            print(
                f"equiv n_y_axis={n_y_axis} c_low={rep.c_low:.6g} "
                f"c_high={rep.c_high:.6g} spread={rep.spread:.6g}"
            )
        if out_dir is not None:
            _write_csv(
                out_dir / "equiv.csv",
                "n_x,n_y_axis,fine_axis,c_low,c_high,spread,h_X,N_Y,scheme",
                rows,
            )
        if spreads[0] > 16.0:
            print(f"equiv: spread {spreads[0]:.4g} exceeds 16", file=sys.stderr)
            return 1
        if abs(spreads[1] - spreads[0]) > 0.1 * spreads[0]:
            print(
                f"equiv: spread changed by more than 10% under refinement "
                f"({spreads[0]:.4g} -> {spreads[1]:.4g})",
                file=sys.stderr,
            )
            return 1
        return 0

    if check == "rayleigh":
        nx_list = opts.get("nx", _parse_int_list, default=(7, 9, 13))
        rows = []
        hs = []
        lams = []
        for n_x in nx_list:
            X = tensor_grid(n_x, 2)
            h_x = fill_distance(X)
            theta = theta_default(h_x)
            fine = fine_quadrature(8 * n_x + 1, 2)
            lam = stability_rayleigh(spec, op, X, theta, fine)
            hs.append(h_x)
            lams.append(lam)
            rows.append(
                [
                    _fmt_cell(n_x),
                    _fmt_cell(len(X)),
                    _fmt_cell(h_x),
                    _fmt_cell(theta),
                    _fmt_cell(lam),
                ]
            )
            print(f"rayleigh n_x={n_x} h={h_x:.5g} lambda_min={lam:.6g}")
        if out_dir is not None:
            _write_csv(out_dir / "rayleigh.csv", "n_x,N_X,h_X,theta,lambda_min", rows)
        if len(nx_list) < 2:
            # A single resolution cannot support a rate fit; gate positivity.
            if lams[0] <= 0.0:
                print(f"rayleigh: lambda_min {lams[0]:.4g} not positive", file=sys.stderr)
                return 1
            return 0
        fit = fit_rate(hs, lams)
        print(f"rayleigh slope={fit.slope:.4g} (gate: >= -1.0)")
        if fit.slope < -1.0:
            print(f"rayleigh: slope {fit.slope:.4g} below -1.0", file=sys.stderr)
            return 1
        return 0

    raise ValueError(f"unknown stability check {check!r}")


def _cmd_solve(opts: _Options) -> int:
    pde = opts.get("pde", _parse_int, required=True)
    method = opts.get("method", str, default="wls-id")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    tau = opts.get("tau", _parse_int, default=4)
    n_x = opts.get("nx", _parse_int, default=17)
    gamma = opts.get("gamma", _parse_float, default=3.0)
    eps = opts.get("eps", _parse_float, default=5.0)
    seed = opts.get("seed", _parse_int, default=0)
    dump = opts.get("dump_solution", str)

    prob = make_problem(f"pde{pde}")
    est = CollocationSolver(
        problem=prob, tau=tau, eps=eps, method=method, gamma=gamma, seed=seed
    )
    est.fit(tensor_grid(n_x, prob.dim).points)
    eval_pts = tensor_grid(86, prob.dim).points
    u_h = est.predict(eval_pts)
    print(
        f"pde{pde} {method} tau={tau} nx={n_x} gamma={gamma:g}: "
        f"rows={est.system_shape_[0]} cols={est.system_shape_[1]} "
        f"theta={est.theta_:.5g} truncated={est.result_.truncated}"
    )
    if prob.exact is not None:
        err = relative_l2(u_h, prob.exact.u(eval_pts))
        print(f"rel_l2={err:.6g}")
    if dump is not None:
        path = pathlib.Path(dump)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = ["x,y,u"]
        for p, val in zip(eval_pts, u_h):
            lines.append(f"{_FMT % p[0]},{_FMT % p[1]},{_FMT % val}")
        path.write_text("\n".join(lines) + "\n")
        print(f"solution written to {path}")
    return 0


def _cmd_reference(opts: _Options) -> int:
    pde = opts.get("pde", _parse_int, default=4)
    if pde != 4:
        raise ValueError("only benchmark 4 has a finite-difference reference")
    n = opts.get("n", _parse_int, default=257)
    out = opts.get("out", str, required=True)
    ref = fd_reference_pde4(n)
    path = pathlib.Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    ref.save(path)
    print(f"reference (n={n}) written to {path}")
    return 0


_COMMANDS = {
    "converge": _cmd_converge,
    "stability": _cmd_stability,
    "solve": _cmd_solve,
    "reference": _cmd_reference,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(getattr(args, "config", None))
        opts = _Options(args, config)
        return _COMMANDS[args.command](opts)
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
