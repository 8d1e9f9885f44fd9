"""Sweep driver, rate fitting, FD reference, CSV emission, and the CLI."""

import numpy as np
import pytest

from kolloc import (
    ConvergenceRecord,
    FDReference,
    RunConfig,
    fd_reference_pde4,
    fit_rate,
    oversample_counts,
    relative_l2,
    run_convergence,
    tensor_grid,
)
from kolloc.cli import main
from kolloc.experiments import (
    RATES_HEADER,
    RECORDS_HEADER,
    _solve_divergence_fd,
    emit_outputs,
    fit_rates,
    rates_to_csv,
    records_to_csv,
)


# ---------------------------------------------------------------------------
# error and rate fitting


def test_relative_l2_examples():
    assert relative_l2([1.0, 2.0], [1.0, 0.0]) == 2.0
    assert relative_l2([1.0, 1.0], [1.0, 1.0]) == 0.0
    with pytest.raises(ValueError):
        relative_l2([1.0], [0.0])


def test_fit_rate_recovers_exact_power_law():
    h = np.array([0.4, 0.2, 0.1, 0.05])
    errors = 3.7 * h**2
    fit = fit_rate(h, errors)
    np.testing.assert_allclose(fit.slope, 2.0, rtol=1e-12)
    np.testing.assert_allclose(fit.intercept, np.log(3.7), rtol=1e-10)
    np.testing.assert_allclose(fit.r_squared, 1.0, atol=1e-12)
    assert fit.points_used == 4


def test_fit_rate_needs_two_points():
    with pytest.raises(ValueError):
        fit_rate([0.1], [1e-3])


# ---------------------------------------------------------------------------
# finite-difference reference engine


def test_fd_exact_for_separable_quadratic():
    # constant coefficient, u* = (1-x^2)(1-y^2): the conservative 5-point
    # scheme has no truncation term, so the solve is exact to roundoff
    def kappa(pts):
        return -np.ones(len(pts))

    def source(pts):
        p = np.asarray(pts)
        return 2.0 * (1 - p[:, 0] ** 2) + 2.0 * (1 - p[:, 1] ** 2)

    axis, values = _solve_divergence_fd(kappa, source, 65)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    exact = (1 - xx**2) * (1 - yy**2)
    assert np.max(np.abs(values - exact)) <= 1e-9


def test_fd_second_order_convergence():
    # non-polynomial manufactured solution exposes the genuine O(h^2) error
    def kappa(pts):
        return -np.ones(len(pts))

    def source(pts):
        p = np.asarray(pts)
        return 2.0 * np.pi**2 * np.sin(np.pi * p[:, 0]) * np.sin(np.pi * p[:, 1])

    errors = {}
    for n in (33, 65):
        axis, values = _solve_divergence_fd(kappa, source, n)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        exact = np.sin(np.pi * xx) * np.sin(np.pi * yy)
        errors[n] = np.max(np.abs(values - exact))
    ratio = errors[33] / errors[65]
    assert 3.2 <= ratio <= 4.8  # halving h cuts the error by about 4


def test_fd_reference_interpolation_is_bilinear_exact():
    axis = np.linspace(-1.0, 1.0, 9)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    ref = FDReference(axis, 1.0 + 2.0 * xx - yy + 3.0 * xx * yy)
    pts = np.random.default_rng(3).uniform(-1, 1, size=(50, 2))
    expected = 1.0 + 2.0 * pts[:, 0] - pts[:, 1] + 3.0 * pts[:, 0] * pts[:, 1]
    np.testing.assert_allclose(ref(pts), expected, rtol=1e-12)


def test_fd_reference_self_convergence():
    coarse = fd_reference_pde4(65)
    fine = fd_reference_pde4(129)
    pts = tensor_grid(86, 2).points
    drift = relative_l2(coarse(pts), fine(pts))
    assert 0 < drift < 0.05


def test_fd_reference_save_load_roundtrip(tmp_path):
    ref = fd_reference_pde4(33)
    path = tmp_path / "ref.npz"
    ref.save(path)
    loaded = FDReference.load(path)
    pts = np.random.default_rng(1).uniform(-1, 1, size=(20, 2))
    np.testing.assert_array_equal(loaded(pts), ref(pts))


# ---------------------------------------------------------------------------
# run_convergence


def _tiny_config(**overrides):
    base = dict(
        pde=1,
        method="wls-id",
        tau_list=(4,),
        gamma_list=(3.0,),
        nx_axis_list=(5, 7),
        eval_grid_n=33,
        seed=11,
    )
    base.update(overrides)
    return RunConfig(**base)


def test_run_convergence_record_consistency():
    records = run_convergence(_tiny_config())
    assert len(records) == 2
    for rec, n_x in zip(records, (5, 7)):
        assert rec.method == "wls-id" and rec.pde == 1 and rec.tau == 4
        assert rec.N_X == n_x**2
        assert rec.N_Y == oversample_counts(3.0, rec.N_X)
        n_axis = int(round(np.sqrt(rec.N_Y)))
        assert rec.N_Z == 4 * n_axis - 4
        assert rec.rel_l2 >= 0 and rec.h_X > 0 and rec.wall_ms > 0
        assert not rec.truncated and rec.kappa_W == 1.0
        assert rec.cond_logged is None
    assert records[1].rel_l2 < records[0].rel_l2


def test_run_convergence_reproducible_up_to_timing():
    from dataclasses import replace

    a = run_convergence(_tiny_config())
    b = run_convergence(_tiny_config())
    for ra, rb in zip(a, b):
        assert replace(ra, wall_ms=0.0) == replace(rb, wall_ms=0.0)


def test_run_convergence_defaults_match_benchmark_setup():
    cfg = RunConfig(pde=1, method="all")
    assert cfg.eps == 5.0
    assert cfg.eval_grid_n == 86
    assert cfg.tau_list == (4, 5, 6)
    assert cfg.gamma_list == (1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)
    assert cfg.nx_axis_list == (9, 13, 17, 21, 25, 33, 41)
    assert cfg.fd_reference_n == 513


# ---------------------------------------------------------------------------
# CSV emission


def test_records_csv_format_and_roundtrip():
    records = run_convergence(_tiny_config())
    text = records_to_csv(records)
    lines = text.strip().splitlines()
    assert lines[0] == RECORDS_HEADER
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "wls-id" and first[1] == "1"
    assert first[10] == ""  # cond not logged
    assert first[12] == "false"
    # %.17g survives a float roundtrip exactly
    assert float(first[9]) == records[0].rel_l2


def test_rates_csv_format():
    records = run_convergence(_tiny_config(nx_axis_list=(5, 7, 9)))
    rates = fit_rates(records)
    text = rates_to_csv(rates)
    lines = text.strip().splitlines()
    assert lines[0] == RATES_HEADER
    assert len(lines) == 2
    row = lines[1].split(",")
    assert row[:4] == ["1", "wls-id", "4", "3"]
    assert int(row[7]) == 3


def test_emit_outputs_writes_files(tmp_path):
    records = run_convergence(_tiny_config(nx_axis_list=(5, 7, 9)))
    emit_outputs(records, fit_rates(records), tmp_path)
    assert (tmp_path / "records.csv").exists()
    assert (tmp_path / "rates.csv").exists()
    assert (tmp_path / "convergence.png").exists()


def test_rate_floor_excludes_roundoff_records():
    clean = ConvergenceRecord(
        method="wls-id", pde=1, tau=4, eps=5.0, gamma=3.0, N_X=25, N_Y=81, N_Z=32,
        h_X=0.2, rel_l2=1e-3, cond_logged=None, kappa_W=1.0, truncated=False,
        seed=0, wall_ms=1.0,
    )
    floored = ConvergenceRecord(
        method="wls-id", pde=1, tau=4, eps=5.0, gamma=3.0, N_X=49, N_Y=169, N_Z=48,
        h_X=0.1, rel_l2=1e-13, cond_logged=None, kappa_W=1.0, truncated=False,
        seed=0, wall_ms=1.0,
    )
    third = ConvergenceRecord(
        method="wls-id", pde=1, tau=4, eps=5.0, gamma=3.0, N_X=81, N_Y=256, N_Z=60,
        h_X=0.05, rel_l2=1e-4, cond_logged=None, kappa_W=1.0, truncated=False,
        seed=0, wall_ms=1.0,
    )
    rates = fit_rates([clean, floored, third])
    assert rates[0][-1].points_used == 2


# ---------------------------------------------------------------------------
# CLI


def test_cli_converge_writes_outputs(tmp_path, capsys):
    out = tmp_path / "sweep"
    code = main(
        [
            "converge", "--pde", "1", "--method", "wls-id", "--tau", "4",
            "--gamma", "3", "--nx", "5,7", "--seed", "2", "--out", str(out),
        ]
    )
    assert code == 0
    assert (out / "records.csv").exists() and (out / "rates.csv").exists()
    assert "completed 2 solves" in capsys.readouterr().out


def test_cli_gamma_colon_range(tmp_path):
    out = tmp_path / "sweep"
    code = main(
        [
            "converge", "--pde", "1", "--method", "wls-id", "--tau", "4",
            "--gamma", "2:1:4", "--nx", "5", "--out", str(out),
        ]
    )
    assert code == 0
    rows = (out / "records.csv").read_text().strip().splitlines()[1:]
    gammas = [float(r.split(",")[4]) for r in rows]
    assert gammas == [2.0, 3.0, 4.0]


def test_cli_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "pde = 1\nmethod = wls-id\ntau = 4\ngamma = 3\nnx = 5,7\nseed = 9\n"
        f"out = {tmp_path / 'from_config'}\n"
    )
    code = main(["converge", "--config", str(cfg), "--nx", "5"])
    assert code == 0
    rows = (tmp_path / "from_config" / "records.csv").read_text().strip().splitlines()
    assert len(rows) == 2  # header + the single overridden resolution


def test_cli_solve_dumps_solution(tmp_path, capsys):
    dump = tmp_path / "sol.csv"
    code = main(
        ["solve", "--pde", "1", "--method", "wls-id", "--tau", "4", "--nx", "7",
         "--gamma", "3", "--dump-solution", str(dump)]
    )
    assert code == 0
    assert "rel_l2=" in capsys.readouterr().out
    lines = dump.read_text().strip().splitlines()
    assert lines[0] == "x,y,u"
    assert len(lines) == 1 + 86 * 86


def test_cli_reference_roundtrip(tmp_path, capsys):
    path = tmp_path / "ref.npz"
    assert main(["reference", "--pde", "4", "--n", "33", "--out", str(path)]) == 0
    assert path.exists()
    out = tmp_path / "conv4"
    code = main(
        ["converge", "--pde", "4", "--method", "wls-id", "--tau", "5",
         "--gamma", "3", "--nx", "5", "--reference", str(path), "--out", str(out)]
    )
    assert code == 0
    capsys.readouterr()


def test_cli_reference_rejects_other_benchmarks(tmp_path, capsys):
    code = main(["reference", "--pde", "1", "--out", str(tmp_path / "x.npz")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_cli_stability_selection_checks(tmp_path, capsys):
    out = tmp_path / "stab"
    code = main(["stability", "--check", "lemma1", "--tau", "4", "--h", "0.2",
                 "--out", str(out)])
    assert code == 0
    assert (out / "lemma1.csv").exists()
    code = main(["stability", "--check", "lemma2", "--tau", "4", "--h", "0.2"])
    assert code == 0
    text = capsys.readouterr().out
    assert "holds=True" in text


def test_cli_stability_rayleigh_single_point(capsys):
    assert main(["stability", "--check", "rayleigh", "--tau", "4", "--nx", "5"]) == 0
    assert "lambda_min=" in capsys.readouterr().out


def test_cli_unknown_benchmark_fails_cleanly(capsys):
    code = main(["converge", "--pde", "9", "--method", "wls-id", "--tau", "4",
                 "--gamma", "3", "--nx", "5"])
    assert code == 1
    assert "error:" in capsys.readouterr().err
