"""Dense least squares, condition numbers, and generalized eigen extremes."""

import numpy as np
import pytest

from kolloc import (
    MaternSpec,
    assemble_system,
    boundary_subset,
    build_weights,
    cond2,
    gen_eig_extremes,
    make_problem,
    solve_lstsq,
    tensor_grid,
    weight_and_scale,
)


def _normal_equation_oracle(A, b, w=None):
    """Brute-force (A^T W A)^{-1} A^T W b, the textbook normal-equation solve."""
    if w is None:
        w = np.ones(len(A))
    AtWA = A.T @ (w[:, None] * A)
    AtWb = A.T @ (w * b)
    return np.linalg.solve(AtWA, AtWb)


# ---------------------------------------------------------------------------
# solve_lstsq


def test_consistent_system_recovered_exactly():
    res = solve_lstsq(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), np.array([1.0, 2.0, 3.0]))
    np.testing.assert_allclose(res.coeffs, [1.0, 2.0], rtol=1e-14)
    assert res.residual_norm <= 1e-13
    assert res.rank == 2 and not res.truncated


def test_column_of_ones_returns_mean():
    res = solve_lstsq(np.ones((3, 1)), np.array([0.0, 1.0, 2.0]))
    np.testing.assert_allclose(res.coeffs, [1.0], rtol=1e-14)
    np.testing.assert_allclose(res.residual_norm, np.sqrt(2.0), rtol=1e-12)


def test_random_systems_match_normal_equation_oracle():
    rng = np.random.default_rng(12)
    for _ in range(100):
        A = rng.standard_normal((40, 10))
        b = rng.standard_normal(40)
        res = solve_lstsq(A, b)
        expected = _normal_equation_oracle(A, b)
        np.testing.assert_allclose(res.coeffs, expected, rtol=1e-8)
        assert not res.truncated


def test_residual_orthogonal_to_column_space():
    rng = np.random.default_rng(77)
    for _ in range(25):
        A = rng.standard_normal((30, 6))
        b = rng.standard_normal(30)
        res = solve_lstsq(A, b)
        grad = A.T @ (A @ res.coeffs - b)
        assert np.linalg.norm(grad) <= 1e-8 * np.linalg.norm(A.T) * np.linalg.norm(b)


def test_rank_deficiency_is_flagged():
    rng = np.random.default_rng(5)
    base = rng.standard_normal((20, 3))
    A = np.hstack([base, base[:, :1]])  # exact duplicate column
    res = solve_lstsq(A, rng.standard_normal(20))
    assert res.truncated and res.rank == 3


def test_solver_input_validation():
    with pytest.raises(ValueError):
        solve_lstsq(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        solve_lstsq(np.array([[1.0], [np.nan]]), np.ones(2))
    with pytest.raises(ValueError):
        solve_lstsq(np.ones((3, 1)), np.array([1.0, np.inf, 0.0]))
    with pytest.raises(ValueError):
        solve_lstsq(np.ones((3, 1)), np.ones(4))


def test_solver_deterministic_bitwise():
    rng = np.random.default_rng(9)
    A = rng.standard_normal((25, 7))
    b = rng.standard_normal(25)
    r1 = solve_lstsq(A, b)
    r2 = solve_lstsq(A.copy(), b.copy())
    np.testing.assert_array_equal(r1.coeffs, r2.coeffs)
    assert r1.residual_norm == r2.residual_norm


# ---------------------------------------------------------------------------
# cond2


def test_cond2_diagonal():
    np.testing.assert_allclose(cond2(np.diag([1.0, 10.0])), 10.0, rtol=1e-12)


def test_cond2_orthogonal_is_one():
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((8, 8)))
    np.testing.assert_allclose(cond2(Q), 1.0, rtol=1e-10)


def test_cond2_squares_under_normal_equations():
    A = np.random.default_rng(2).standard_normal((30, 6))
    np.testing.assert_allclose(cond2(A.T @ A), cond2(A) ** 2, rtol=1e-6)


def test_cond2_flags_numerical_singularity():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    assert cond2(A) == np.inf


# ---------------------------------------------------------------------------
# gen_eig_extremes


def _random_spd(n, seed):
    M = np.random.default_rng(seed).standard_normal((n, n))
    return M @ M.T + n * np.eye(n)


def test_pencil_identity_cases():
    G = _random_spd(6, 0)
    lo, hi = gen_eig_extremes(G, G)
    np.testing.assert_allclose([lo, hi], [1.0, 1.0], rtol=1e-10)
    lo2, hi2 = gen_eig_extremes(2.0 * G, G)
    np.testing.assert_allclose([lo2, hi2], [2.0, 2.0], rtol=1e-10)


def test_pencil_matches_symmetric_reduction_oracle():
    G1 = _random_spd(8, 3)
    G2 = _random_spd(8, 4)
    lo, hi = gen_eig_extremes(G1, G2)
    # explicit G2^{-1/2} G1 G2^{-1/2} reduction
    vals, vecs = np.linalg.eigh(G2)
    inv_sqrt = vecs @ np.diag(vals**-0.5) @ vecs.T
    ref = np.linalg.eigvalsh(inv_sqrt @ G1 @ inv_sqrt)
    np.testing.assert_allclose([lo, hi], [ref.min(), ref.max()], rtol=1e-8)
    assert lo >= 0


def test_pencil_rejects_indefinite_right_matrix():
    G1 = _random_spd(4, 5)
    G2 = np.diag([1.0, 1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        gen_eig_extremes(G1, G2)


def test_pencil_rejects_asymmetric_input():
    G = _random_spd(4, 6)
    G_bad = G.copy()
    G_bad[0, 1] += 1.0
    with pytest.raises(ValueError):
        gen_eig_extremes(G_bad, G)


# ---------------------------------------------------------------------------
# weighted stationarity and near-optimality transfer


def _assembled_weighted_system(method_scheme, seed=0):
    prob = make_problem("pde1")
    spec = MaternSpec(4, 2, 5.0)
    X = tensor_grid(5, 2)
    pre = tensor_grid(9, 2)
    _, pre_bd = boundary_subset(pre)
    from kolloc import apply_transform

    Y = apply_transform("sine", pre)
    _, Z = boundary_subset(Y)
    sys_ = assemble_system(prob, spec, X, Y, Z, theta=8.0)
    w = build_weights(method_scheme, pre, pre_bd, "sine", seed=seed)
    return sys_, w


@pytest.mark.parametrize("scheme", ["identity", "random", "trapezoid"])
def test_weighted_stationarity_on_assembled_systems(scheme):
    sys_, w = _assembled_weighted_system(scheme, seed=4)
    scaled = weight_and_scale(sys_, w)
    res = solve_lstsq(scaled.design, scaled.rhs)
    A, b = sys_.design, sys_.rhs
    grad = A.T @ (w * (A @ res.coeffs - b))
    ref = np.linalg.norm(A.T @ (w * b))
    assert np.linalg.norm(grad) <= 1e-6 * ref


def test_near_optimality_transfer_random_systems():
    # the identity-weight minimizer almost minimizes any weighted residual,
    # up to the square root of the weight condition number
    rng = np.random.default_rng(31)
    for _ in range(20):
        A = rng.standard_normal((30, 6))
        b = rng.standard_normal(30)
        w = rng.uniform(0.2, 5.0, size=30)
        alpha_i = solve_lstsq(A, b).coeffs
        sw = np.sqrt(w)
        alpha_w = solve_lstsq(sw[:, None] * A, sw * b).coeffs
        r_i = np.linalg.norm(sw * (A @ alpha_i - b))
        r_w = np.linalg.norm(sw * (A @ alpha_w - b))
        assert r_i <= np.sqrt(w.max() / w.min()) * r_w + 1e-12


def test_near_optimality_transfer_assembled_system():
    sys_, w = _assembled_weighted_system("trapezoid")
    A, b = sys_.design, sys_.rhs
    alpha_i = solve_lstsq(A, b).coeffs
    sw = np.sqrt(w)
    alpha_w = solve_lstsq(sw[:, None] * A, sw * b).coeffs
    r_i = np.linalg.norm(sw * (A @ alpha_i - b))
    r_w = np.linalg.norm(sw * (A @ alpha_w - b))
    assert r_i <= np.sqrt(w.max() / w.min()) * r_w * (1 + 1e-12)
