"""The scikit-learn style solver facade."""

import numpy as np
import pytest
from sklearn.base import clone

from kolloc import (
    CollocationSolver,
    make_problem,
    oversample_counts,
    relative_l2,
    scattered_cloud_near_line,
    tensor_grid,
)


def _eval_error(est, n_eval=33):
    pts = tensor_grid(n_eval, 2).points
    return relative_l2(est.predict(pts), est.problem_.exact.u(pts))


def test_fit_predict_roundtrip_and_attributes():
    X = tensor_grid(9, 2).points
    est = CollocationSolver(problem="pde1", tau=4, gamma=3.0, method="wls-id")
    out = est.fit(X)
    assert out is est
    assert est.coef_.shape == (81,)
    assert est.h_x_ > 0 and est.theta_ > 0
    assert est.kappa_w_ == 1.0  # identity weights
    assert est.stationarity_ <= 1e-6
    n_y = oversample_counts(3.0, 81)
    n_axis = int(round(np.sqrt(n_y)))
    assert est.system_shape_ == (n_y + 4 * n_axis - 4, 81)
    assert est.design_.shape == est.system_shape_
    pred = est.predict([[0.1, -0.2], [0.0, 0.0]])
    assert pred.shape == (2,)
    assert np.all(np.isfinite(pred))


def test_solution_accuracy_sanity():
    est = CollocationSolver(problem="pde1", tau=4, gamma=3.0).fit(tensor_grid(9, 2).points)
    assert _eval_error(est) < 0.2


def test_collocation_grid_includes_boundary_rows():
    est = CollocationSolver(problem="pde1", tau=4, gamma=3.0).fit(tensor_grid(5, 2).points)
    # the collocation set is the full transformed grid; its boundary subset
    # also appears as the separately scaled boundary block
    assert len(est.y_points_) == oversample_counts(3.0, 25)
    on_boundary = np.max(np.abs(est.y_points_.points), axis=1) >= 1.0 - 1e-12
    assert on_boundary.sum() == len(est.z_points_)


def test_problem_instance_and_name_agree():
    X = tensor_grid(7, 2).points
    by_name = CollocationSolver(problem="pde2", tau=4, seed=1).fit(X)
    by_instance = CollocationSolver(problem=make_problem("pde2"), tau=4, seed=1).fit(X)
    np.testing.assert_array_equal(by_name.coef_, by_instance.coef_)


def test_estimator_deterministic():
    X = tensor_grid(7, 2).points
    a = CollocationSolver(problem="pde1", method="wls-rd", seed=3).fit(X)
    b = CollocationSolver(problem="pde1", method="wls-rd", seed=3).fit(X)
    np.testing.assert_array_equal(a.coef_, b.coef_)
    c = CollocationSolver(problem="pde1", method="wls-rd", seed=4).fit(X)
    assert not np.array_equal(a.coef_, c.coef_)


def test_sklearn_params_and_clone():
    est = CollocationSolver(problem="pde3", tau=5, eps=2.0, method="vls-tp", gamma=2.5)
    params = est.get_params()
    assert params["tau"] == 5 and params["gamma"] == 2.5
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(tau=4)
    assert est.get_params()["tau"] == 4


def test_theta_override_honored():
    X = tensor_grid(5, 2).points
    est = CollocationSolver(problem="pde1", theta=12.5).fit(X)
    assert est.theta_ == 12.5
    auto = CollocationSolver(problem="pde1").fit(X)
    np.testing.assert_allclose(auto.theta_, auto.h_x_**-1.5, rtol=1e-12)


def test_transform_override_honored():
    X = tensor_grid(5, 2).points
    est = CollocationSolver(problem="pde1", transform="identity").fit(X)
    assert est.transform_ == "identity"
    default = CollocationSolver(problem="pde1").fit(X)
    assert default.transform_ == "sine"


def test_extra_interior_rows_are_appended():
    cloud = scattered_cloud_near_line(30, (1.0, -1.0), 0.2, seed=2)
    base = CollocationSolver(problem="pde4", tau=5, gamma=3.0).fit(tensor_grid(5, 2).points)
    mixed = CollocationSolver(problem="pde4", tau=5, gamma=3.0).fit(
        tensor_grid(5, 2).points, extra_interior=cloud.points
    )
    assert mixed.system_shape_[0] == base.system_shape_[0] + 30
    assert len(mixed.y_points_) == len(base.y_points_) + 30


def test_extra_interior_incompatible_with_quadrature_weights():
    cloud = scattered_cloud_near_line(10, (1.0, -1.0), 0.2, seed=2)
    est = CollocationSolver(problem="pde4", method="vls-tp")
    with pytest.raises(ValueError):
        est.fit(tensor_grid(5, 2).points, extra_interior=cloud.points)


def test_invalid_configuration_rejected():
    X = tensor_grid(5, 2).points
    with pytest.raises(ValueError):
        CollocationSolver(method="wls-xx").fit(X)
    with pytest.raises(ValueError):
        CollocationSolver(gamma=0.5).fit(X)
    with pytest.raises(ValueError):
        CollocationSolver(tau=2).fit(X)  # kernel not twice differentiable


def test_predict_requires_fit():
    est = CollocationSolver()
    with pytest.raises(Exception):
        est.predict([[0.0, 0.0]])
