import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from penreg.core import (
    FitResult,
    PenaltySpec,
    fit,
    fit_path,
    fit_to,
    lambda_grid,
    lambda_max,
    penalized_objective,
    predict,
    ridge_closed_form,
    soft_threshold,
)
from penreg.dataset import Dataset, standardize
from penreg.errors import DimensionMismatch, NotStandardized, SingularSystem

from conftest import random_problem


def ols(d):
    """Least squares with intercept on the (standardized) design."""
    Z = np.column_stack([np.ones(d.n), d.X])
    return np.linalg.lstsq(Z, d.y, rcond=None)[0]


def ridge_oracle(d, lam):
    """Direct solve of the centered ridge normal equations."""
    Xc = d.X - d.X.mean(axis=0)
    yc = d.y - d.y.mean()
    return np.linalg.solve(Xc.T @ Xc / d.n + lam * np.eye(d.p), Xc.T @ yc / d.n)


@pytest.mark.parametrize("z,g,expected", [(3.0, 1.0, 2.0), (-0.5, 1.0, 0.0), (-3.0, 1.0, -2.0), (1.0, 1.0, 0.0)])
def test_soft_threshold(z, g, expected):
    assert soft_threshold(z, g) == expected


@given(st.floats(-1e6, 1e6))
def test_soft_threshold_zero_penalty_is_identity(z):
    assert soft_threshold(z, 0.0) == z


def test_soft_threshold_rejects_negative_gamma():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
def test_zero_penalty_is_ols(std_problem, alpha):
    f = fit(std_problem, PenaltySpec(0.0, alpha), tol=1e-12, max_passes=100_000)
    b = ols(std_problem)
    assert f.converged
    np.testing.assert_allclose(f.coefficients_std, b[1:], atol=1e-6)
    np.testing.assert_allclose(f.intercept_std, b[0], atol=1e-6)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_huge_penalty_zeroes_everything(std_problem, alpha):
    f = fit(std_problem, PenaltySpec(1e6, alpha))
    if alpha > 0:
        assert np.all(f.coefficients == 0.0)
    else:
        assert np.all(np.abs(f.coefficients_std) < 1e-5)
    assert f.intercept_std == pytest.approx(std_problem.y.mean(), abs=1e-5)


def test_ridge_5x3_matches_closed_form(rng):
    d = standardize(random_problem(rng, 5, 3))
    f = fit(d, PenaltySpec(0.2, 0.0), tol=1e-13)
    np.testing.assert_allclose(f.coefficients_std, ridge_oracle(d, 0.2), atol=1e-8)


def test_ridge_closed_form_6x4_agrees_with_fit(rng):
    d = standardize(random_problem(rng, 6, 4))
    cf = ridge_closed_form(d, 0.1)
    np.testing.assert_allclose(cf.coefficients_std, ridge_oracle(d, 0.1), atol=1e-12)
    cd = fit(d, PenaltySpec(0.1, 0.0), tol=1e-13)
    np.testing.assert_allclose(cd.coefficients_std, cf.coefficients_std, atol=1e-8)
    assert cd.intercept == pytest.approx(cf.intercept, abs=1e-8)


def test_ridge_closed_form_zero_lambda_is_ols(std_problem):
    cf = ridge_closed_form(std_problem, 0.0)
    np.testing.assert_allclose(cf.coefficients_std, ols(std_problem)[1:], atol=1e-10)


def test_ridge_orthonormal_shrinkage():
    # two orthogonal +/-1 columns: X'X/n = I, so beta = rho / (1 + lam)
    X = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=float)
    y = np.array([3.0, 1.0, 0.0, -2.0])
    d = standardize(Dataset(X, y, ("a", "b")))
    rho = d.X.T @ (y - y.mean()) / 4
    cf = ridge_closed_form(d, 1.0)
    np.testing.assert_allclose(cf.coefficients_std, rho / 2)


def test_ridge_closed_form_singular():
    X = np.array([[1, 2], [2, 4], [3, 6], [4, 8]], dtype=float)
    d = standardize(Dataset(X, [1, 0, 1, 1], ("a", "b")))
    with pytest.raises(SingularSystem):
        ridge_closed_form(d, 0.0)
    ridge_closed_form(d, 0.5)


def test_fit_requires_standardized(rng):
    with pytest.raises(NotStandardized):
        fit(random_problem(rng, 10, 2), PenaltySpec(0.1, 1.0))


def test_penalty_spec_validation():
    for lam, alpha in [(-1, 0.5), (1, 1.5), (1, -0.1), (float("nan"), 0.5)]:
        with pytest.raises(ValueError):
            PenaltySpec(lam, alpha)


def test_prediction_identity_and_dropped_zeros(std_problem):
    f = fit(std_problem, PenaltySpec(0.5 * lambda_max(std_problem, 1.0), 1.0))
    raw = std_problem.X * std_problem.scales + std_problem.means
    std_pred = f.intercept_std + std_problem.X @ f.coefficients_std
    np.testing.assert_allclose(predict(f, raw), std_pred, atol=1e-10)
    zero = f.coefficients_std == 0
    assert zero.any()
    assert np.all(f.coefficients[zero] == 0.0)
    assert not np.any(np.signbit(f.coefficients[zero]))


def test_objective_trace_non_increasing(rng):
    for alpha in (0.0, 0.4, 1.0):
        d = standardize(random_problem(rng, 30, 6))
        f = fit(d, PenaltySpec(0.05, alpha), tol=1e-10, record_objective=True)
        t = f.objective_trace
        assert len(t) == f.n_iterations + 1
        assert np.all(np.diff(t) <= 1e-12 * max(1.0, abs(t[0])))
        # the Gram-form trace agrees with the direct residual form
        direct = penalized_objective(d, f.penalty, f.coefficients_std)
        assert t[-1] == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_kkt_conditions_lasso(rng):
    tol = 1e-9
    d = standardize(random_problem(rng, 50, 8, noise=2.0))
    lam = 0.2 * lambda_max(d, 1.0)
    f = fit(d, PenaltySpec(lam, 1.0), tol=tol)
    r = d.y - f.intercept_std - d.X @ f.coefficients_std
    grad = d.X.T @ r / d.n
    for j, b in enumerate(f.coefficients_std):
        if b != 0:
            assert grad[j] == pytest.approx(lam * np.sign(b), abs=10 * tol)
        else:
            assert abs(grad[j]) <= lam + 10 * tol
    assert (f.coefficients_std == 0).any() and (f.coefficients_std != 0).any()


def test_lambda_max_zeroes_lasso(std_problem):
    lmax = lambda_max(std_problem, 1.0)
    assert np.all(fit(std_problem, PenaltySpec(lmax, 1.0)).coefficients == 0.0)
    just_below = fit(std_problem, PenaltySpec(lmax * (1 - 1e-6), 1.0))
    assert np.count_nonzero(just_below.coefficients) == 1


def test_lambda_grid_shape(std_problem):
    g = lambda_grid(std_problem, 1.0, 2, 0.01)
    assert g[0] == lambda_max(std_problem, 1.0) and g[1] == pytest.approx(g[0] * 0.01, rel=1e-15)
    g = lambda_grid(std_problem, 0.5, 100, 1e-4)
    assert len(g) == 100 and np.all(np.diff(g) < 0)
    ratios = g[1:] / g[:-1]
    assert np.ptp(ratios) < 1e-12
    # alpha floor keeps the ridge grid finite
    assert lambda_grid(std_problem, 0.0)[0] == pytest.approx(1000 * lambda_max(std_problem, 1.0))


def test_fit_path_warm_equals_cold(std_problem):
    tol = 1e-9
    grid = lambda_grid(std_problem, 0.7, 30, 1e-3)
    path = fit_path(std_problem, 0.7, grid, tol=tol)
    assert np.all(path.fits[0].coefficients == 0.0)
    for lam, warm in zip(grid, path.fits):
        cold = fit(std_problem, PenaltySpec(lam, 0.7), tol=tol)
        np.testing.assert_allclose(warm.coefficients_std, cold.coefficients_std, atol=2 * tol)
    last = fit_to(std_problem, 0.7, grid[:12], tol=tol)
    np.testing.assert_array_equal(last.coefficients_std, path.fits[11].coefficients_std)


def test_fit_path_rejects_unsorted(std_problem):
    with pytest.raises(ValueError):
        fit_path(std_problem, 1.0, [0.1, 0.2])


def test_path_shrinkage_monotone_for_lasso(rng):
    tol = 1e-9
    d = standardize(random_problem(rng, 60, 8))
    path = fit_path(d, 1.0, lambda_grid(d, 1.0, 50, 1e-3), tol=tol)
    l1 = [np.abs(f.coefficients_std).sum() for f in path.fits]
    # lambdas decrease along the path, so the l1 norm may only grow
    assert all(b >= a - 10 * tol for a, b in zip(l1, l1[1:]))


def test_path_csv_layout(std_problem):
    path = fit_path(std_problem, 1.0, lambda_grid(std_problem, 1.0, 3, 0.1))
    lines = path.to_csv().splitlines()
    assert lines[0] == "feature,log_lambda,coefficient"
    assert len(lines) == 1 + 3 * std_problem.p


def test_predict_examples():
    spec = PenaltySpec(0.0, 0.0)
    z = np.zeros(2)
    f = FitResult(0.7, z, z, 0.7, spec, 0, True)
    np.testing.assert_array_equal(predict(f, np.ones((3, 2))), [0.7, 0.7, 0.7])
    # hand computed: 0.5 + 1*x1 - 2*x2
    f = FitResult(0.5, np.array([1.0, -2.0]), z, 0.0, spec, 0, True)
    X = np.array([[1, 1], [2, 0], [0, 3], [-1, -1]], dtype=float)
    np.testing.assert_allclose(predict(f, X), [-0.5, 2.5, -5.5, 1.5])
    with pytest.raises(DimensionMismatch):
        predict(f, np.ones((2, 3)))


def test_predict_at_means_is_intercept(std_problem):
    f = fit(std_problem, PenaltySpec(0.01, 0.5))
    assert predict(f, std_problem.means)[0] == pytest.approx(f.intercept_std, abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 50), st.integers(1, 8), st.floats(1e-3, 10))
def test_ridge_coordinate_descent_equals_closed_form(seed, n, p, lam):
    r = np.random.default_rng(seed)
    d = standardize(random_problem(r, max(n, 3), p))
    cd = fit(d, PenaltySpec(lam, 0.0), tol=1e-14, max_passes=200_000)
    cf = ridge_closed_form(d, lam)
    np.testing.assert_allclose(cd.coefficients_std, cf.coefficients_std, atol=1e-8)
