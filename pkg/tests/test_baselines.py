import numpy as np
import pytest
from scipy import stats

from mtgraph.baselines import (
    graphical_lasso,
    inverse_sqrt,
    lasso_neighborhood,
    linear_reduction_check,
    nonparanormal_pushforward_check,
    nonparanormal_transform,
    transport_linear_fit,
)
from mtgraph.errors import DataError
from mtgraph.synthdata import butterfly_sample


def gaussian_data(rng, theta, m):
    sigma = np.linalg.inv(theta)
    X = rng.standard_normal((m, theta.shape[0])) @ np.linalg.cholesky(sigma).T
    return (X - X.mean(axis=0)) / X.std(axis=0)


# ---------------------------------------------------------------------------
# lasso_neighborhood

def test_orthonormal_design_soft_threshold(rng):
    m, d = 64, 5
    Q, _ = np.linalg.qr(rng.standard_normal((m, d)))
    lam = 0.08
    fit = lasso_neighborhood(0, Q, lam)
    z = Q[:, 1:].T @ Q[:, 0]
    want = np.sign(z) * np.maximum(np.abs(z) - lam / 2.0, 0.0)
    assert np.allclose(fit.theta, want, atol=1e-10)


def test_huge_lambda_gives_zero_vector(rng):
    X = rng.standard_normal((50, 4))
    fit = lasso_neighborhood(2, X, 1e6)
    assert np.all(fit.theta == 0.0)
    assert fit.support.size == 0


def test_lambda_zero_is_least_squares(rng):
    theta = np.array([[1.4, 0.5, 0.0],
                      [0.5, 1.3, -0.4],
                      [0.0, -0.4, 1.2]])
    X = gaussian_data(rng, theta, 400)
    fit = lasso_neighborhood(0, X, 0.0)
    ols = np.linalg.lstsq(X[:, 1:], X[:, 0], rcond=None)[0]
    assert np.allclose(fit.theta, ols, atol=1e-6)


def test_lasso_path_piecewise_monotone_on_orthonormal(rng):
    m, d = 64, 4
    Q, _ = np.linalg.qr(rng.standard_normal((m, d)))
    lams = np.linspace(0.0, 0.4, 15)
    paths = np.array([np.abs(lasso_neighborhood(0, Q, lam).theta) for lam in lams])
    assert np.all(np.diff(paths, axis=0) <= 1e-12)


# ---------------------------------------------------------------------------
# linear reduction (the lasso equivalence, executable)

def test_reduction_lambda_zero_matches_ols(rng):
    theta = np.array([[1.5, 0.4, 0.0],
                      [0.4, 1.2, -0.3],
                      [0.0, -0.3, 1.0]])
    X = gaussian_data(rng, theta, 1500)
    rep = linear_reduction_check(1, X, 0.0)
    ols = np.linalg.lstsq(np.delete(X, 1, axis=1), X[:, 1], rcond=None)[0]
    assert np.allclose(-rep.b, ols, atol=1e-4)
    assert rep.max_coef_diff < 1e-6


def test_reduction_large_lambda_empty_both(rng):
    X = gaussian_data(rng, np.eye(3) + 0.2, 500)
    rep = linear_reduction_check(0, X, 10.0)
    assert np.all(rep.b == 0.0)
    assert np.all(rep.lasso_theta == 0.0)
    assert rep.support_match


def test_reduction_support_paths_agree_across_grid(rng):
    theta = np.array([[1.5, 0.4, 0.0, 0.0],
                      [0.4, 1.3, -0.3, 0.0],
                      [0.0, -0.3, 1.2, 0.25],
                      [0.0, 0.0, 0.25, 1.1]])
    X = gaussian_data(rng, theta, 2000)
    for k in range(4):
        for lam in (1.0, 0.1, 0.01, 0.001, 0.0):
            rep = linear_reduction_check(k, X, lam)
            assert rep.support_match, (k, lam)
            assert rep.max_coef_diff < 1e-3, (k, lam, rep.max_coef_diff)


def test_transport_linear_fit_stationarity(rng):
    X = gaussian_data(rng, np.array([[1.2, 0.3], [0.3, 1.1]]), 800)
    lam = 0.05
    a = transport_linear_fit(0, X, lam)
    G = X.T @ X / X.shape[0]
    # subgradient condition: |G a - e_k/a_k| <= lam on the support, with
    # equality pattern matching signs
    grad_smooth = G @ a
    grad_smooth[0] -= 1.0 / a[0]
    assert np.all(np.abs(grad_smooth) <= lam + 1e-8)


# ---------------------------------------------------------------------------
# graphical lasso

def test_glasso_lambda_zero_inverts(rng):
    A = rng.standard_normal((40, 4))
    S = A.T @ A / 40 + 0.3 * np.eye(4)
    est = graphical_lasso(S, 0.0)
    assert np.allclose(est.theta_hat, np.linalg.inv(S), atol=1e-5)


def test_glasso_diagonal_closed_form():
    S = np.diag([2.0, 0.5, 1.3])
    lam = 0.4
    est = graphical_lasso(S, lam)
    assert np.allclose(np.diag(est.theta_hat), 1.0 / (np.diag(S) + lam), atol=1e-10)
    off = est.theta_hat[~np.eye(3, dtype=bool)]
    assert np.all(off == 0.0)


def test_glasso_positive_definite_across_lambdas(rng):
    A = rng.standard_normal((60, 5))
    S = A.T @ A / 60 + 0.2 * np.eye(5)
    for lam in (0.0, 0.01, 0.1, 0.5, 2.0):
        est = graphical_lasso(S, lam)
        assert np.allclose(est.theta_hat, est.theta_hat.T)
        assert np.linalg.eigvalsh(est.theta_hat).min() > 0, lam


def test_glasso_butterfly_only_diagonal(rng):
    X, _ = butterfly_sample(5, 4000, seed=11)
    S = np.cov(X, rowvar=False)
    est = graphical_lasso(S, 0.1)
    off = est.theta_hat[~np.eye(10, dtype=bool)]
    assert np.all(off == 0.0)


# ---------------------------------------------------------------------------
# nonparanormal

def test_npn_near_identity_on_gaussian_column(rng):
    x = rng.standard_normal((20_000, 1))
    t = nonparanormal_transform(x)
    corr = np.corrcoef(x[:, 0], t[:, 0])[0, 1]
    assert corr > 0.99


def test_npn_marginals_standardized(rng):
    X = np.column_stack([
        rng.exponential(2.0, size=3000),
        rng.lognormal(0.0, 1.0, size=3000),
        rng.uniform(-5, 5, size=3000),
    ])
    T = nonparanormal_transform(X)
    assert np.all(np.abs(T.mean(axis=0)) < 0.05)
    assert np.all(np.abs(T.std(axis=0) - 1.0) < 0.05)


def test_npn_requires_rows_and_variation(rng):
    with pytest.raises(DataError):
        nonparanormal_transform(np.zeros((5, 2)))
    bad = rng.standard_normal((100, 2))
    bad[:, 1] = 3.0
    with pytest.raises(DataError):
        nonparanormal_transform(bad)


def test_npn_glasso_recovers_gaussian_copula_support(rng):
    # exponential marginals over a Gaussian copula with a chain precision
    theta = np.array([[1.4, 0.55, 0.0, 0.0],
                      [0.55, 1.5, 0.55, 0.0],
                      [0.0, 0.55, 1.5, 0.55],
                      [0.0, 0.0, 0.55, 1.4]])
    sigma = np.linalg.inv(theta)
    scale = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(scale, scale)
    Z = rng.standard_normal((8000, 4)) @ np.linalg.cholesky(corr).T
    X = stats.expon.ppf(stats.norm.cdf(Z))
    T = nonparanormal_transform(X)
    est = graphical_lasso(np.cov(T, rowvar=False), 0.12)
    got = np.abs(est.theta_hat) > 1e-8
    np.fill_diagonal(got, False)
    want = np.abs(theta) > 1e-12
    np.fill_diagonal(want, False)
    assert np.array_equal(got, want)


# ---------------------------------------------------------------------------
# pushforward moment check

def test_pushforward_exact_transforms_pass(rng):
    corr = np.array([[1.0, 0.6], [0.6, 1.0]])
    Z = rng.standard_normal((10_000, 2)) @ np.linalg.cholesky(corr).T
    X = np.exp(Z)
    rep = nonparanormal_pushforward_check(X, [np.log, np.log], corr)
    assert rep.mean_norm < 0.05
    assert rep.cov_dev < 0.1
    assert rep.passed


def test_pushforward_identity_is_whitening(rng):
    corr = np.array([[1.0, -0.4], [-0.4, 1.0]])
    Z = rng.standard_normal((20_000, 2)) @ np.linalg.cholesky(corr).T
    ident = lambda c: c
    rep = nonparanormal_pushforward_check(Z, [ident, ident], corr)
    assert rep.passed


def test_pushforward_wrong_sigma_fails(rng):
    corr = np.array([[1.0, 0.7], [0.7, 1.0]])
    Z = rng.standard_normal((10_000, 2)) @ np.linalg.cholesky(corr).T
    ident = lambda c: c
    rep = nonparanormal_pushforward_check(Z, [ident, ident], np.eye(2))
    assert not rep.passed
    assert rep.cov_dev > 0.1


def test_inverse_sqrt_identity(rng):
    A = rng.standard_normal((6, 3))
    sigma = A.T @ A / 6 + 0.4 * np.eye(3)
    R = inverse_sqrt(sigma)
    assert np.max(np.abs(R @ R - np.linalg.inv(sigma))) < 1e-10
