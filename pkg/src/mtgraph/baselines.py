"""Classical comparison methods and the reduction checks.

The lasso solver minimizes ||X_k - X_{-k} theta||^2 + lam*||theta||_1 by
cyclic coordinate descent (note: no 1/M factor, so on orthonormal designs
the update is soft(<X_j, y>, lam/2)). The linear-restriction solver
minimizes the transport objective over linear maps a -> 0.5 a'Ga - log a_k
+ lam*||a||_1 with G = X'X/M; both sides of the reduction are exposed so
the equivalence can be checked numerically. Graphical lasso follows the
classic block coordinate descent with the l1 penalty applied to every
entry, diagonal included (so a diagonal input S yields 1/(S_ii + lam)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .component import LinearComponent
from .errors import ConvergenceError, DataError

LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 10_000
GLASSO_TOL = 1e-6
GLASSO_MAX_ITER = 500


@dataclass
class LassoFit:
    k: int
    theta: np.ndarray          # length d-1, coefficients for X_{-k} in column order
    lam: float

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.theta != 0.0)


@dataclass
class PrecisionEstimate:
    theta_hat: np.ndarray
    lam: float


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def lasso_neighborhood(k: int, X: np.ndarray, lam: float) -> LassoFit:
    """min_theta ||X_k - X_{-k} theta||^2 + lam ||theta||_1 by coordinate descent."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    y = X[:, k]
    Z = np.delete(X, k, axis=1)
    norms = (Z ** 2).sum(axis=0)
    if np.any(norms == 0):
        raise DataError("design has a zero column")
    theta = np.zeros(d - 1)
    resid = y.copy()
    for _ in range(LASSO_MAX_SWEEPS):
        delta = 0.0
        for j in range(d - 1):
            old = theta[j]
            rho = Z[:, j] @ resid + norms[j] * old
            new = _soft(rho, lam / 2.0) / norms[j]
            if new != old:
                resid += Z[:, j] * (old - new)
                theta[j] = new
                delta = max(delta, abs(new - old))
        if delta < LASSO_TOL:
            return LassoFit(k=k, theta=theta, lam=lam)
    raise ConvergenceError(f"lasso for node {k} did not converge "
                           f"in {LASSO_MAX_SWEEPS} sweeps")


def transport_linear_fit(k: int, X: np.ndarray, lam: float,
                         tol: float = 1e-12, max_sweeps: int = 200_000) -> np.ndarray:
    """Coordinate descent on 0.5 a'Ga - log a_k + lam ||a||_1, G = X'X/M.

    Coordinate k has the positive closed-form root of its quadratic
    stationarity condition; the others are soft-thresholded.
    """
    X = np.asarray(X, dtype=np.float64)
    m, d = X.shape
    G = X.T @ X / m
    a = np.zeros(d)
    a[k] = 1.0
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(d):
            c = G[j] @ a - G[j, j] * a[j]
            old = a[j]
            if j == k:
                t = c + lam
                new = (-t + np.sqrt(t * t + 4.0 * G[j, j])) / (2.0 * G[j, j])
            else:
                new = _soft(-c, lam) / G[j, j]
            if new != old:
                a[j] = new
                delta = max(delta, abs(new - old))
        if delta < tol:
            return a
    raise ConvergenceError(f"linear transport fit for node {k} did not converge")


@dataclass
class ReductionReport:
    k: int
    lam: float
    a: np.ndarray              # linear transport coefficients, length d
    b: np.ndarray              # a_{-k}/a_k, length d-1
    lam_tilde: float
    lasso_theta: np.ndarray    # length d-1
    support_match: bool
    max_coef_diff: float       # max |(-b) - lasso_theta|


def linear_reduction_check(k: int, X: np.ndarray, lam: float,
                           support_tol: float = 1e-6) -> ReductionReport:
    """Fit the transport objective restricted to linear maps and compare with
    the lasso under the rescaled penalty lam*2M/|a_k|; coefficients agree up
    to a sign flip."""
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[0]
    a = transport_linear_fit(k, X, lam)
    ak = a[k]
    b = np.delete(a, k) / ak
    lam_tilde = lam * 2.0 * m / abs(ak)
    fit = lasso_neighborhood(k, X, lam_tilde)
    sup_b = np.abs(b) > support_tol
    sup_t = np.abs(fit.theta) > support_tol
    return ReductionReport(
        k=k, lam=lam, a=a, b=b, lam_tilde=lam_tilde, lasso_theta=fit.theta,
        support_match=bool(np.array_equal(sup_b, sup_t)),
        max_coef_diff=float(np.max(np.abs(-b - fit.theta))) if b.size else 0.0,
    )


def linear_objective(k: int, X: np.ndarray, a: np.ndarray, lam: float) -> float:
    """Transport loss evaluated through the linear-component seam."""
    from .objective import loss_report

    comp = LinearComponent(k=k, a=np.asarray(a, dtype=np.float64))
    return loss_report(comp, X, lam).total


def graphical_lasso(S: np.ndarray, lam: float) -> PrecisionEstimate:
    """l1-penalized Gaussian MLE by block coordinate descent over columns.

    W starts at S + lam*I; each outer sweep solves one lasso subproblem per
    column (0.5 b'W11 b - b's12 + lam||b||_1) and writes W12 = W11 b back.
    Stops when the largest W change in a sweep drops below GLASSO_TOL.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(S, S.T, atol=1e-10):
        raise ValueError("covariance must be symmetric")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    d = S.shape[0]
    if d == 1:
        return PrecisionEstimate(theta_hat=np.array([[1.0 / (S[0, 0] + lam)]]), lam=lam)
    W = S.copy()
    np.fill_diagonal(W, np.diag(S) + lam)
    B = np.zeros((d, d - 1))  # per-column lasso solutions, warm-started
    idx = [np.delete(np.arange(d), j) for j in range(d)]
    for _ in range(GLASSO_MAX_ITER):
        w_change = 0.0
        for j in range(d):
            sub = idx[j]
            W11 = W[np.ix_(sub, sub)]
            s12 = S[sub, j]
            beta = B[j]
            diag = np.diag(W11).copy()
            for _sweep in range(LASSO_MAX_SWEEPS):
                delta = 0.0
                for t in range(d - 1):
                    old = beta[t]
                    c = W11[t] @ beta - diag[t] * old
                    new = _soft(s12[t] - c, lam) / diag[t]
                    if new != old:
                        beta[t] = new
                        delta = max(delta, abs(new - old))
                if delta < LASSO_TOL:
                    break
            else:
                raise ConvergenceError("glasso inner lasso did not converge")
            w12 = W11 @ beta
            w_change = max(w_change, float(np.max(np.abs(W[sub, j] - w12))))
            W[sub, j] = w12
            W[j, sub] = w12
        if w_change < GLASSO_TOL:
            break
    else:
        raise ConvergenceError(f"graphical lasso did not converge "
                               f"in {GLASSO_MAX_ITER} sweeps")
    theta = np.empty((d, d))
    for j in range(d):
        sub = idx[j]
        beta = B[j]
        denom = W[j, j] - W[sub, j] @ beta
        theta[j, j] = 1.0 / denom
        theta[sub, j] = -beta * theta[j, j]
    theta = 0.5 * (theta + theta.T)
    return PrecisionEstimate(theta_hat=theta, lam=lam)


def nonparanormal_transform(X: np.ndarray) -> np.ndarray:
    """Per column: shrunken ECDF (rank/(M+1)) truncated to [delta, 1-delta]
    with delta = 1/(4 M^(1/4) sqrt(pi log M)), Gaussian quantile, then
    rescale to unit sample variance."""
    X = np.asarray(X, dtype=np.float64)
    m = X.shape[0]
    if m < 10:
        raise DataError(f"nonparanormal transform needs at least 10 rows, got {m}")
    delta = 1.0 / (4.0 * m ** 0.25 * np.sqrt(np.pi * np.log(m)))
    out = np.empty_like(X)
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.all(col == col[0]):
            raise DataError(f"column {j} is constant")
        u = stats.rankdata(col, method="average") / (m + 1.0)
        u = np.clip(u, delta, 1.0 - delta)
        z = stats.norm.ppf(u)
        out[:, j] = z / z.std()
    return out


def inverse_sqrt(sigma: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root; A @ A == inv(sigma)."""
    sigma = np.asarray(sigma, dtype=np.float64)
    w, v = np.linalg.eigh(sigma)
    if np.min(w) <= 0:
        raise ValueError("matrix is not positive definite")
    return (v / np.sqrt(w)) @ v.T


@dataclass
class PushforwardReport:
    mean: np.ndarray
    cov: np.ndarray
    mean_norm: float
    cov_dev: float             # max |cov - I|

    @property
    def passed(self) -> bool:
        return self.mean_norm < 0.05 and self.cov_dev < 0.1


def nonparanormal_pushforward_check(X: np.ndarray, f_list, sigma: np.ndarray) -> PushforwardReport:
    """Moments of S(x) = sigma^(-1/2) f(x); near (0, I) when f and sigma are right."""
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if len(f_list) != d:
        raise ValueError(f"need {d} marginal transforms, got {len(f_list)}")
    F = np.column_stack([np.asarray(f_list[j](X[:, j]), dtype=np.float64)
                         for j in range(d)])
    Z = F @ inverse_sqrt(sigma).T
    mean = Z.mean(axis=0)
    cov = np.cov(Z, rowvar=False, bias=True)
    return PushforwardReport(
        mean=mean, cov=cov,
        mean_norm=float(np.linalg.norm(mean)),
        cov_dev=float(np.max(np.abs(cov - np.eye(d)))),
    )
