"""Synthetic generators with analytically known conditional-independence graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .precision import EdgeSet

SPD_MIN_EIGENVALUE = 0.1
_SUPPORT_EPS = 1e-12


@dataclass
class GroundTruth:
    """What the generator knows: the population covariance/precision of the
    standardized variables (Gaussian case), the true edge set, and the seed."""

    true_edges: EdgeSet
    seed: int
    tag: str = "gaussian"
    sigma: np.ndarray | None = None
    precision: np.ndarray | None = None


def normalized_true_omega(gt: GroundTruth) -> np.ndarray:
    """|precision| with unit diagonal and max off-diagonal scaled to 1,
    matching the conventions of the assembled estimate."""
    if gt.precision is None:
        raise ValueError(f"no analytic precision for generator '{gt.tag}'")
    om = np.abs(gt.precision.copy())
    d = om.shape[0]
    off = ~np.eye(d, dtype=bool)
    m = om[off].max()
    if m > 0:
        om = om / m
    np.fill_diagonal(om, 1.0)
    return om


def sparse_spd_gaussian(d: int, m: int, zero_prob: float = 0.95,
                        value_range: tuple[float, float] = (0.3, 0.8),
                        seed: int = 0):
    """Gaussian samples from a random sparse SPD precision.

    The precision is L L' for a unit-diagonal lower factor whose strictly
    lower entries are nonzero with probability 1 - zero_prob, drawn uniform
    in value_range with random sign; the diagonal is then boosted so the
    smallest eigenvalue is at least SPD_MIN_EIGENVALUE. Samples are drawn
    from N(0, inv(precision)) and standardized; the returned ground truth
    carries the covariance/precision of the standardized variables.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if not 0.0 <= zero_prob < 1.0 + 1e-12:
        raise ValueError("zero_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    theta = None
    for _ in range(100):
        lower = np.zeros((d, d))
        rows, cols = np.tril_indices(d, -1)
        mask = rng.random(rows.size) < (1.0 - zero_prob)
        vals = rng.uniform(*value_range, size=rows.size)
        vals *= rng.choice([-1.0, 1.0], size=rows.size)
        lower[rows[mask], cols[mask]] = vals[mask]
        factor = np.eye(d) + lower
        cand = factor @ factor.T
        eigmin = np.linalg.eigvalsh(cand)[0]
        if eigmin < SPD_MIN_EIGENVALUE:
            cand = cand + (SPD_MIN_EIGENVALUE - eigmin) * np.eye(d)
        try:
            np.linalg.cholesky(cand)
        except np.linalg.LinAlgError:
            continue
        theta = cand
        break
    if theta is None:
        raise RuntimeError("failed to construct an SPD precision in 100 attempts")
    sigma = np.linalg.inv(theta)
    X = rng.standard_normal((m, d)) @ np.linalg.cholesky(sigma).T
    X = (X - X.mean(axis=0)) / X.std(axis=0)

    scale = np.sqrt(np.diag(sigma))
    sigma_std = sigma / np.outer(scale, scale)
    theta_std = theta * np.outer(scale, scale)
    edges = {(j, kk) for j in range(d) for kk in range(j + 1, d)
             if abs(theta[j, kk]) > _SUPPORT_EPS}
    gt = GroundTruth(true_edges=EdgeSet(d=d, edges=frozenset(edges)),
                     seed=seed, tag="gaussian", sigma=sigma_std,
                     precision=theta_std)
    return X, gt


def butterfly_sample(r: int, m: int, seed: int = 0):
    """r independent (X, Y=W*X) pairs with X, W standard normal, interleaved
    as X1, Y1, ..., Xr, Yr; the only true edges join each pair."""
    if r < 1:
        raise ValueError("need r >= 1")
    rng = np.random.default_rng(seed)
    d = 2 * r
    out = np.empty((m, d))
    for i in range(r):
        x = rng.standard_normal(m)
        w = rng.standard_normal(m)
        out[:, 2 * i] = x
        out[:, 2 * i + 1] = w * x
    out = (out - out.mean(axis=0)) / out.std(axis=0)
    edges = frozenset((2 * i, 2 * i + 1) for i in range(r))
    gt = GroundTruth(true_edges=EdgeSet(d=d, edges=edges), seed=seed,
                     tag="butterfly")
    return out, gt
