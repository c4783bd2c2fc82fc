"""Generalized precision assembly and edge thresholding.

Entry (j, k) of the matrix is the sample mean of the absolute mixed partial
d2/dxj dxk of the per-sample log-likelihood term -0.5*S^2 + log dS/dx_k,
expanded in closed form through the component's derivative bundle. Rows are
stacked as columns, symmetrized by averaging, and scaled so the largest
off-diagonal magnitude is 1 (the unit diagonal is set by convention, so it
stays out of the scaling).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GeneralizedPrecision:
    omega: np.ndarray
    normalized: bool = False
    degenerate: bool = False

    @property
    def dim(self) -> int:
        return self.omega.shape[0]


@dataclass(frozen=True)
class EdgeSet:
    d: int
    edges: frozenset
    tau: float | None = None

    def __post_init__(self):
        for (i, j) in self.edges:
            if i == j:
                raise ValueError(f"self-loop ({i},{j}) not allowed")
        canon = frozenset((min(i, j), max(i, j)) for (i, j) in self.edges)
        object.__setattr__(self, "edges", canon)

    def __len__(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.d, self.d), dtype=bool)
        for (i, j) in self.edges:
            a[i, j] = a[j, i] = True
        return a


def mixed_partial_terms(bundle) -> np.ndarray:
    """Per-row, per-column values of d2/dxj dxk [-0.5 S^2 + log dk], j != k.

    Closed form: -dj*dk - S*djk + (djkk*dk - dkk*djk)/dk^2. The k-th column
    is meaningless (the bundle zeroes it) and is ignored by callers.
    """
    dk = bundle.dk[:, None]
    return (-bundle.dj * dk - bundle.value[:, None] * bundle.djk
            + (bundle.djkk * dk - bundle.dkk[:, None] * bundle.djk) / dk ** 2)


def omega_row(mc, estimation: np.ndarray) -> np.ndarray:
    """Column k of the unsymmetrized matrix: mean |mixed partial| per j, 1 at k."""
    estimation = np.atleast_2d(np.asarray(estimation, dtype=np.float64))
    if estimation.shape[0] == 0:
        raise ValueError("empty estimation set")
    bb = mc.bundle_batch(estimation, need_second=True)
    row = np.abs(mixed_partial_terms(bb)).mean(axis=0)
    row[mc.k] = 1.0
    return row


def assemble(rows) -> GeneralizedPrecision:
    """Stack per-node rows as columns, symmetrize, scale max off-diagonal to 1."""
    rows = [np.asarray(r, dtype=np.float64).ravel() for r in rows]
    d = len(rows)
    if any(r.size != d for r in rows):
        raise ValueError("need d rows of length d")
    omega = np.column_stack(rows)
    omega = 0.5 * (omega + omega.T)
    off = ~np.eye(d, dtype=bool)
    max_off = np.max(np.abs(omega[off])) if d > 1 else 0.0
    if max_off == 0.0:
        np.fill_diagonal(omega, 1.0)
        return GeneralizedPrecision(omega=omega, normalized=True, degenerate=True)
    omega = omega / max_off
    np.fill_diagonal(omega, 1.0)
    return GeneralizedPrecision(omega=omega, normalized=True)


def threshold(gp: GeneralizedPrecision, tau: float) -> EdgeSet:
    """Edges where |omega_jk| strictly exceeds tau."""
    if not gp.normalized:
        raise ValueError("threshold expects a normalized matrix")
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    d = gp.dim
    edges = {(j, k) for j in range(d) for k in range(j + 1, d)
             if abs(gp.omega[j, k]) > tau}
    return EdgeSet(d=d, edges=frozenset(edges), tau=tau)


def tau_sweep(gp: GeneralizedPrecision, taus) -> list[tuple[float, int]]:
    """(tau, edge count) pairs; accepts tau = 0 for the sweep endpoint."""
    d = gp.dim
    iu = np.triu_indices(d, 1)
    vals = np.abs(gp.omega[iu])
    return [(float(t), int(np.sum(vals > t))) for t in taus]
