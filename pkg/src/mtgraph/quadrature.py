"""Clenshaw-Curtis quadrature on [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes ascending in [-1, 1]; nonnegative weights summing to 2."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=np.float64))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, fvals: np.ndarray) -> float:
        """Integral over [-1, 1] of a function sampled at the nodes."""
        return float(self.weights @ np.asarray(fvals, dtype=np.float64))


def cc_rule(n: int) -> QuadratureRule:
    """Clenshaw-Curtis rule with n nodes cos(pi*i/(n-1)), exact through degree n-1.

    Weights use the classic cosine-sum formula; endpoint weights carry the
    1/2 trapezoid factor. Symmetry is enforced exactly by averaging with the
    reversed weight vector.
    """
    n = int(n)
    if n < 2:
        raise ValueError(f"Clenshaw-Curtis rule needs at least 2 nodes, got {n}")
    big_n = n - 1
    i = np.arange(n)
    theta = i * np.pi / big_n
    js = np.arange(1, big_n // 2 + 1)
    if js.size:
        b = np.where(2 * js == big_n, 1.0, 2.0)
        cos_terms = np.cos(2.0 * np.outer(theta, js))
        sums = cos_terms @ (b / (4.0 * js ** 2 - 1.0))
    else:
        sums = np.zeros(n)
    w = (2.0 / big_n) * (1.0 - sums)
    w[0] *= 0.5
    w[-1] *= 0.5
    nodes = np.cos(theta)[::-1].copy()
    w = w[::-1].copy()
    w = 0.5 * (w + w[::-1])
    nodes = 0.5 * (nodes - nodes[::-1])
    return QuadratureRule(nodes, w)
