"""Shared test helpers: closed-form integrands for the component seam,
a straight-line reference evaluator for the network, and finite-difference
utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pytest

from mtgraph.network import POSITIVITY_FLOOR, NetworkParams, layer_views


# ---------------------------------------------------------------------------
# independently coded straight-line network evaluator (duplicate-evaluation
# oracle for forward_eval): plain python loops, no shared code paths

def reference_forward(params: NetworkParams, x) -> float:
    vec = [float(v) for v in x]
    layers = layer_views(params)
    for li, (w, b) in enumerate(layers):
        out = []
        for r in range(w.shape[0]):
            acc = float(b[r])
            for c in range(w.shape[1]):
                acc += float(w[r, c]) * vec[c]
            out.append(acc)
        if li < len(layers) - 1:
            vec = [v if v > 0 else math.expm1(v) for v in out]
        else:
            vec = out
    z = vec[0]
    return math.log1p(math.exp(-abs(z))) + max(z, 0.0) + POSITIVITY_FLOOR


# ---------------------------------------------------------------------------
# closed-form integrands satisfying the component seam interface

@dataclass
class ConstantIntegrand:
    c: float
    dim: int

    def value(self, X):
        X = np.atleast_2d(X)
        return np.full(X.shape[0], self.c)

    def value_and_grad(self, X):
        X = np.atleast_2d(X)
        return self.value(X), np.zeros_like(X, dtype=np.float64)

    def value_grad_hessslot(self, X, k):
        X = np.atleast_2d(X)
        f, g = self.value_and_grad(X)
        return f, g, np.zeros_like(X, dtype=np.float64)


@dataclass
class ExpSlotIntegrand:
    """f(x) = exp(x_slot); with slot = target k this is exp(t)."""

    slot: int
    dim: int

    def value(self, X):
        X = np.atleast_2d(X)
        return np.exp(X[:, self.slot])

    def value_and_grad(self, X):
        X = np.atleast_2d(X)
        f = self.value(X)
        g = np.zeros_like(X, dtype=np.float64)
        g[:, self.slot] = f
        return f, g

    def value_grad_hessslot(self, X, k):
        X = np.atleast_2d(X)
        f, g = self.value_and_grad(X)
        h = np.zeros_like(X, dtype=np.float64)
        if k == self.slot:
            h[:, self.slot] = f
        return f, g, h


@dataclass
class SeparableIntegrand:
    """f(x) = g(t) * h(x_j) with g(t) = 1 + t^2 and h(x) = 2 + sin(x),
    t in slot k; both factors strictly positive."""

    k: int
    j: int
    dim: int

    @staticmethod
    def g(t):
        return 1.0 + t ** 2

    @staticmethod
    def g_int(upper):
        return upper + upper ** 3 / 3.0

    @staticmethod
    def h(x):
        return 2.0 + np.sin(x)

    def value(self, X):
        X = np.atleast_2d(X)
        return self.g(X[:, self.k]) * self.h(X[:, self.j])

    def value_and_grad(self, X):
        X = np.atleast_2d(X)
        t, xj = X[:, self.k], X[:, self.j]
        f = self.g(t) * self.h(xj)
        grad = np.zeros_like(X, dtype=np.float64)
        grad[:, self.k] = 2.0 * t * self.h(xj)
        grad[:, self.j] = self.g(t) * np.cos(xj)
        return f, grad

    def value_grad_hessslot(self, X, k):
        X = np.atleast_2d(X)
        f, grad = self.value_and_grad(X)
        t, xj = X[:, self.k], X[:, self.j]
        h = np.zeros_like(X, dtype=np.float64)
        if k == self.k:
            h[:, self.k] = 2.0 * self.h(xj)
            h[:, self.j] = 2.0 * t * np.cos(xj)
        elif k == self.j:
            h[:, self.k] = 2.0 * t * np.cos(xj)
            h[:, self.j] = -self.g(t) * np.sin(xj)
        return f, grad, h


# ---------------------------------------------------------------------------
# finite differences

def central_diff(fn, x, j, h=1e-4):
    e = np.zeros_like(x, dtype=np.float64)
    e[j] = h
    return (fn(x + e) - fn(x - e)) / (2.0 * h)


def central_diff2(fn, x, j, l, h=1e-4):
    ej = np.zeros_like(x, dtype=np.float64)
    el = np.zeros_like(x, dtype=np.float64)
    ej[j] = h
    el[l] = h
    if j == l:
        return (fn(x + ej) - 2.0 * fn(x) + fn(x - ej)) / h ** 2
    return (fn(x + ej + el) - fn(x + ej - el) - fn(x - ej + el)
            + fn(x - ej - el)) / (4.0 * h ** 2)


def assert_close(actual, desired, rtol, floor=1e-8):
    """Relative comparison that skips points with a tiny denominator,
    matching the stated exclusion rule of the derivative properties."""
    denom = abs(desired)
    if denom < floor:
        return
    assert abs(actual - desired) <= rtol * max(1.0, denom), \
        f"{actual} vs {desired} (rtol {rtol})"


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
