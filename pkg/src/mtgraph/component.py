"""Monotone map components built as integrals of a positive integrand.

A component for target coordinate k evaluates

    S(x) = beta + integral_0^{x_k} f(t, x_{-k}) dt,

with the integral computed by affinely mapping a Clenshaw-Curtis rule from
[-1, 1] onto [0, x_k] (a negative upper limit flips the sign through the
affine map). The integrand is the positive network by default; anything
exposing the same small interface can be injected instead, which is how the
closed-form test integrands get in.

Integrand interface: `dim`, `value(X) -> (B,)`,
`value_and_grad(X) -> (f, G)`, `value_grad_hessslot(X, k) -> (f, G, Hk)`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import network as net
from .errors import WidthMismatchError
from .network import NetworkParams
from .quadrature import QuadratureRule, cc_rule

# rows per chunk when expanding a batch across quadrature nodes
_CHUNK_ROWS = 4096


@dataclass
class NetworkIntegrand:
    """The trainable integrand f(.; psi)."""

    params: NetworkParams

    @property
    def dim(self) -> int:
        return self.params.dim

    def value(self, X):
        return net.forward_batch(self.params, X)

    def value_and_grad(self, X):
        return net.input_grad_batch(self.params, X)

    def value_grad_hessslot(self, X, k):
        return net.hess_slot_batch(self.params, X, k)


@dataclass
class BatchBundle:
    """Derivatives of S over a batch; the k-th column of dj/djk/djkk is zeroed
    (the target slot is handled by dk/dkk)."""

    value: np.ndarray
    dk: np.ndarray
    dj: np.ndarray
    dkk: np.ndarray | None = None
    djk: np.ndarray | None = None
    djkk: np.ndarray | None = None


@dataclass
class DerivativeBundle:
    """Single-point view of BatchBundle, matching eval_bundle's contract."""

    value: float
    dk: float
    dj: np.ndarray
    dkk: float | None = None
    djk: np.ndarray | None = None
    djkk: np.ndarray | None = None


@dataclass
class MapComponent:
    """Monotone transport-map component for target coordinate k (0-based)."""

    k: int
    params: NetworkParams | None
    beta: float = 0.0
    rule: QuadratureRule = field(default_factory=lambda: cc_rule(21))
    integrand: object | None = None

    def __post_init__(self):
        if self.integrand is None:
            if self.params is None:
                raise ValueError("MapComponent needs params or an injected integrand")
            self.integrand = NetworkIntegrand(self.params)
        if not 0 <= self.k < self.integrand.dim:
            raise IndexError(f"target index {self.k} outside [0, {self.integrand.dim})")

    @property
    def dim(self) -> int:
        return self.integrand.dim

    # -- evaluation ---------------------------------------------------------

    def _check(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise WidthMismatchError(self.dim, X.shape[1])
        return X

    def _quad_points(self, X: np.ndarray) -> np.ndarray:
        """Rows of X replicated per node with slot k set to x_k*(u+1)/2."""
        q = len(self.rule)
        XQ = np.repeat(X, q, axis=0)
        t = np.outer(X[:, self.k], 0.5 * (self.rule.nodes + 1.0))
        XQ[:, self.k] = t.ravel()
        return XQ

    def value_batch(self, X) -> np.ndarray:
        X = self._check(X)
        out = np.empty(X.shape[0])
        q = len(self.rule)
        step = max(1, _CHUNK_ROWS // q)
        for lo in range(0, X.shape[0], step):
            blk = X[lo:lo + step]
            fq = self.integrand.value(self._quad_points(blk)).reshape(-1, q)
            out[lo:lo + step] = self.beta + 0.5 * blk[:, self.k] * (fq @ self.rule.weights)
        return out

    def value_dk_batch(self, X):
        """(S, dS/dx_k) without the cross-derivative work; the likelihood
        evaluation path."""
        X = self._check(X)
        return self.value_batch(X), self.integrand.value(X)

    def bundle_batch(self, X, need_second: bool = False) -> BatchBundle:
        X = self._check(X)
        b, d = X.shape
        q = len(self.rule)
        value = np.empty(b)
        dj = np.empty((b, d))
        step = max(1, _CHUNK_ROWS // q)
        for lo in range(0, b, step):
            blk = X[lo:lo + step]
            fq, gq = self.integrand.value_and_grad(self._quad_points(blk))
            scale = 0.5 * blk[:, self.k]
            value[lo:lo + step] = self.beta + scale * (fq.reshape(-1, q) @ self.rule.weights)
            acc = np.einsum("q,bqd->bd", self.rule.weights, gq.reshape(-1, q, d))
            dj[lo:lo + step] = scale[:, None] * acc
        dj[:, self.k] = 0.0
        if not need_second:
            dk = self.integrand.value(X)
            return BatchBundle(value=value, dk=dk, dj=dj)
        dk, gx, hk = self.integrand.value_grad_hessslot(X, self.k)
        dkk = gx[:, self.k].copy()
        djk = gx.copy()
        djk[:, self.k] = 0.0
        djkk = hk.copy()
        djkk[:, self.k] = 0.0
        return BatchBundle(value=value, dk=dk, dj=dj, dkk=dkk, djk=djk, djkk=djkk)


@dataclass
class LinearComponent:
    """Closed-form linear map S(x) = a.x + beta; the analytic seam used by the
    reduction checks and by tests. Monotone iff a[k] > 0."""

    k: int
    a: np.ndarray
    beta: float = 0.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=np.float64).ravel()

    @property
    def dim(self) -> int:
        return self.a.size

    def value_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return X @ self.a + self.beta

    def value_dk_batch(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return self.value_batch(X), np.full(X.shape[0], self.a[self.k])

    def bundle_batch(self, X, need_second: bool = False) -> BatchBundle:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        b, d = X.shape
        dj = np.tile(self.a, (b, 1))
        dj[:, self.k] = 0.0
        dk = np.full(b, self.a[self.k])
        zeros = np.zeros((b, d))
        if not need_second:
            return BatchBundle(value=self.value_batch(X), dk=dk, dj=dj)
        return BatchBundle(value=self.value_batch(X), dk=dk, dj=dj,
                           dkk=np.zeros(b), djk=zeros, djkk=zeros.copy())


# ---------------------------------------------------------------------------
# module-level operation entry points

def eval_map(mc, x) -> float:
    """S(x) = beta + integral_0^{x_k} f(t, x_{-k}) dt for one point."""
    return float(mc.value_batch(np.asarray(x, dtype=np.float64)[None, :])[0])


def eval_bundle(mc, x, need_second: bool = True) -> DerivativeBundle:
    """All derivatives of S at one point that the precision estimator needs."""
    bb = mc.bundle_batch(np.asarray(x, dtype=np.float64)[None, :], need_second=need_second)
    return DerivativeBundle(
        value=float(bb.value[0]),
        dk=float(bb.dk[0]),
        dj=bb.dj[0],
        dkk=None if bb.dkk is None else float(bb.dkk[0]),
        djk=None if bb.djk is None else bb.djk[0],
        djkk=None if bb.djkk is None else bb.djkk[0],
    )
