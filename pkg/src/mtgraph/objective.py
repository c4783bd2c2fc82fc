"""Regularized pullback-likelihood loss for one map component.

Per sample the negative log-likelihood under a standard normal reference is
0.5*S(x)^2 - log dS/dx_k (the additive normal constant is dropped); the
penalty is the sum over input coordinates of the root-mean-square partial
derivative of S, which drives whole input groups to zero. Loss and penalty
are averaged over the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network as net
from .component import MapComponent

GROUP_SMOOTHING = 1e-8
_GRAD_CHUNK = 1024


@dataclass(frozen=True)
class LossReport:
    nll: float
    penalty: float
    lam: float
    total: float


def nll(mc, batch) -> float:
    """Mean of 0.5*S^2 - log dk over the batch rows."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    value, dk = mc.value_dk_batch(batch)
    return float(np.mean(0.5 * value ** 2 - np.log(dk)))


def penalty(mc, batch) -> float:
    """Sum over coordinates of the RMS partial derivative of S on the batch."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise ValueError("empty batch")
    bb = mc.bundle_batch(batch, need_second=False)
    D = bb.dj.copy()
    D[:, mc.k] = bb.dk
    return float(np.sum(np.sqrt(np.mean(D ** 2, axis=0))))


def loss_report(mc, batch, lam: float) -> LossReport:
    n = nll(mc, batch)
    p = penalty(mc, batch)
    return LossReport(nll=n, penalty=p, lam=lam, total=n + lam * p)


def _chunk_state(mc: MapComponent, blk: np.ndarray, lam: float):
    """Forward caches plus S, f(x), and the derivative matrix for one chunk."""
    params = mc.params
    q = len(mc.rule)
    XQ = mc._quad_points(blk)
    cache_q = net._Cache(params, XQ)
    cache_x = net._Cache(params, blk)
    scale = 0.5 * blk[:, mc.k]
    S = mc.beta + scale * (cache_q.f.reshape(-1, q) @ mc.rule.weights)
    D = None
    if lam > 0:
        G = net._input_grad_from_cache(cache_q)
        D = scale[:, None] * np.einsum(
            "q,bqd->bd", mc.rule.weights, G.reshape(-1, q, blk.shape[1]))
        D[:, mc.k] = cache_x.f
    return XQ, cache_q, cache_x, scale, S, D


def _chunk_grad(mc: MapComponent, blk, XQ, cache_q, cache_x, scale, S, D,
                r, inv_b: float, lam: float) -> np.ndarray:
    """Parameter gradient contribution of one chunk given the group scales r."""
    params = mc.params
    q = len(mc.rule)
    wq = mc.rule.weights
    a_iq = inv_b * (S * scale)[:, None] * wq[None, :]
    b_i = -inv_b / cache_x.f
    if lam > 0:
        b_i = b_i + r[mc.k] * D[:, mc.k]
        C = (r[None, :] * D) * scale[:, None]
        C[:, mc.k] = 0.0
        CQ = np.repeat(C, q, axis=0) * np.tile(wq, blk.shape[0])[:, None]
        grad = net.param_grad_fused_batch(params, XQ, a_iq.ravel(), CQ, cache=cache_q)
    else:
        grad = net.param_grad_batch(params, XQ, a_iq.ravel(), cache=cache_q)
    grad += net.param_grad_batch(params, blk, b_i, cache=cache_x)
    return grad


def loss_gradient(mc: MapComponent, batch, lam: float):
    """Gradient of nll + lam*penalty w.r.t. (theta, beta), plus the report.

    Reverse mode runs through the quadrature sum for the likelihood part;
    the penalty needs the parameter gradient of input derivatives of the
    integrand, handled by the forward-over-reverse pass. The group sqrt is
    smoothed as sqrt(. + delta^2) inside the gradient only; the reported
    penalty is the exact value (and is skipped, reported 0, when lam = 0).

    Batches larger than the internal chunk size are processed in fixed
    chunk order twice (values, then gradients), so the reduction is
    deterministic for a given batch.
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if getattr(mc, "params", None) is None:
        raise TypeError("loss_gradient needs a network-backed MapComponent")
    X = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    b = X.shape[0]
    inv_b = 1.0 / b

    def finish(nll_val, pen_val, msq, chunks):
        if lam > 0:
            r = lam / (b * np.sqrt(msq + GROUP_SMOOTHING ** 2))
        else:
            r = None
        grad = np.zeros_like(mc.params.theta)
        grad_beta = 0.0
        for blk, state in chunks():
            XQ, cache_q, cache_x, scale, S, D = state
            grad += _chunk_grad(mc, blk, XQ, cache_q, cache_x, scale, S, D,
                                r, inv_b, lam)
            grad_beta += inv_b * float(S.sum())
        report = LossReport(nll=nll_val, penalty=pen_val, lam=lam,
                            total=nll_val + lam * pen_val)
        return grad, grad_beta, report

    if b <= _GRAD_CHUNK:
        state = _chunk_state(mc, X, lam)
        S, D = state[4], state[5]
        nll_val = float(np.mean(0.5 * S ** 2 - np.log(state[2].f)))
        if lam > 0:
            msq = np.mean(D ** 2, axis=0)
            pen_val = float(np.sum(np.sqrt(msq)))
        else:
            msq, pen_val = None, 0.0
        return finish(nll_val, pen_val, msq, lambda: [(X, state)])

    # two passes over fixed chunks: values first (group norms need the whole
    # batch), then gradients with rebuilt caches
    nll_sum = 0.0
    sq_sum = np.zeros(X.shape[1]) if lam > 0 else None
    for lo in range(0, b, _GRAD_CHUNK):
        blk = X[lo:lo + _GRAD_CHUNK]
        _, _, cache_x, _, S, D = _chunk_state(mc, blk, lam)
        nll_sum += float(np.sum(0.5 * S ** 2 - np.log(cache_x.f)))
        if lam > 0:
            sq_sum += (D ** 2).sum(axis=0)
    nll_val = nll_sum * inv_b
    if lam > 0:
        msq = sq_sum * inv_b
        pen_val = float(np.sum(np.sqrt(msq)))
    else:
        msq, pen_val = None, 0.0

    def chunks():
        for lo in range(0, b, _GRAD_CHUNK):
            blk = X[lo:lo + _GRAD_CHUNK]
            yield blk, _chunk_state(mc, blk, lam)

    return finish(nll_val, pen_val, msq, chunks)
