"""Positive-output feedforward network with hand-rolled differentiation.

The network maps a d-vector to one strictly positive scalar:

    z_1 = W_1 x + b_1,  a_1 = elu(z_1), ..., z_L = W_L a_{L-1} + b_L,
    f(x) = softplus(z_L) + floor.

Everything downstream needs derivatives of f in three flavours, all
implemented here without a taping framework:

  * input jets: f plus directional first and second derivatives of f
    with respect to the inputs (forward propagation);
  * parameter reverse: gradient of a weighted sum of outputs with respect
    to all weights and biases (plain backprop);
  * forward-over-reverse: gradient, with respect to the parameters, of a
    linear combination of input derivatives of f.

All batched entry points take row-major (B, d) float arrays and are pure.
The batched passes share a forward cache (pre-activations, activations,
activation derivatives) so each training step evaluates the exponentials
only once per layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import backward_pair, elu_act, elu_pair
from .errors import WidthMismatchError

ELU_ALPHA = 1.0
POSITIVITY_FLOOR = 1e-6


# ---------------------------------------------------------------------------
# second-order jet scalar type

@dataclass(frozen=True)
class Tangent:
    """Truncated second-order jet of a scalar quantity along one direction.

    `first` is the directional derivative, `second` the second directional
    derivative along the same direction (for `input_jet` with two distinct
    coordinates, `second` holds the mixed partial instead).
    """

    primal: float
    first: float = 0.0
    second: float = 0.0

    @staticmethod
    def constant(c: float) -> "Tangent":
        return Tangent(float(c), 0.0, 0.0)

    @staticmethod
    def seed(x: float, dx: float = 1.0) -> "Tangent":
        return Tangent(float(x), float(dx), 0.0)

    def __add__(self, other):
        other = _as_tangent(other)
        return Tangent(self.primal + other.primal, self.first + other.first,
                       self.second + other.second)

    __radd__ = __add__

    def __neg__(self):
        return Tangent(-self.primal, -self.first, -self.second)

    def __sub__(self, other):
        return self + (-_as_tangent(other))

    def __rsub__(self, other):
        return _as_tangent(other) + (-self)

    def __mul__(self, other):
        other = _as_tangent(other)
        return Tangent(
            self.primal * other.primal,
            self.first * other.primal + self.primal * other.first,
            self.second * other.primal + 2.0 * self.first * other.first
            + self.primal * other.second,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_tangent(other)
        inv = apply_unary(other, lambda p: 1.0 / p,
                          lambda p: -1.0 / p ** 2, lambda p: 2.0 / p ** 3)
        return self * inv

    def __rtruediv__(self, other):
        return _as_tangent(other) / self


def _as_tangent(v) -> Tangent:
    return v if isinstance(v, Tangent) else Tangent.constant(v)


def apply_unary(t: Tangent, f, df, d2f) -> Tangent:
    """Chain rule for a smooth scalar function applied to a jet."""
    p = t.primal
    return Tangent(f(p), df(p) * t.first,
                   d2f(p) * t.first ** 2 + df(p) * t.second)


# ---------------------------------------------------------------------------
# activations and their derivatives

def _elu_with_deriv(z):
    """(elu(z), elu'(z)) from a single exponential evaluation."""
    return elu_pair(z)


def _elu_second(z, dact):
    """elu''(z) given elu'(z); they coincide on the negative branch."""
    return np.where(z > 0, 0.0, dact)


def _softplus(z):
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------------------
# parameters

@dataclass
class NetworkParams:
    """Flat parameter vector plus the layer-size layout that interprets it.

    Layout per layer l: W_l (out x in, row-major) followed by b_l.
    """

    sizes: tuple[int, ...]
    theta: np.ndarray

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) < 2 or self.sizes[-1] != 1:
            raise ValueError(f"sizes must end in an output width of 1, got {self.sizes}")
        if any(s <= 0 for s in self.sizes):
            raise ValueError(f"layer sizes must be positive, got {self.sizes}")
        want = param_count(self.sizes)
        theta = np.asarray(self.theta, dtype=np.float64).ravel()
        if theta.size != want:
            raise ValueError(f"theta has {theta.size} entries, layout needs {want}")
        self.theta = theta

    @property
    def dim(self) -> int:
        return self.sizes[0]

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.sizes, self.theta.copy())


def param_count(sizes) -> int:
    return sum(o * i + o for i, o in zip(sizes[:-1], sizes[1:]))


def layer_views(params: NetworkParams):
    """List of (W, b) views into the flat vector; mutating them mutates theta."""
    out = []
    off = 0
    for fan_in, fan_out in zip(params.sizes[:-1], params.sizes[1:]):
        w = params.theta[off:off + fan_out * fan_in].reshape(fan_out, fan_in)
        off += fan_out * fan_in
        b = params.theta[off:off + fan_out]
        off += fan_out
        out.append((w, b))
    return out


def _grad_views(params: NetworkParams):
    grad = np.zeros_like(params.theta)
    views = []
    off = 0
    for fan_in, fan_out in zip(params.sizes[:-1], params.sizes[1:]):
        w = grad[off:off + fan_out * fan_in].reshape(fan_out, fan_in)
        off += fan_out * fan_in
        b = grad[off:off + fan_out]
        off += fan_out
        views.append((w, b))
    return grad, views


def init_network(sizes, rng: np.random.Generator) -> NetworkParams:
    """Uniform [-a, a] weights with a = sqrt(6/(fan_in+fan_out)); zero biases
    except the output bias, which starts the integrand at softplus(b) = 1 so
    the initial map is near the identity on standardized data."""
    params = NetworkParams(tuple(sizes), np.zeros(param_count(sizes)))
    views = layer_views(params)
    for w, b in views:
        fan_out, fan_in = w.shape
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w[:] = rng.uniform(-a, a, size=w.shape)
        b[:] = 0.0
    views[-1][1][:] = np.log(np.expm1(1.0))
    return params


def _check_width(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != params.dim:
        raise WidthMismatchError(params.dim, X.shape[1])
    return X


# ---------------------------------------------------------------------------
# forward / reverse passes over a shared cache

class _Cache:
    """Forward-pass state: acts[l] is the input to layer l (acts[0] = X),
    pres[l] its pre-activation, dacts[l] = elu'(pres[l]) for hidden layers."""

    __slots__ = ("layers", "pres", "acts", "dacts", "f", "sig")

    def __init__(self, params: NetworkParams, X: np.ndarray):
        self.layers = layer_views(params)
        last = len(self.layers) - 1
        self.pres = []
        self.acts = [X]
        self.dacts = []
        a = X
        for li, (w, b) in enumerate(self.layers):
            z = a @ w.T + b
            self.pres.append(z)
            if li < last:
                a, da = _elu_with_deriv(z)
                self.acts.append(a)
                self.dacts.append(da)
        zout = self.pres[-1][:, 0]
        self.sig = _sigmoid(zout)
        self.f = _softplus(zout) + POSITIVITY_FLOOR


class _TangentCache:
    """Tangent state matching a _Cache: adots[l] is the tangent of acts[l],
    pdots[l] the tangent of pres[l], seeded by the rows of C."""

    __slots__ = ("pdots", "adots", "fdot")

    def __init__(self, cache: _Cache, C: np.ndarray):
        last = len(cache.layers) - 1
        self.pdots = []
        self.adots = [C]
        adot = C
        for li, (w, _) in enumerate(cache.layers):
            zdot = adot @ w.T
            self.pdots.append(zdot)
            if li < last:
                adot = cache.dacts[li] * zdot
                self.adots.append(adot)
        self.fdot = cache.sig * self.pdots[-1][:, 0]


def forward_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    a = _check_width(params, X)
    layers = layer_views(params)
    last = len(layers) - 1
    for li, (w, b) in enumerate(layers):
        z = a @ w.T + b
        a = elu_act(z) if li < last else z
    return _softplus(a[:, 0]) + POSITIVITY_FLOOR


def forward_eval(params: NetworkParams, x) -> float:
    """f(x; psi) for a single input vector; strictly positive."""
    return float(forward_batch(params, np.asarray(x, dtype=np.float64)[None, :])[0])


def _input_grad_from_cache(cache: _Cache) -> np.ndarray:
    u = cache.sig[:, None]
    for li in range(len(cache.layers) - 1, 0, -1):
        u = (u @ cache.layers[li][0]) * cache.dacts[li - 1]
    return u @ cache.layers[0][0]


def input_grad_batch(params: NetworkParams, X: np.ndarray, cache: _Cache | None = None):
    """Returns (f, G) with G[i] = gradient of f at row i w.r.t. the inputs."""
    if cache is None:
        cache = _Cache(params, _check_width(params, X))
    return cache.f, _input_grad_from_cache(cache)


def hess_slot_batch(params: NetworkParams, X: np.ndarray, k: int):
    """Returns (f, G, H_k) with H_k[i, j] = d2 f / dx_j dx_k at row i.

    One forward pass with tangent direction e_k, then two reverse sweeps to
    the inputs: one for the gradient of f, one for the gradient of the
    directional derivative (which is the k-th Hessian row).
    """
    X = _check_width(params, X)
    if not 0 <= k < params.dim:
        raise IndexError(f"coordinate index {k} outside [0, {params.dim})")
    cache = _Cache(params, X)
    C = np.zeros_like(X)
    C[:, k] = 1.0
    tcache = _TangentCache(cache, C)
    grad = _input_grad_from_cache(cache)

    u = (cache.sig * (1.0 - cache.sig) * tcache.pdots[-1][:, 0])[:, None]
    v = cache.sig[:, None]
    for li in range(len(cache.layers) - 1, 0, -1):
        w = cache.layers[li][0]
        u, v = backward_pair(cache.pres[li - 1], cache.dacts[li - 1],
                             tcache.pdots[li - 1], u @ w, v @ w)
    hrow = u @ cache.layers[0][0]
    return cache.f, grad, hrow


def param_grad_batch(params: NetworkParams, X: np.ndarray, weights: np.ndarray,
                     cache: _Cache | None = None) -> np.ndarray:
    """Gradient of sum_i weights[i] * f(X[i]) with respect to theta."""
    if cache is None:
        cache = _Cache(params, _check_width(params, X))
    weights = np.asarray(weights, dtype=np.float64)
    grad, gviews = _grad_views(params)
    delta = (weights * cache.sig)[:, None]
    for li in range(len(cache.layers) - 1, -1, -1):
        gw, gb = gviews[li]
        gw += delta.T @ cache.acts[li]
        gb += delta.sum(axis=0)
        if li > 0:
            delta = (delta @ cache.layers[li][0]) * cache.dacts[li - 1]
    return grad


def param_grad_fused_batch(params: NetworkParams, X: np.ndarray,
                           weights: np.ndarray | None, C: np.ndarray,
                           cache: _Cache | None = None) -> np.ndarray:
    """Gradient of sum_i [weights[i]*f(X[i]) + sum_j C[i,j]*(df/dx_j)(X[i])].

    The input-derivative part is the directional derivative of f seeded with
    row C[i]; reverse accumulation runs through the tangent-augmented
    forward pass, so parameters collect contributions from both the primal
    and the tangent paths. The plain weighted-output cotangent rides the
    primal stream of the same sweep, saving a second backward pass.
    """
    X = _check_width(params, X)
    C = np.asarray(C, dtype=np.float64)
    if C.shape != X.shape:
        raise ValueError(f"direction matrix shape {C.shape} != input shape {X.shape}")
    if cache is None:
        cache = _Cache(params, X)
    tcache = _TangentCache(cache, C)
    grad, gviews = _grad_views(params)
    u = cache.sig * (1.0 - cache.sig) * tcache.pdots[-1][:, 0]
    if weights is not None:
        u = u + np.asarray(weights, dtype=np.float64) * cache.sig
    u = u[:, None]
    v = cache.sig[:, None]
    for li in range(len(cache.layers) - 1, -1, -1):
        gw, gb = gviews[li]
        gw += u.T @ cache.acts[li] + v.T @ tcache.adots[li]
        gb += u.sum(axis=0)
        if li > 0:
            w = cache.layers[li][0]
            u, v = backward_pair(cache.pres[li - 1], cache.dacts[li - 1],
                                 tcache.pdots[li - 1], u @ w, v @ w)
    return grad


def param_grad_mixed_batch(params: NetworkParams, X: np.ndarray, C: np.ndarray,
                           cache: _Cache | None = None) -> np.ndarray:
    """Gradient of sum_i sum_j C[i, j] * (d f / dx_j)(X[i]) w.r.t. theta."""
    return param_grad_fused_batch(params, X, None, C, cache=cache)


# ---------------------------------------------------------------------------
# single-point operation entry points

def input_jet(params: NetworkParams, x, dirs) -> Tangent:
    """f plus its first/second input derivatives along coordinate directions.

    dirs is one index (first and pure second derivative along it) or a pair
    (j, l) (first derivative along j, mixed second derivative d2f/dxj dxl).
    Propagates a two-direction second-order jet through every layer.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != params.dim:
        raise WidthMismatchError(params.dim, x.size)
    if np.isscalar(dirs) or isinstance(dirs, (int, np.integer)):
        dirs = (int(dirs),)
    dirs = tuple(int(j) for j in dirs)
    if len(dirs) == 1:
        dirs = (dirs[0], dirs[0])
    if len(dirs) != 2:
        raise ValueError("dirs must contain one or two coordinate indices")
    for j in dirs:
        if not 0 <= j < params.dim:
            raise IndexError(f"coordinate index {j} outside [0, {params.dim})")

    p = x
    da = np.zeros_like(x)
    db = np.zeros_like(x)
    da[dirs[0]] = 1.0
    db[dirs[1]] = 1.0
    dab = np.zeros_like(x)
    layers = layer_views(params)
    for li, (w, b) in enumerate(layers):
        p, da, db, dab = w @ p + b, w @ da, w @ db, w @ dab
        if li < len(layers) - 1:
            act, d1 = _elu_with_deriv(p)
            d2 = _elu_second(p, d1)
            dab = d2 * da * db + d1 * dab
            da, db = d1 * da, d1 * db
            p = act
    z, za, zb, zab = p[0], da[0], db[0], dab[0]
    sig = float(_sigmoid(np.array([z]))[0])
    val = float(_softplus(np.array([z]))[0]) + POSITIVITY_FLOOR
    return Tangent(val, sig * za, sig * (1.0 - sig) * za * zb + sig * zab)


def param_gradient(params: NetworkParams, x, upstream: float) -> np.ndarray:
    """Reverse accumulation of upstream * f(x) into a flat parameter gradient."""
    x = np.asarray(x, dtype=np.float64)
    return param_grad_batch(params, x[None, :], np.array([float(upstream)]))


def param_gradient_input_derivative(params: NetworkParams, x, j: int) -> np.ndarray:
    """Gradient of (d f / dx_j)(x) with respect to theta (forward-over-reverse)."""
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= j < params.dim:
        raise IndexError(f"coordinate index {j} outside [0, {params.dim})")
    C = np.zeros((1, params.dim))
    C[0, j] = 1.0
    return param_grad_mixed_batch(params, x[None, :], C)
