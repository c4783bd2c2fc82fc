"""Per-node training: data splitting, Adam, early stopping, lambda selection.

Each node's component trains independently on the training rows; after every
epoch the unregularized negative log-likelihood on the validation rows
decides early stopping (quit after `patience` epochs without improvement,
return the best-validation parameters). The regularization weight is picked
by scanning a grid and keeping the fit with the lowest validation NLL, ties
going to the larger (sparser) lambda.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network as net
from .component import MapComponent
from .errors import DataError, TrainingDivergedError
from .objective import loss_gradient, nll
from .quadrature import cc_rule

FULL_BATCH_LIMIT = 2048
MINIBATCH_SIZE = 256


@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


@dataclass
class SplitDataset:
    train: np.ndarray
    validation: np.ndarray
    estimation: np.ndarray
    names: list[str]
    standardizer: Standardizer

    @property
    def dim(self) -> int:
        return self.train.shape[1]


@dataclass
class TrainConfig:
    lambda_grid: tuple[float, ...] = (1.0, 0.1, 0.01, 0.001, 0.0)
    max_epochs: int = 500
    patience: int = 10
    learning_rate: float = 1e-3
    batch_size: int | str | None = None   # None: full batch up to 2048 rows, else 256
    seed: int = 0
    hidden: tuple[int, ...] = (64, 64, 64)
    quad_nodes: int = 21

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not self.lambda_grid:
            raise ValueError("lambda grid must be nonempty")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")

    def resolve_batch_size(self, n_train: int) -> int:
        if self.batch_size is None or self.batch_size == "full":
            if self.batch_size == "full" or n_train <= FULL_BATCH_LIMIT:
                return n_train
            return MINIBATCH_SIZE
        bs = int(self.batch_size)
        if bs < 1:
            raise ValueError("batch size must be positive")
        return min(bs, n_train)


def split_standardize(raw: np.ndarray, sizes, seed: int) -> SplitDataset:
    """Shuffle deterministically, partition into train/validation/estimation,
    and standardize with per-column mean/sd fitted on the full raw matrix.

    `sizes` is a (train, validation, estimation) triple of row counts summing
    to the number of rows, or of fractions (estimation takes the remainder).
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2:
        raise DataError("expected a 2-d sample matrix")
    m = raw.shape[0]
    a, b, c = sizes
    if all(isinstance(v, float) and v <= 1.0 for v in (a, b, c)):
        na, nb = int(round(a * m)), int(round(b * m))
        nc = m - na - nb
    else:
        na, nb, nc = int(a), int(b), int(c)
    if min(na, nb, nc) <= 0 or na + nb + nc != m:
        raise DataError(f"split sizes {(na, nb, nc)} do not partition {m} rows")
    mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    if np.any(std == 0):
        bad = int(np.flatnonzero(std == 0)[0])
        raise DataError(f"column {bad} is constant; cannot standardize")
    stz = Standardizer(mean=mean, std=std)
    perm = np.random.default_rng(seed).permutation(m)
    z = stz.apply(raw[perm])
    names = [f"x{j}" for j in range(raw.shape[1])]
    return SplitDataset(train=z[:na], validation=z[na:na + nb],
                        estimation=z[na + nb:], names=names, standardizer=stz)


class EarlyStopper:
    """Tracks the best validation value; signals a stop after `patience`
    consecutive non-improving feeds."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.bad = 0

    def feed(self, epoch: int, value: float) -> tuple[bool, bool]:
        """Returns (is_new_best, should_stop)."""
        if value < self.best:
            self.best = value
            self.best_epoch = epoch
            self.bad = 0
            return True, False
        self.bad += 1
        return False, self.bad >= self.patience


class _Adam:
    def __init__(self, n: int, lr: float, b1: float = 0.9, b2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad ** 2
        mh = self.m / (1 - self.b1 ** self.t)
        vh = self.v / (1 - self.b2 ** self.t)
        return theta - self.lr * mh / (np.sqrt(vh) + self.eps)


@dataclass
class EpochRecord:
    epoch: int
    train_total: float
    train_nll: float
    val_nll: float


def train_component(k: int, data: SplitDataset, cfg: TrainConfig, lam: float,
                    lam_index: int = 0):
    """Adam on the regularized loss; returns (component, history, best_val_nll)."""
    d = data.dim
    if not 0 <= k < d:
        raise IndexError(f"target index {k} outside [0, {d})")
    rng = np.random.default_rng((cfg.seed, k, lam_index))
    rule = cc_rule(cfg.quad_nodes)
    sizes = (d, *cfg.hidden, 1)
    params = net.init_network(sizes, rng)
    mc = MapComponent(k=k, params=params, beta=0.0, rule=rule)
    n_train = data.train.shape[0]
    bs = cfg.resolve_batch_size(n_train)
    vec = np.concatenate([params.theta, [0.0]])
    adam = _Adam(vec.size, cfg.learning_rate)
    stopper = EarlyStopper(cfg.patience)
    best_vec = vec.copy()
    history: list[EpochRecord] = []

    for epoch in range(1, cfg.max_epochs + 1):
        if bs >= n_train:
            order = np.arange(n_train)
        else:
            order = rng.permutation(n_train)
        tot_sum = nll_sum = 0.0
        nbatches = 0
        for lo in range(0, n_train, bs):
            rows = data.train[order[lo:lo + bs]]
            mc.params.theta = vec[:-1]
            mc.beta = float(vec[-1])
            g, gb, rep = loss_gradient(mc, rows, lam)
            if not (np.isfinite(rep.total) and np.all(np.isfinite(g)) and np.isfinite(gb)):
                raise TrainingDivergedError(k, epoch)
            vec = adam.step(vec, np.concatenate([g, [gb]]))
            tot_sum += rep.total
            nll_sum += rep.nll
            nbatches += 1
        mc.params.theta = vec[:-1]
        mc.beta = float(vec[-1])
        val = nll(mc, data.validation)
        if not np.isfinite(val):
            raise TrainingDivergedError(k, epoch)
        history.append(EpochRecord(epoch, tot_sum / nbatches, nll_sum / nbatches, val))
        is_best, stop = stopper.feed(epoch, val)
        if is_best:
            best_vec = vec.copy()
        if stop:
            break

    best_params = net.NetworkParams(sizes, best_vec[:-1].copy())
    out = MapComponent(k=k, params=best_params, beta=float(best_vec[-1]), rule=rule)
    return out, history, stopper.best


def select_lambda(k: int, data: SplitDataset, cfg: TrainConfig):
    """Train once per grid value; keep the lowest validation NLL, ties to the
    larger lambda. Returns (lambda, component, history, val_nll)."""
    best = None
    failures = []
    for li, lam in enumerate(cfg.lambda_grid):
        try:
            mcomp, history, val = train_component(k, data, cfg, lam, lam_index=li)
        except TrainingDivergedError as exc:
            failures.append(exc)
            continue
        if best is None or val < best[3] or (val == best[3] and lam > best[0]):
            best = (lam, mcomp, history, val)
    if best is None:
        raise TrainingDivergedError(k, -1) from (failures[-1] if failures else None)
    return best
