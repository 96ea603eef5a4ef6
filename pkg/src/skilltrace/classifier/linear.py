"""Linear binary classifier trained by SGD on the modified-huber loss."""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from ..corpus import PermissionClass
from ..errors import TrainingError

DEFAULT_ALPHA = 1e-5
DEFAULT_EPOCHS = 20
DEFAULT_SEED = 1758


@dataclass(frozen=True)
class BalanceConfig:
    min_size: int = 2000
    max_size: int = 8000
    # Negatives kept per positive: at least 1, at most max_negative_ratio.
    max_negative_ratio: float = 2.0


@dataclass(frozen=True)
class TrainingConfig:
    ngram_sizes: tuple[int, ...] = (1, 2, 3)
    loss: str = "modified_huber"
    alpha: float = DEFAULT_ALPHA
    epochs: int = DEFAULT_EPOCHS
    balance: BalanceConfig = field(default_factory=BalanceConfig)
    rng_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.loss != "modified_huber":
            raise ValueError(f"unsupported loss {self.loss!r}")


def modified_huber_loss(y, f):
    z = np.multiply(y, f)
    return np.where(z >= -1.0, np.maximum(0.0, 1.0 - z) ** 2, -4.0 * z)


def modified_huber_dloss(y, f):
    """Derivative of the loss with respect to the decision value ``f``."""
    z = np.multiply(y, f)
    return np.where(z >= 1.0, 0.0, np.where(z >= -1.0, -2.0 * np.multiply(y, 1.0 - z), -4.0 * np.asarray(y, float)))


def sample_objective(w, b, x, y, alpha):
    """Per-sample objective: loss at ``w.x + b`` plus ``alpha * ||w||^2``."""
    return float(modified_huber_loss(y, np.dot(w, x) + b)) + alpha * float(np.dot(w, w))


def sample_gradient(w, b, x, y, alpha):
    g = float(modified_huber_dloss(y, np.dot(w, x) + b))
    return g * np.asarray(x, float) + 2.0 * alpha * np.asarray(w, float), g


@numba.njit(cache=True, nogil=True)
def _sgd(indptr, indices, data, y, n_features, alpha, t0, orders):
    w = np.zeros(n_features)
    wscale = 1.0
    b = 0.0
    t = 0
    for e in range(orders.shape[0]):
        for k in range(orders.shape[1]):
            i = orders[e, k]
            eta = 1.0 / (alpha * (t + t0))
            p = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                p += w[indices[j]] * data[j]
            p = p * wscale + b
            yi = y[i]
            z = yi * p
            if z >= 1.0:
                g = 0.0
            elif z >= -1.0:
                g = -2.0 * yi * (1.0 - z)
            else:
                g = -4.0 * yi
            wscale *= 1.0 - 2.0 * alpha * eta
            if g != 0.0:
                upd = -eta * g / wscale
                for j in range(indptr[i], indptr[i + 1]):
                    w[indices[j]] += upd * data[j]
                b -= eta * g
            if wscale < 1e-9:
                w *= wscale
                wscale = 1.0
            t += 1
    return w * wscale, b


@dataclass(frozen=True, eq=False)
class BinaryClassModel:
    target: PermissionClass
    weights: np.ndarray
    bias: float

    def decision(self, vec) -> float:
        return vec.dot(self.weights) + self.bias

    def decision_csr(self, indptr, indices, data) -> np.ndarray:
        n_rows = len(indptr) - 1
        rows = np.repeat(np.arange(n_rows), np.diff(indptr))
        sums = np.bincount(rows, weights=self.weights[indices] * data, minlength=n_rows)
        return sums + self.bias


def train_binary(target, matrix, labels, n_features, config: TrainingConfig,
                 rng: np.random.Generator) -> BinaryClassModel:
    """Fit one model on CSR ``matrix`` = (indptr, indices, data) with ±1 ``labels``."""
    y = np.asarray(labels, dtype=np.float64)
    if y.size == 0 or np.all(y > 0) or np.all(y < 0):
        raise TrainingError(f"{target}: training set must contain both classes")
    indptr, indices, data = matrix
    orders = np.stack([rng.permutation(y.size) for _ in range(config.epochs)]).astype(np.int64)
    # eta_0 = 1 / (alpha * t0) = 1
    t0 = 1.0 / config.alpha
    w, b = _sgd(indptr, indices, data, y, n_features, config.alpha, t0, orders)
    return BinaryClassModel(target, w, float(b))
