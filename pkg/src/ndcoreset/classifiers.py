"""Weight-aware linear classifiers trained by full-batch (sub)gradient descent."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .metrics import LinearQuery


class TrainingError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer settings.

    The logistic loss uses a constant step; the hinge loss uses
    ``step_size / sqrt(epoch)``.  Parameters start at zero and the optimizer is
    full-batch, so ``seed`` does not change the result; it is kept so configs
    round-trip through reports unchanged.
    """

    loss: str = "logistic"
    l2_reg: float = 1e-4
    epochs: int = 300
    step_size: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.loss not in ("logistic", "hinge"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.l2_reg < 0:
            raise ValueError("l2_reg must be nonnegative")


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``sign(weights . x + bias)`` in the original (unstandardized) feature space."""

    weights: np.ndarray
    bias: float

    @property
    def dim(self) -> int:
        return self.weights.size

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"model expects dim {self.dim}, got shape {X.shape}")
        return X @ self.weights + self.bias

    def as_query(self) -> LinearQuery:
        return LinearQuery(np.append(self.weights, self.bias))

    def to_dict(self) -> dict:
        return {"weights": [float(v) for v in self.weights], "bias": float(self.bias)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]))


def predict(model: LinearModel, data) -> np.ndarray:
    X = data.X if isinstance(data, Dataset) else data
    return np.where(model.decision_function(X) > 0, 1, -1).astype(np.int8)


def _standardizer(X, w):
    total = w.sum()
    mean = (w @ X) / total
    var = (w @ (X - mean) ** 2) / total
    scale = np.sqrt(var)
    scale[scale < 1e-12] = 1.0
    return mean, scale


def _loss_and_grad(Z, y, w, theta, loss, l2):
    """Weighted-mean loss plus ``l2/2 |coef|^2`` and its (sub)gradient; bias unpenalized."""
    coef, b = theta[:-1], theta[-1]
    margin = y * (Z @ coef + b)
    if loss == "logistic":
        value = w @ np.logaddexp(0.0, -margin)
        dmargin = -w * _sigmoid(-margin)
    else:
        value = w @ np.maximum(0.0, 1.0 - margin)
        dmargin = -w * (margin < 1.0)
    g = dmargin * y
    grad = np.empty_like(theta)
    grad[:-1] = Z.T @ g + l2 * coef
    grad[-1] = g.sum()
    return value + 0.5 * l2 * coef @ coef, grad


def _sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def train(data: Dataset, cfg: TrainConfig = TrainConfig(), history: list | None = None) -> LinearModel:
    """Fit a linear classifier on ``data`` using its point weights.

    Minimizes ``sum_i mu_i loss(y_i, w.x_i + b) / sum_i mu_i + l2/2 |w|^2`` on
    features standardized with weighted training statistics.  If ``history``
    is given, the objective before each epoch is appended to it.
    """
    if data.n_pos == 0 or data.n_neg == 0:
        raise TrainingError("training data must contain both classes")
    mu = data.weight
    total = mu.sum()
    if total <= 0:
        raise TrainingError("training weights sum to zero")
    w = mu / total
    mean, scale = _standardizer(data.X, w)
    Z = (data.X - mean) / scale
    y = data.y.astype(np.float64)

    theta = np.zeros(data.dim + 1)
    for epoch in range(1, cfg.epochs + 1):
        value, grad = _loss_and_grad(Z, y, w, theta, cfg.loss, cfg.l2_reg)
        if history is not None:
            history.append(float(value))
        step = cfg.step_size if cfg.loss == "logistic" else cfg.step_size / np.sqrt(epoch)
        theta = theta - step * grad

    coef = theta[:-1] / scale
    bias = float(theta[-1] - coef @ mean)
    return LinearModel(coef, bias)


def objective(data: Dataset, model: LinearModel, cfg: TrainConfig) -> float:
    """Training objective of ``model`` in the standardized space used by :func:`train`."""
    w = data.weight / data.weight.sum()
    mean, scale = _standardizer(data.X, w)
    Z = (data.X - mean) / scale
    coef = model.weights * scale
    theta = np.append(coef, model.bias + model.weights @ mean)
    value, _ = _loss_and_grad(Z, data.y.astype(np.float64), w, theta, cfg.loss, cfg.l2_reg)
    return float(value)
