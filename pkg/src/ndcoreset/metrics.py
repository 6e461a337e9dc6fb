"""Weighted contingency tables, F1, MCC and the d_v distance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset


class Score(float):
    """A float carrying a ``degenerate`` flag (undefined ratio reported as 0)."""

    degenerate: bool

    def __new__(cls, value, degenerate=False):
        obj = super().__new__(cls, value)
        obj.degenerate = degenerate
        return obj


@dataclass(frozen=True)
class ContingencyTable:
    tp: float
    fp: float
    fn: float
    tn: float

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            v = getattr(self, name)
            if not v >= 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")

    @property
    def total(self) -> float:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def t_prime(self) -> float:
        """Fraction of ground-truth positives."""
        return (self.tp + self.fn) / self.total

    @property
    def p_prime(self) -> float:
        """Fraction of predicted positives."""
        return (self.tp + self.fp) / self.total

    def scaled(self, factor: float) -> "ContingencyTable":
        return ContingencyTable(self.tp * factor, self.fp * factor, self.fn * factor, self.tn * factor)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True, eq=False)
class LinearQuery:
    """Linear classifier ``sign(w . x')``.

    With ``augment=True`` (the default) ``weights`` has ``dim + 1`` entries and
    ``x'`` is ``x`` with a constant 1 appended; the last weight acts as the bias.
    With ``augment=False`` the points already carry their own offset coordinate
    and ``weights`` has exactly ``dim`` entries.
    """

    weights: np.ndarray
    augment: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError("query weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size - 1 if self.augment else self.weights.size

    def decision(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.dim:
            raise ValueError(f"query expects dim {self.dim}, data has dim {X.shape[1]}")
        if self.augment:
            return X @ self.weights[:-1] + self.weights[-1]
        return X @ self.weights

    def predict(self, X: np.ndarray) -> np.ndarray:
        # decision value exactly 0 predicts -1
        return np.where(self.decision(X) > 0, 1, -1).astype(np.int8)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "augment": self.augment}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearQuery":
        return cls(d["weights"], d.get("augment", True))


def table_from_predictions(y, pred, weights=None) -> ContingencyTable:
    y = np.asarray(y)
    pred = np.asarray(pred)
    w = np.ones(y.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    pos_true = y == 1
    pos_pred = pred == 1
    return ContingencyTable(
        tp=float(w[pos_true & pos_pred].sum()),
        fp=float(w[~pos_true & pos_pred].sum()),
        fn=float(w[pos_true & ~pos_pred].sum()),
        tn=float(w[~pos_true & ~pos_pred].sum()),
    )


def contingency(data: Dataset, query: LinearQuery, weights=None) -> ContingencyTable:
    """Weighted tp/fp/fn/tn of ``query`` on ``data``.

    ``weights`` defaults to the dataset's own point weights.
    """
    w = data.weight if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape[0] != data.n:
        raise ValueError(f"{w.shape[0]} weights for {data.n} points")
    return table_from_predictions(data.y, query.predict(data.X), w)


def f1(t: ContingencyTable) -> Score:
    denom = t.tp + 0.5 * (t.fp + t.fn)
    if denom == 0:
        return Score(0.0, degenerate=True)
    return Score(t.tp / denom)


def mcc(t: ContingencyTable) -> Score:
    prod = (t.tp + t.fp) * (t.tp + t.fn) * (t.tn + t.fp) * (t.tn + t.fn)
    if prod == 0:
        return Score(0.0, degenerate=True)
    return Score((t.tp * t.tn - t.fp * t.fn) / math.sqrt(prod))


def mcc_normalized(t: ContingencyTable) -> Score:
    """MCC through the rate form (tp/n - T'P') / sqrt(T'P'(1-T')(1-P'))."""
    n = t.total
    if n == 0:
        return Score(0.0, degenerate=True)
    tq, pq = t.t_prime, t.p_prime
    prod = tq * pq * (1.0 - tq) * (1.0 - pq)
    if prod <= 0:
        return Score(0.0, degenerate=True)
    return Score((t.tp / n - tq * pq) / math.sqrt(prod))


def mcc_numerator(t: ContingencyTable) -> float:
    return t.tp * t.tn - t.fp * t.fn


def dv_distance(a: float, b: float, v: float) -> float:
    """|a - b| / (a + b + v)."""
    if not v > 0:
        raise ValueError(f"v must be positive, got {v}")
    if a < 0 or b < 0:
        raise ValueError("a and b must be nonnegative")
    return abs(a - b) / (a + b + v)


def prediction_matrix(X: np.ndarray, queries) -> np.ndarray:
    """Boolean ``(n, len(queries))`` matrix: True where a query predicts +1."""
    if not queries:
        return np.zeros((X.shape[0], 0), dtype=bool)
    augment = {q.augment for q in queries}
    if len(augment) != 1:
        raise ValueError("queries mix augmented and non-augmented modes")
    W = np.stack([q.weights for q in queries], axis=1)
    if augment.pop():
        if X.shape[1] + 1 != W.shape[0]:
            raise ValueError(f"queries expect dim {W.shape[0] - 1}, data has dim {X.shape[1]}")
        return X @ W[:-1] + W[-1] > 0
    if X.shape[1] != W.shape[0]:
        raise ValueError(f"queries expect dim {W.shape[0]}, data has dim {X.shape[1]}")
    return X @ W > 0


def batch_tables(y, pred, weights) -> np.ndarray:
    """Weighted (tp, fp, fn, tn) for many queries at once; returns shape ``(4, q)``."""
    y = np.asarray(y)
    w = np.ones(y.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    pos = y == 1
    wp, wn = w[pos], w[~pos]
    pp, pn = pred[pos], pred[~pos]
    tp = wp @ pp
    fn = wp.sum() - tp
    fp = wn @ pn
    tn = wn.sum() - fp
    return np.vstack([tp, fp, fn, tn])


def batch_f1(tables: np.ndarray) -> np.ndarray:
    tp, fp, fn, _ = tables
    denom = tp + 0.5 * (fp + fn)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0, tp / np.where(denom > 0, denom, 1.0), 0.0)


def batch_mcc(tables: np.ndarray) -> np.ndarray:
    tp, fp, fn, tn = tables
    prod = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    safe = np.where(prod > 0, prod, 1.0)
    return np.where(prod > 0, (tp * tn - fp * fn) / np.sqrt(safe), 0.0)
