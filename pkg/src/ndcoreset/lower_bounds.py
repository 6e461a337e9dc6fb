"""Adversarial point sets on which no strong coreset smaller than the data exists.

Each of the ``n = C(d, d/2)`` points owns a distinct half-size subset ``B_p`` of
``[d]`` and a matched classifier ``w_p`` that is 0 on ``B_p`` and 1 elsewhere
(including the offset coordinate ``d+1``).  ``w_p`` classifies ``p`` with margin
1/2 and every other point ``q`` by a sign fixed at construction, so dropping
``p`` changes the matched query's contingency table by exactly one count.

All coordinates are multiples of 1/2 and d <= 16, so every dot product and
count below is exact in floating point.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb

import numpy as np

from .data import Dataset, write_sparse_text
from .metrics import (
    ContingencyTable,
    LinearQuery,
    f1,
    mcc,
    mcc_numerator,
    table_from_predictions,
)
from .samplers import get_sampler

MAX_D = 16


@dataclass(frozen=True, eq=False)
class AdversarialInstance:
    mode: str
    d: int
    data: Dataset
    subsets: list
    matched_queries: list
    x_signs: np.ndarray | None = None
    label_rule: str | None = None
    x_rule: str | None = None

    @property
    def n(self) -> int:
        return self.data.n

    def matched_indices(self) -> list[int]:
        """Points whose matched query is part of the lower-bound argument."""
        if self.mode == "F1":
            return [int(i) for i in np.flatnonzero(self.data.y == 1)]
        return list(range(self.n))

    def sidecar(self) -> dict:
        return {
            "mode": self.mode,
            "d": self.d,
            "n": self.n,
            "label_rule": self.label_rule,
            "x_rule": self.x_rule,
            "labels": self.data.y.tolist(),
            "subsets": [list(s) for s in self.subsets],
            "x_signs": None if self.x_signs is None else self.x_signs.tolist(),
            "matched_queries": [q.weights.tolist() for q in self.matched_queries],
        }

    def export(self, data_fh, sidecar_fh) -> None:
        write_sparse_text(self.data, data_fh)
        json.dump(self.sidecar(), sidecar_fh, indent=2)


def _check_d(d, minimum):
    if d % 2:
        raise ValueError(f"d must be even, got {d}")
    if d < minimum:
        raise ValueError(f"d must be at least {minimum}, got {d}")
    if d > MAX_D:
        raise ValueError(f"d is capped at {MAX_D}, got {d}")


def _subsets(d):
    return list(itertools.combinations(range(d), d // 2))


def _matched_query(d, subset) -> LinearQuery:
    w = np.ones(d + 1)
    w[list(subset)] = 0.0
    return LinearQuery(w, augment=False)


def gen_f1_instance(d: int, label_rule: str = "all_positive") -> AdversarialInstance:
    """Points ``p_i = -y_p`` on ``B_p``, 0 elsewhere, ``p_{d+1} = y_p / 2``."""
    _check_d(d, 2)
    subsets = _subsets(d)
    n = len(subsets)
    if label_rule == "all_positive":
        y = np.ones(n, dtype=np.int8)
    elif label_rule == "alternating":
        y = np.where(np.arange(n) % 2 == 0, 1, -1).astype(np.int8)
    else:
        raise ValueError(f"unknown label_rule {label_rule!r}")
    X = np.zeros((n, d + 1))
    for i, B in enumerate(subsets):
        X[i, list(B)] = -y[i]
        X[i, d] = y[i] / 2
    queries = [_matched_query(d, B) for B in subsets]
    inst = AdversarialInstance("F1", d, Dataset(X, y), subsets, queries, label_rule=label_rule)
    _check_signs(inst, lambda q: -int(y[q]))
    return inst


def mcc_x_signs(y: np.ndarray, x_rule: str = "half") -> np.ndarray:
    """Per-point sign ``X_p``.

    ``half``: within each class, the first ``floor(size / 2)`` points (in point
    order) get ``X_p = y_p`` and the rest ``-y_p``.  ``all_negative``: every
    ``X_p = -1``.
    """
    if x_rule == "all_negative":
        return -np.ones(y.size, dtype=np.int8)
    if x_rule != "half":
        raise ValueError(f"unknown x_rule {x_rule!r}")
    x = np.empty(y.size, dtype=np.int8)
    for label in (1, -1):
        members = np.flatnonzero(y == label)
        half = members.size // 2
        x[members[:half]] = label
        x[members[half:]] = -label
    return x


def gen_mcc_instance(d: int, x_rule: str = "half") -> AdversarialInstance:
    """Points ``p_i = X_p`` on ``B_p``, 0 elsewhere, ``p_{d+1} = y_p / 2``.

    The first ``n/2`` points (lexicographic subset order) are labeled +1.
    """
    _check_d(d, 4)
    subsets = _subsets(d)
    n = len(subsets)
    y = np.where(np.arange(n) < n // 2, 1, -1).astype(np.int8)
    x_signs = mcc_x_signs(y, x_rule)
    X = np.zeros((n, d + 1))
    for i, B in enumerate(subsets):
        X[i, list(B)] = x_signs[i]
        X[i, d] = y[i] / 2
    queries = [_matched_query(d, B) for B in subsets]
    inst = AdversarialInstance("MCC", d, Dataset(X, y), subsets, queries, x_signs=x_signs, x_rule=x_rule)
    _check_signs(inst, lambda q: int(x_signs[q]))
    return inst


def _check_signs(inst: AdversarialInstance, other_sign) -> None:
    X, y = inst.data.X, inst.data.y
    for p, query in enumerate(inst.matched_queries):
        vals = X @ query.weights
        if vals[p] != y[p] / 2:
            raise AssertionError(f"point {p}: matched margin {vals[p]} != {y[p] / 2}")
        for q in range(inst.n):
            if q != p and (abs(vals[q]) < 0.5 or np.sign(vals[q]) != other_sign(q)):
                raise AssertionError(f"point {q} under w_{p}: value {vals[q]}")


@dataclass(frozen=True)
class CollapseRecord:
    index: int
    label: int
    full_table: ContingencyTable
    omitted_table: ContingencyTable
    full_score: float
    omitted_score: float
    full_numerator: float
    omitted_numerator: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "label": self.label,
            "full_table": self.full_table.as_dict(),
            "omitted_table": self.omitted_table.as_dict(),
            "full_score": self.full_score,
            "omitted_score": self.omitted_score,
            "full_numerator": self.full_numerator,
            "omitted_numerator": self.omitted_numerator,
        }


def _score(mode, t):
    return float(f1(t)) if mode == "F1" else float(mcc(t))


def demonstrate_collapse(inst: AdversarialInstance, omit: int) -> CollapseRecord:
    """Score of ``w_omit`` on the full instance and on the instance without ``omit``."""
    if not 0 <= omit < inst.n:
        raise IndexError(f"omit must lie in [0, {inst.n}), got {omit}")
    y = inst.data.y
    if inst.mode == "F1" and y[omit] != 1:
        raise ValueError("F1 collapse is defined for positive points only")
    pred = inst.matched_queries[omit].predict(inst.data.X)
    keep = np.arange(inst.n) != omit
    full_t = table_from_predictions(y, pred)
    omit_t = table_from_predictions(y[keep], pred[keep])
    return CollapseRecord(
        index=int(omit),
        label=int(y[omit]),
        full_table=full_t,
        omitted_table=omit_t,
        full_score=_score(inst.mode, full_t),
        omitted_score=_score(inst.mode, omit_t),
        full_numerator=mcc_numerator(full_t),
        omitted_numerator=mcc_numerator(omit_t),
    )


def all_collapses(inst: AdversarialInstance) -> list[CollapseRecord]:
    return [demonstrate_collapse(inst, p) for p in inst.matched_indices()]


def f1_full_score_closed_form(inst: AdversarialInstance, p: int) -> float:
    """``1 / (1 + (fp + fn) / 2)`` with tp = 1 and every other point misclassified."""
    assert inst.mode == "F1"
    return 1.0 / (1.0 + (inst.n - 1) / 2.0)


def coreset_failure_sweep(inst: AdversarialInstance, strategy: str, m: int, trials: int, seed: int, exhaustive=False) -> dict:
    """Fraction of matched queries that a size-``m`` coreset collapses to score 0.

    A query collapses in a trial when its full-instance score is positive and
    its weighted score on the coreset is exactly 0.
    """
    if not exhaustive and m >= inst.n:
        raise ValueError(f"m must be below n={inst.n}")
    if trials < 1:
        raise ValueError("trials must be positive")
    sampler = get_sampler(strategy)
    indices = inst.matched_indices()
    preds = {p: inst.matched_queries[p].predict(inst.data.X) for p in indices}
    full_scores = {p: _score(inst.mode, table_from_predictions(inst.data.y, preds[p])) for p in indices}
    eligible = [p for p in indices if full_scores[p] > 0]

    per_trial = []
    for t in range(trials):
        cs = sampler(inst.data, m, seed + t, exhaustive=exhaustive)
        y_c = inst.data.y[cs.indices]
        collapsed = 0
        for p in eligible:
            table = table_from_predictions(y_c, preds[p][cs.indices], cs.weights)
            if _score(inst.mode, table) == 0.0:
                collapsed += 1
        per_trial.append(collapsed)
    per_trial = np.asarray(per_trial)
    return {
        "mode": inst.mode,
        "d": inst.d,
        "n": inst.n,
        "strategy": strategy,
        "m": m,
        "trials": trials,
        "seed": seed,
        "exhaustive": exhaustive,
        "eligible_queries": len(eligible),
        "collapses_per_trial": per_trial.tolist(),
        "collapse_fraction": float(per_trial.sum() / (len(eligible) * trials)) if eligible else 0.0,
    }


def expected_n(d: int) -> int:
    return comb(d, d // 2)
