"""Coreset constructions.

Every sampler returns a :class:`Coreset` whose weights make the weighted
contingency table over the sampled rows an unbiased estimate of the full
table.  ``exhaustive=True`` returns every row once with weight 1, which is the
identity coreset of each scheme.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np

from .data import Dataset, stratum_quota
from .numerics import leverage_scores, lewis_weights


class SamplingError(ValueError):
    pass


def _ceil(x: float) -> int:
    # absorb float noise: gamma=0.3, eps=0.85, d+ln(1/delta)=9 evaluates to 400.00000000000006
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


@dataclass(frozen=True)
class SampleSizePlan:
    mode: str
    s1: int
    s2: int
    s3: int
    s4: int
    gamma: float | None
    epsilon: float
    delta: float
    d: int
    n_pos: int
    n_neg: int
    const_factor: float

    @property
    def total(self) -> int:
        return self.s1 + self.s2 + self.s3 + self.s4

    @property
    def positive_size(self) -> int:
        return self.s1 + self.s2

    @property
    def negative_size(self) -> int:
        return self.s3 + self.s4

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SampleSizePlan":
        d = dict(d)
        d.pop("total", None)
        return cls(**d)


def _check_common(epsilon, delta, d, n_pos, n_neg, const_factor):
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if d < 1:
        raise ValueError("d must be a positive integer")
    if n_pos < 1 or n_neg < 1:
        raise ValueError("both classes need at least one point")
    if not const_factor > 0:
        raise ValueError("const_factor must be positive")


def f1_sample_size(gamma, epsilon, delta, d, n_pos, n_neg, const_factor=1.0) -> SampleSizePlan:
    """Per-count sample sizes for the F1 weak coreset (tp, fn from positives; fp from negatives)."""
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    _check_common(epsilon, delta, d, n_pos, n_neg, const_factor)
    base = const_factor * (d + math.log(1.0 / delta)) / epsilon**2
    ratio = n_neg / n_pos
    return SampleSizePlan(
        mode="F1",
        s1=_ceil(base * (2.0 - gamma) ** 2 / gamma**2),
        s2=_ceil(base),
        s3=_ceil(base * ratio**2),
        s4=0,
        gamma=float(gamma),
        epsilon=float(epsilon),
        delta=float(delta),
        d=int(d),
        n_pos=int(n_pos),
        n_neg=int(n_neg),
        const_factor=float(const_factor),
    )


def mcc_sample_size(epsilon, delta, d, n_pos, n_neg, const_factor=1.0, gamma=None) -> SampleSizePlan:
    """Per-count sample sizes for the MCC weak coreset (tp, fn, fp, tn)."""
    _check_common(epsilon, delta, d, n_pos, n_neg, const_factor)
    base = const_factor * (d + math.log(1.0 / delta)) / epsilon**2
    ratio = n_neg / n_pos
    s_pos = _ceil(base)
    s_neg = _ceil(base * ratio**2)
    return SampleSizePlan(
        mode="MCC",
        s1=s_pos,
        s2=s_pos,
        s3=s_neg,
        s4=s_neg,
        gamma=None if gamma is None else float(gamma),
        epsilon=float(epsilon),
        delta=float(delta),
        d=int(d),
        n_pos=int(n_pos),
        n_neg=int(n_neg),
        const_factor=float(const_factor),
    )


@dataclass(frozen=True, eq=False)
class Coreset:
    indices: np.ndarray
    weights: np.ndarray
    strategy: str
    seed: int | None
    plan: SampleSizePlan | None = None
    requested_size: int | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp).reshape(-1)
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if idx.shape != w.shape:
            raise ValueError("indices and weights must align")
        if np.any(w <= 0):
            raise ValueError("coreset weights must be positive")
        idx.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.indices.size

    def materialize(self, data: Dataset) -> Dataset:
        """The weighted sub-dataset this coreset describes.

        Coreset weights multiply the dataset's own point weights.
        """
        if self.indices.size and self.indices.max() >= data.n:
            raise ValueError("coreset index out of range for dataset")
        return data.subset(self.indices, self.weights * data.weight[self.indices])

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "seed": self.seed,
            "indices": self.indices.tolist(),
            "weights": self.weights.tolist(),
            "plan": None if self.plan is None else self.plan.to_dict(),
            "requested_size": self.requested_size,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Coreset":
        plan = d.get("plan")
        return cls(
            indices=d["indices"],
            weights=d["weights"],
            strategy=d["strategy"],
            seed=d.get("seed"),
            plan=None if plan is None else SampleSizePlan.from_dict(plan),
            requested_size=d.get("requested_size"),
        )


def _exhaustive(data: Dataset, strategy: str, seed, **kw) -> Coreset:
    return Coreset(np.arange(data.n), np.ones(data.n), strategy, seed, **kw)


def _stratified_draw(data: Dataset, s_pos: int, s_neg: int, rng) -> tuple[np.ndarray, np.ndarray]:
    pos, neg = data.positive_indices, data.negative_indices
    if pos.size == 0 or neg.size == 0:
        raise SamplingError("stratified sampling needs both classes present")
    if s_pos < 1 or s_neg < 1:
        raise SamplingError(f"per-stratum sizes must be positive, got ({s_pos}, {s_neg})")
    idx = np.concatenate([rng.choice(pos, size=s_pos), rng.choice(neg, size=s_neg)])
    w = np.concatenate([np.full(s_pos, pos.size / s_pos), np.full(s_neg, neg.size / s_neg)])
    return idx, w


def stratified_uniform(data: Dataset, plan: SampleSizePlan, seed: int, exhaustive=False) -> Coreset:
    """Uniform draws with replacement inside each class, sized by ``plan``.

    ``plan.s1 + plan.s2`` positives each get weight ``Y+ / s+`` and
    ``plan.s3 + plan.s4`` negatives each get weight ``Y- / s-``.  When the two
    sample sizes match, a negative's weight is ``Y-/Y+`` times a positive's.
    """
    if data.n_pos == 0 or data.n_neg == 0:
        raise SamplingError("stratified sampling needs both classes present")
    if exhaustive:
        return _exhaustive(data, "stratified-uniform", seed, plan=plan)
    rng = np.random.default_rng(seed)
    idx, w = _stratified_draw(data, plan.positive_size, plan.negative_size, rng)
    return Coreset(idx, w, "stratified-uniform", seed, plan=plan)


def stratified_uniform_sized(data: Dataset, m: int, seed: int, exhaustive=False) -> Coreset:
    """Stratified uniform sampling of ``m`` points split by class proportion."""
    if m < 2:
        raise SamplingError("stratified sampling needs m >= 2")
    if exhaustive:
        return _exhaustive(data, "stratified-uniform", seed, requested_size=m)
    s_pos, s_neg = stratum_quota(data.n, data.n_pos, m)
    s_pos, s_neg = max(s_pos, 1), max(s_neg, 1)
    if s_pos + s_neg > m:
        # keep the requested size when one class would otherwise round to zero
        if s_pos > s_neg:
            s_pos -= 1
        else:
            s_neg -= 1
    rng = np.random.default_rng(seed)
    idx, w = _stratified_draw(data, s_pos, s_neg, rng)
    return Coreset(idx, w, "stratified-uniform", seed, requested_size=m)


def uniform(data: Dataset, m: int, seed: int, exhaustive=False) -> Coreset:
    if m < 1:
        raise SamplingError("m must be positive")
    if exhaustive:
        return _exhaustive(data, "uniform", seed, requested_size=m)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, data.n, size=m)
    return Coreset(idx, np.full(m, data.n / m), "uniform", seed, requested_size=m)


def importance_sample(probs: np.ndarray, m: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """``m`` i.i.d. draws from ``probs`` with inverse-probability weights ``1/(m p_i)``."""
    idx = rng.choice(probs.size, size=m, p=probs)
    return idx, 1.0 / (m * probs[idx])


def augmented_features(data: Dataset) -> np.ndarray:
    return np.hstack([data.X, np.ones((data.n, 1))])


def leverage_probabilities(data: Dataset) -> np.ndarray:
    tau = leverage_scores(augmented_features(data))
    total = tau.sum()
    if total <= 0:
        raise SamplingError("feature matrix has rank 0")
    return tau / total


def lewis_probabilities(data: Dataset) -> np.ndarray:
    w = lewis_weights(augmented_features(data))
    return w / w.sum()


def kmeans_probabilities(data: Dataset) -> np.ndarray:
    """Lightweight-coreset distribution ``1/(2n) + d(x, mean)^2 / (2 sum d^2)``."""
    mu = data.X.mean(axis=0)
    dist2 = np.sum((data.X - mu) ** 2, axis=1)
    total = dist2.sum()
    q = np.full(data.n, 0.5 / data.n)
    if total > 0:
        q += 0.5 * dist2 / total
    else:
        q += 0.5 / data.n
    return q


def _iid_sampler(name: str, prob_fn: Callable[[Dataset], np.ndarray]):
    def sampler(data: Dataset, m: int, seed: int, exhaustive=False) -> Coreset:
        if m < 1:
            raise SamplingError("m must be positive")
        if exhaustive:
            return _exhaustive(data, name, seed, requested_size=m)
        probs = prob_fn(data)
        rng = np.random.default_rng(seed)
        idx, w = importance_sample(probs, m, rng)
        return Coreset(idx, w, name, seed, requested_size=m)

    sampler.__name__ = f"{name}_sampler"
    sampler.__doc__ = f"I.i.d. importance sampling of ``m`` rows from the {name} distribution."
    return sampler


leverage_sampler = _iid_sampler("leverage", leverage_probabilities)
lewis_sampler = _iid_sampler("lewis", lewis_probabilities)
kmeans_lightweight_sampler = _iid_sampler("kmeans", kmeans_probabilities)


def uniform_without_replacement(data: Dataset, m: int, seed: int, exhaustive=False) -> Coreset:
    if not 1 <= m <= data.n:
        raise SamplingError(f"m must lie in [1, {data.n}]")
    if exhaustive:
        return _exhaustive(data, "uniform-noreplace", seed, requested_size=m)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(data.n, size=m, replace=False))
    return Coreset(idx, np.full(m, data.n / m), "uniform-noreplace", seed, requested_size=m)


SIZED_SAMPLERS = {
    "uniform": uniform,
    "stratified-uniform": stratified_uniform_sized,
    "leverage": leverage_sampler,
    "lewis": lewis_sampler,
    "kmeans": kmeans_lightweight_sampler,
}

STRATEGIES = tuple(SIZED_SAMPLERS)


def get_sampler(name: str):
    if name == "uniform-noreplace":
        return uniform_without_replacement
    try:
        return SIZED_SAMPLERS[name]
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}") from None
