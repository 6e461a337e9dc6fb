"""Monte-Carlo checks of the weak-coreset guarantees for F1 and MCC.

The query space (linear classifiers above a quality floor) cannot be
enumerated, so it is represented by sampled members: random directions with
quantile-chosen offsets, and perturbations of a trained model.  Each accepted
query satisfies the membership predicate on the full data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classifiers import TrainConfig, train, LinearModel
from .data import Dataset
from .metrics import (
    ContingencyTable,
    LinearQuery,
    batch_f1,
    batch_mcc,
    batch_tables,
    f1,
    prediction_matrix,
)
from .samplers import SampleSizePlan, f1_sample_size, mcc_sample_size, stratified_uniform

MODES = ("F1", "MCC")


class QueryGenerationError(RuntimeError):
    def __init__(self, message, acceptance_rate, accepted):
        super().__init__(f"{message} (acceptance rate {acceptance_rate:.4g})")
        self.acceptance_rate = acceptance_rate
        self.accepted = accepted


def f1_tp_threshold(n: float, c: float, epsilon: float) -> float:
    """Smallest tp admitted by the F1 query class for given ``c`` and ``epsilon``."""
    return max(
        n * (1 - c * epsilon) / (2 * c * (1 - epsilon)),
        n * (1 + c * epsilon) / (2 * c * (1 + epsilon)),
    )


def f1_membership(t: ContingencyTable, gamma: float, c: float, epsilon: float, n: float | None = None) -> bool:
    if not c > 1:
        raise ValueError("c must exceed 1")
    n = t.total if n is None else n
    return bool(f1(t) >= gamma and t.tp >= f1_tp_threshold(n, c, epsilon))


def mcc_membership(t: ContingencyTable, gamma: float, n: float | None = None) -> bool:
    n = t.total if n is None else n
    return bool(t.tp >= gamma * n and t.tn >= gamma * n)


def _batch_membership(tables, mode, gamma, c, epsilon, n):
    tp, _, _, tn = tables
    if mode == "F1":
        return (batch_f1(tables) >= gamma) & (tp >= f1_tp_threshold(n, c, epsilon))
    return (tp >= gamma * n) & (tn >= gamma * n)


@dataclass(frozen=True, eq=False)
class QuerySet:
    queries: list
    mode: str
    gamma: float
    c: float
    epsilon: float
    attempts: int = 0
    acceptance_rate: float = 1.0

    def __len__(self):
        return len(self.queries)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "gamma": self.gamma,
            "c": self.c,
            "epsilon": self.epsilon,
            "attempts": self.attempts,
            "acceptance_rate": self.acceptance_rate,
            "queries": [q.to_dict() for q in self.queries],
        }


def _unit(rng, k):
    v = rng.standard_normal(k)
    return v / np.linalg.norm(v)


def generate_query_set(
    data: Dataset,
    mode: str,
    gamma: float,
    count: int,
    seed: int,
    c: float = 2.0,
    epsilon: float = 0.1,
    max_attempts: int = 20000,
    base_model: LinearModel | None = None,
    perturb_radius: float = 0.5,
    batch: int = 256,
) -> QuerySet:
    """Sample ``count`` linear queries that belong to the mode's query class.

    Half of the candidates are random unit directions whose offset is taken at
    a random quantile of the projected data; the other half perturb
    ``base_model`` (a logistic fit on ``data`` if omitted) by a random vector
    of relative norm up to ``perturb_radius``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if count < 1:
        raise ValueError("count must be positive")
    if mode == "F1" and not c > 1:
        raise ValueError("c must exceed 1")
    rng = np.random.default_rng(seed)
    if base_model is None:
        base_model = train(data, TrainConfig())
    base = np.append(base_model.weights, base_model.bias)
    base_norm = max(np.linalg.norm(base_model.weights), 1e-12)
    n = float(data.weight.sum())
    k = data.dim + 1

    accepted = []
    attempts = 0
    passing = 0
    while len(accepted) < count and attempts < max_attempts:
        m = min(batch, max_attempts - attempts)
        cands = np.empty((m, k))
        for j in range(m):
            if rng.random() < 0.5:
                cands[j] = base + rng.uniform(0.0, perturb_radius) * base_norm * _unit(rng, k)
            else:
                u = _unit(rng, data.dim)
                proj = data.X @ u
                cands[j, :-1] = u
                cands[j, -1] = -np.quantile(proj, rng.uniform(0.02, 0.98))
        attempts += m
        queries = [LinearQuery(w) for w in cands]
        tables = batch_tables(data.y, prediction_matrix(data.X, queries), data.weight)
        keep = _batch_membership(tables, mode, gamma, c, epsilon, n)
        passing += int(keep.sum())
        for j in np.flatnonzero(keep):
            if len(accepted) < count:
                accepted.append(queries[j])

    rate = passing / attempts if attempts else 0.0
    if len(accepted) < count:
        raise QueryGenerationError(
            f"found {len(accepted)} of {count} {mode} queries in {attempts} attempts", rate, len(accepted)
        )
    qs = QuerySet(accepted, mode, float(gamma), float(c), float(epsilon), attempts, rate)
    if mode == "F1":
        tables = batch_tables(data.y, prediction_matrix(data.X, accepted), data.weight)
        n_pos = float(data.weight[data.y == 1].sum())
        # F1 >= gamma together with tp + fn = Y+ forces tp >= gamma Y+ / (2 - gamma)
        assert np.all(tables[0] >= gamma * n_pos / (2 - gamma) * (1 - 1e-12))
    return qs


def mcc_slack_caps(epsilon: float, gamma: float, t_prime: float) -> tuple[float, float]:
    """Upper bounds on the two additive slack constants of the MCC band."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if not 0 < t_prime < 1:
        raise ValueError(f"T' must lie strictly between 0 and 1, got {t_prime}")
    if epsilon >= gamma:
        raise ValueError(f"epsilon ({epsilon}) must be below gamma ({gamma}) for the upper cap")
    root = math.sqrt(t_prime * (1 - t_prime) * gamma)
    lower_cap = (1 / gamma) / ((1 + epsilon / gamma) * root)
    upper_cap = (1 / gamma) / ((1 - epsilon / gamma) * root)
    return lower_cap, upper_cap


def mcc_band(mcc_value, epsilon, gamma, t_prime):
    """``(lower, upper)`` interval the coreset MCC must fall in."""
    cap, cap_prime = mcc_slack_caps(epsilon, gamma, t_prime)
    r = epsilon / gamma
    lower = np.asarray(mcc_value) / (1 + r) - 2 * epsilon * cap
    upper = np.asarray(mcc_value) / (1 - r) + 2 * epsilon * cap_prime
    return lower, upper


@dataclass
class GuaranteeReport:
    mode: str
    gamma: float
    epsilon: float
    delta: float
    c: float | None
    draws: int
    seed: int
    plan: dict
    acceptance_rate: float
    full_values: np.ndarray
    estimates: np.ndarray
    errors: np.ndarray
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    passed: np.ndarray
    per_draw_max_violation: np.ndarray
    budget: float
    exhaustive: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def draw_failed(self) -> np.ndarray:
        return ~np.all(self.passed, axis=1)

    @property
    def failure_rate(self) -> float:
        return float(np.mean(self.draw_failed)) if self.draws else 0.0

    @property
    def within_budget(self) -> bool:
        return self.failure_rate <= self.budget

    def summary_line(self) -> str:
        return (
            f"failure_rate={self.failure_rate:.4g} budget={self.budget:.4g} "
            f"pass={str(self.within_budget).lower()}"
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "c": self.c,
            "draws": self.draws,
            "seed": self.seed,
            "exhaustive": self.exhaustive,
            "plan": self.plan,
            "n_queries": int(self.full_values.size),
            "acceptance_rate": self.acceptance_rate,
            "full_values": self.full_values.tolist(),
            "estimates": self.estimates.tolist(),
            "errors": self.errors.tolist(),
            "lower_bounds": self.lower_bounds.tolist(),
            "upper_bounds": self.upper_bounds.tolist(),
            "passed": self.passed.tolist(),
            "per_draw_max_violation": self.per_draw_max_violation.tolist(),
            "draw_failed": self.draw_failed.tolist(),
            "failure_rate": self.failure_rate,
            "budget": self.budget,
            "within_budget": self.within_budget,
            **self.extra,
        }


def _check_plan(data: Dataset, plan: SampleSizePlan, mode: str):
    if plan.mode != mode:
        raise ValueError(f"plan mode {plan.mode} does not match {mode}")
    if plan.n_pos != data.n_pos or plan.n_neg != data.n_neg:
        raise ValueError(
            f"plan built for ({plan.n_pos}, {plan.n_neg}) class counts, data has ({data.n_pos}, {data.n_neg})"
        )


def _draw_tables(data, P, plan, draws, seed, exhaustive):
    """Weighted coreset tables for each draw: shape ``(draws, 4, q)``."""
    out = np.empty((draws, 4, P.shape[1]))
    for k in range(draws):
        cs = stratified_uniform(data, plan, seed + k, exhaustive=exhaustive)
        w = cs.weights * data.weight[cs.indices]
        out[k] = batch_tables(data.y[cs.indices], P[cs.indices], w)
    return out


def verify_f1(data: Dataset, queries: QuerySet, plan: SampleSizePlan, draws: int, seed: int, exhaustive=False):
    """Check ``|F1~ - F1| <= c eps F1`` for every query over ``draws`` coresets.

    A draw fails if any query leaves the band; the failure rate is compared
    with the budget ``3 delta``.
    """
    _check_plan(data, plan, "F1")
    if queries.mode != "F1":
        raise ValueError("query set is not an F1 query set")
    if draws < 1:
        raise ValueError("draws must be positive")
    eps, c = plan.epsilon, queries.c
    if not math.isclose(queries.epsilon, eps):
        raise ValueError(f"query set was built for epsilon={queries.epsilon}, plan has {eps}")
    P = prediction_matrix(data.X, queries.queries)
    full = batch_f1(batch_tables(data.y, P, data.weight))
    est = batch_f1(_draw_tables(data, P, plan, draws, seed, exhaustive).transpose(1, 0, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.abs(est - full) / full
    bound = c * eps
    passed = np.abs(est - full) <= bound * full + 1e-12
    violation = np.abs(est - full) - bound * full
    lower = np.broadcast_to((1 - bound) * full, est.shape)
    upper = np.broadcast_to((1 + bound) * full, est.shape)
    return GuaranteeReport(
        mode="F1",
        gamma=queries.gamma,
        epsilon=eps,
        delta=plan.delta,
        c=c,
        draws=draws,
        seed=seed,
        plan=plan.to_dict(),
        acceptance_rate=queries.acceptance_rate,
        full_values=full,
        estimates=est,
        errors=rel,
        lower_bounds=np.asarray(lower),
        upper_bounds=np.asarray(upper),
        passed=passed,
        per_draw_max_violation=violation.max(axis=1),
        budget=3 * plan.delta,
        exhaustive=exhaustive,
    )


def verify_mcc(data: Dataset, queries: QuerySet, plan: SampleSizePlan, draws: int, seed: int, exhaustive=False):
    """Check the additive-slack MCC band for every query over ``draws`` coresets.

    The band is ``MCC/(1+eps/gamma) - 2 eps C`` to ``MCC/(1-eps/gamma) + 2 eps C'``
    with the slack caps evaluated at each query's ``T'``; budget ``4 delta``.
    """
    _check_plan(data, plan, "MCC")
    if queries.mode != "MCC":
        raise ValueError("query set is not an MCC query set")
    if draws < 1:
        raise ValueError("draws must be positive")
    eps, gamma = plan.epsilon, queries.gamma
    if eps >= gamma:
        raise ValueError(f"epsilon ({eps}) must be below gamma ({gamma})")
    P = prediction_matrix(data.X, queries.queries)
    tables = batch_tables(data.y, P, data.weight)
    full = batch_mcc(tables)
    t_prime = (tables[0] + tables[2]) / tables.sum(axis=0)
    lower = np.empty_like(full)
    upper = np.empty_like(full)
    for j in range(full.size):
        lower[j], upper[j] = mcc_band(full[j], eps, gamma, t_prime[j])
    est = batch_mcc(_draw_tables(data, P, plan, draws, seed, exhaustive).transpose(1, 0, 2))
    violation = np.maximum(lower - est, est - upper)
    passed = violation <= 1e-12
    return GuaranteeReport(
        mode="MCC",
        gamma=gamma,
        epsilon=eps,
        delta=plan.delta,
        c=None,
        draws=draws,
        seed=seed,
        plan=plan.to_dict(),
        acceptance_rate=queries.acceptance_rate,
        full_values=full,
        estimates=est,
        errors=est - full,
        lower_bounds=np.broadcast_to(lower, est.shape).copy(),
        upper_bounds=np.broadcast_to(upper, est.shape).copy(),
        passed=passed,
        per_draw_max_violation=violation.max(axis=1),
        budget=4 * plan.delta,
        exhaustive=exhaustive,
    )


def count_deviations(data: Dataset, queries: QuerySet, plan: SampleSizePlan, draws: int, seed: int) -> dict:
    """Per-count additive deviations of the stratified estimates.

    For each draw, the largest deviation over queries of the rescaled tp and
    fn estimates (allowed ``eps * Y+``) and of the reweighted fp and tn
    estimates (allowed ``eps * (Y+ + Y-)``).
    """
    P = prediction_matrix(data.X, queries.queries)
    full = batch_tables(data.y, P, data.weight)
    est = _draw_tables(data, P, plan, draws, seed, exhaustive=False)
    dev = np.abs(est - full[None]).max(axis=2)  # (draws, 4) in tp, fp, fn, tn order
    eps = plan.epsilon
    n_pos = float(data.weight[data.y == 1].sum())
    n_all = float(data.weight.sum())
    limits = np.array([eps * n_pos, eps * n_all, eps * n_pos, eps * n_all])
    ok = dev <= limits
    names = ("tp", "fp", "fn", "tn")
    return {
        "draws": draws,
        "limits": dict(zip(names, limits.tolist())),
        "max_deviation": {k: dev[:, i].tolist() for i, k in enumerate(names)},
        "pass_fraction": {k: float(ok[:, i].mean()) for i, k in enumerate(names)},
        "joint_pass_fraction": float(ok.all(axis=1).mean()),
    }


def calibrate_const_factor(
    data: Dataset,
    queries: QuerySet,
    epsilon: float,
    delta: float,
    d: int,
    draws: int,
    seed: int,
    factors=(1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125),
):
    """Smallest ``const_factor`` in ``factors`` whose plan meets the failure budget.

    Returns ``(factor, {factor: failure_rate})``; ``factor`` is None when no
    candidate meets the budget.
    """
    rates = {}
    best = None
    for f in sorted(factors, reverse=True):
        if queries.mode == "F1":
            plan = f1_sample_size(queries.gamma, epsilon, delta, d, data.n_pos, data.n_neg, f)
            report = verify_f1(data, queries, plan, draws, seed)
        else:
            plan = mcc_sample_size(epsilon, delta, d, data.n_pos, data.n_neg, f, gamma=queries.gamma)
            report = verify_mcc(data, queries, plan, draws, seed)
        rates[f] = report.failure_rate
        if report.within_budget:
            best = f
        else:
            break
    return best, rates
