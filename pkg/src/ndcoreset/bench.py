"""Train-on-coreset / evaluate-on-full benchmarking with construction timings."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict

import numpy as np

from .classifiers import TrainConfig, predict, train
from .data import Dataset
from .metrics import f1, mcc, table_from_predictions
from .samplers import get_sampler

ROW_FIELDS = ("strategy", "fraction", "rep", "seed", "size", "seconds", "f1", "mcc")


def fraction_to_size(n: int, fraction: float) -> int:
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    return max(1, math.floor(n * fraction + 1e-9))


def timed_sample(data: Dataset, strategy: str, m: int, seed: int, exhaustive=False):
    """Build a coreset and time construction only (probabilities plus draw)."""
    sampler = get_sampler(strategy)
    t0 = time.perf_counter()
    cs = sampler(data, m, seed, exhaustive=exhaustive)
    return cs, time.perf_counter() - t0


def evaluate(model, data: Dataset) -> dict:
    t = table_from_predictions(data.y, predict(model, data), data.weight)
    return {"f1": float(f1(t)), "mcc": float(mcc(t))}


def run_bench(
    data: Dataset,
    strategies,
    fractions,
    reps: int = 5,
    seed: int = 0,
    cfg: TrainConfig = TrainConfig(),
    exhaustive: bool = False,
) -> dict:
    """Build, train and evaluate every (strategy, fraction, repetition) cell.

    Repetition ``r`` uses seed ``seed + r`` for every strategy and fraction.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    baseline_model = train(data, cfg)
    baseline = evaluate(baseline_model, data)
    rows = []
    for strategy in strategies:
        for frac in fractions:
            m = fraction_to_size(data.n, frac)
            for r in range(reps):
                cs, secs = timed_sample(data, strategy, m, seed + r, exhaustive)
                try:
                    model = train(cs.materialize(data), cfg)
                except ValueError as exc:
                    raise RuntimeError(
                        f"training failed for strategy={strategy} fraction={frac} rep={r}: {exc}"
                    ) from exc
                scores = evaluate(model, data)
                rows.append(
                    {
                        "strategy": strategy,
                        "fraction": float(frac),
                        "rep": r,
                        "seed": seed + r,
                        "size": len(cs),
                        "seconds": secs,
                        "f1": scores["f1"],
                        "mcc": scores["mcc"],
                    }
                )
    rows.sort(key=lambda row: (row["strategy"], row["fraction"], row["rep"]))
    return {
        "dataset": {"n": data.n, "dim": data.dim, "n_pos": data.n_pos, "n_neg": data.n_neg},
        "config": {
            "strategies": list(strategies),
            "fractions": [float(f) for f in fractions],
            "reps": reps,
            "seed": seed,
            "exhaustive": exhaustive,
            "train": asdict(cfg),
        },
        "baseline": baseline,
        "rows": rows,
        "means": cell_means(rows),
    }


def cell_means(rows) -> list[dict]:
    cells = {}
    for row in rows:
        cells.setdefault((row["strategy"], row["fraction"]), []).append(row)
    out = []
    for (strategy, frac), group in sorted(cells.items()):
        out.append(
            {
                "strategy": strategy,
                "fraction": frac,
                "reps": len(group),
                "seconds": float(np.mean([g["seconds"] for g in group])),
                "f1": float(np.mean([g["f1"] for g in group])),
                "mcc": float(np.mean([g["mcc"] for g in group])),
            }
        )
    return out


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for row in rows:
        w.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in ROW_FIELDS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[dict]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        out.append(
            {
                "strategy": rec["strategy"],
                "fraction": float(rec["fraction"]),
                "rep": int(rec["rep"]),
                "seed": int(rec["seed"]),
                "size": int(rec["size"]),
                "seconds": float(rec["seconds"]),
                "f1": float(rec["f1"]),
                "mcc": float(rec["mcc"]),
            }
        )
    return out
