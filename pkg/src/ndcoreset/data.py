"""Labeled, weighted binary datasets: loading, writing and stratified subsampling."""

from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass
from typing import Iterator, NamedTuple, TextIO

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent dataset input."""


class LabeledPoint(NamedTuple):
    features: np.ndarray
    label: int
    weight: float


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense feature matrix with labels in {+1, -1} and nonnegative point weights.

    The arrays are marked read-only on construction, so a ``Dataset`` can be
    shared freely between threads.
    """

    X: np.ndarray
    y: np.ndarray
    weight: np.ndarray

    def __init__(self, X, y, weight=None):
        X = np.array(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        y = np.array(y, dtype=np.int8).reshape(-1)
        n = X.shape[0]
        if n < 1:
            raise DataError("empty dataset")
        if X.shape[1] < 1:
            raise DataError("dataset has zero feature columns")
        if y.shape[0] != n:
            raise DataError(f"{n} feature rows but {y.shape[0]} labels")
        if not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be +1 or -1")
        if weight is None:
            w = np.ones(n)
        else:
            w = np.array(weight, dtype=np.float64).reshape(-1)
            if w.shape[0] != n:
                raise DataError(f"{n} points but {w.shape[0]} weights")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise DataError("weights must be finite and nonnegative")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        for arr in (X, y, w):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "weight", w)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[LabeledPoint]:
        for i in range(self.n):
            yield self[i]

    def __getitem__(self, i: int) -> LabeledPoint:
        return LabeledPoint(self.X[i], int(self.y[i]), float(self.weight[i]))

    @property
    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.y == 1)

    @property
    def negative_indices(self) -> np.ndarray:
        return np.flatnonzero(self.y == -1)

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.y == 1))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.y == -1))

    def subset(self, indices, weight=None) -> "Dataset":
        """Rows ``indices`` (repeats allowed), optionally with replacement weights."""
        idx = np.asarray(indices, dtype=np.intp)
        w = self.weight[idx] if weight is None else weight
        return Dataset(self.X[idx], self.y[idx], w)

    def with_weights(self, weight) -> "Dataset":
        return Dataset(self.X, self.y, weight)

    def same_points(self, other: "Dataset") -> bool:
        return (
            self.X.shape == other.X.shape
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.weight, other.weight)
        )


def _open_text(path) -> TextIO:
    if path == "-" or path is None:
        return sys.stdin
    return open(path, "r", newline="")


def load_csv(path, label_column=-1, positive_value="1", header=False) -> Dataset:
    """Read a numeric CSV file into a ``Dataset``.

    Parameters
    ----------
    path : str or path-like
        File to read, ``"-"`` for standard input.
    label_column : int or str
        Column index (negative counts from the end) or, with ``header=True``,
        a column name.
    positive_value : str
        Label token mapped to +1; every other token maps to -1.
    header : bool
        Whether the first row holds column names.
    """
    fh = _open_text(path)
    try:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    finally:
        if fh is not sys.stdin:
            fh.close()
    return _rows_to_dataset(rows, label_column, str(positive_value), header)


def _rows_to_dataset(rows, label_column, positive_value, header) -> Dataset:
    first_row = 1
    names = None
    if header:
        if not rows:
            raise DataError("empty dataset")
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_row = 2
    if not rows:
        raise DataError("empty dataset")
    arity = len(names) if names is not None else len(rows[0])
    col = _resolve_column(label_column, names, arity)

    feats = []
    labels = []
    for k, row in enumerate(rows):
        lineno = k + first_row
        if len(row) != arity:
            raise DataError(f"row {lineno}: expected {arity} cells, got {len(row)}")
        cells = [c.strip() for c in row]
        if any(c == "" for c in cells):
            raise DataError(f"row {lineno}: missing cell")
        labels.append(1 if cells[col] == positive_value else -1)
        try:
            feats.append([float(c) for j, c in enumerate(cells) if j != col])
        except ValueError as exc:
            raise DataError(f"row {lineno}: non-numeric feature cell ({exc})") from None
    return Dataset(np.array(feats, dtype=np.float64).reshape(len(rows), arity - 1), labels)


def _resolve_column(label_column, names, arity) -> int:
    if isinstance(label_column, str) and not _is_int(label_column):
        if names is None or label_column not in names:
            raise DataError(f"unknown label column {label_column!r}")
        return names.index(label_column)
    col = int(label_column)
    if col < 0:
        col += arity
    if not 0 <= col < arity:
        raise DataError(f"unknown label column {label_column!r} (row arity {arity})")
    return col


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def _parse_label(token: str, lineno: int) -> int:
    try:
        v = float(token)
    except ValueError:
        raise DataError(f"line {lineno}: label {token!r} is not +1/-1") from None
    if v == 1.0:
        return 1
    if v == -1.0:
        return -1
    raise DataError(f"line {lineno}: label {token!r} is not +1/-1")


def load_sparse_text(path) -> Dataset:
    """Read ``label idx:val idx:val ...`` lines (1-based, strictly increasing indices).

    The result is dense with ``dim`` equal to the largest index seen.
    """
    fh = _open_text(path)
    try:
        lines = fh.read().splitlines()
    finally:
        if fh is not sys.stdin:
            fh.close()
    return parse_sparse_lines(lines)


def parse_sparse_lines(lines) -> Dataset:
    labels = []
    entries = []
    max_idx = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], lineno))
        row = []
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataError(f"line {lineno}: malformed entry {tok!r}")
            try:
                idx = int(idx_s)
                val = float(val_s)
            except ValueError:
                raise DataError(f"line {lineno}: malformed entry {tok!r}") from None
            if idx < 1:
                raise DataError(f"line {lineno}: indices are 1-based, got {idx}")
            if idx <= prev:
                raise DataError(f"line {lineno}: indices not increasing")
            prev = idx
            row.append((idx, val))
        max_idx = max(max_idx, prev)
        entries.append(row)
    if not labels:
        raise DataError("empty dataset")
    X = np.zeros((len(labels), max(max_idx, 1)))
    for i, row in enumerate(entries):
        for idx, val in row:
            X[i, idx - 1] = val
    return Dataset(X, labels)


def write_csv(data: Dataset, fh: TextIO, header: bool = False) -> None:
    """Write features followed by a trailing label column (``1`` / ``-1``)."""
    w = csv.writer(fh, lineterminator="\n")
    if header:
        w.writerow([f"x{j + 1}" for j in range(data.dim)] + ["label"])
    for x, label in zip(data.X, data.y):
        w.writerow([repr(float(v)) for v in x] + [str(int(label))])


def write_sparse_text(data: Dataset, fh: TextIO) -> None:
    """Write the sparse-text format; zero entries are omitted.

    Trailing all-zero columns cannot be represented, so a reload may come back
    with a smaller ``dim``.
    """
    for x, label in zip(data.X, data.y):
        parts = ["+1" if label == 1 else "-1"]
        parts += [f"{j + 1}:{float(x[j])!r}" for j in np.flatnonzero(x)]
        fh.write(" ".join(parts) + "\n")


def dumps(data: Dataset, fmt: str = "csv") -> str:
    buf = io.StringIO()
    if fmt == "csv":
        write_csv(data, buf)
    elif fmt == "sparse":
        write_sparse_text(data, buf)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return buf.getvalue()


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratum_quota(n_total: int, n_pos: int, target_n: int) -> tuple[int, int]:
    """Positive/negative counts for a ratio-preserving sample of ``target_n`` points."""
    k_pos = _round_half_up(target_n * n_pos / n_total)
    return k_pos, target_n - k_pos


def stratified_subsample(data: Dataset, target_n: int, seed: int) -> Dataset:
    """Draw ``target_n`` points without replacement, preserving the class ratio.

    The positive quota is ``round_half_up(target_n * Y+ / n)``; points are drawn
    uniformly within each stratum.
    """
    if target_n < 1:
        raise DataError("target_n must be positive")
    if target_n > data.n:
        raise DataError(f"target_n={target_n} exceeds dataset size {data.n}")
    pos, neg = data.positive_indices, data.negative_indices
    k_pos, k_neg = stratum_quota(data.n, pos.size, target_n)
    if k_pos > pos.size or k_neg > neg.size:
        raise DataError(
            f"stratum quota ({k_pos}, {k_neg}) exceeds stratum sizes ({pos.size}, {neg.size})"
        )
    rng = np.random.default_rng(seed)
    chosen = np.concatenate(
        [rng.choice(pos, size=k_pos, replace=False), rng.choice(neg, size=k_neg, replace=False)]
    )
    chosen.sort()
    return data.subset(chosen)
