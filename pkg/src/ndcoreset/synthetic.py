"""Synthetic binary datasets used by the tests and the benchmark CLI."""

import numpy as np

from .data import Dataset


def noisy_separable(n, dim, noise=0.05, pos_fraction=0.5, seed=0):
    """Gaussian features labeled by a random hyperplane, then label-flipped.

    Exactly ``round(n * pos_fraction)`` points are positive before noise; the
    flips are split evenly between classes so the class counts are unchanged.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, dim))
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    score = X @ direction
    n_pos = int(round(n * pos_fraction))
    order = np.argsort(-score, kind="stable")
    y = -np.ones(n, dtype=np.int8)
    y[order[:n_pos]] = 1

    n_flip = int(round(noise * n / 2))
    n_flip = min(n_flip, n_pos, n - n_pos)
    if n_flip > 0:
        flip_pos = rng.choice(np.flatnonzero(y == 1), size=n_flip, replace=False)
        flip_neg = rng.choice(np.flatnonzero(y == -1), size=n_flip, replace=False)
        y[flip_pos] = -1
        y[flip_neg] = 1
    return Dataset(X, y)


def two_gaussians(n, dim, pos_ratio=0.8, separation=2.0, seed=0):
    """Two isotropic unit-variance Gaussians whose means are ``separation`` apart."""
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * pos_ratio))
    n_neg = n - n_pos
    shift = np.zeros(dim)
    shift[0] = separation / 2.0
    X = np.vstack(
        [rng.standard_normal((n_pos, dim)) + shift, rng.standard_normal((n_neg, dim)) - shift]
    )
    y = np.concatenate([np.ones(n_pos, dtype=np.int8), -np.ones(n_neg, dtype=np.int8)])
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm])
