"""Distribution and preference metrics."""

from __future__ import annotations

import numpy as np


def wasserstein_1d(xs, ys) -> float:
    """Earth-mover distance between two 1-D samples with uniform weights.

    Computed as the integral of |F_x - F_y| over the merged support. For
    equal-length samples this reduces to the mean absolute difference of
    sorted order statistics, which is used as a fast path.
    """
    x = np.sort(np.asarray(xs, dtype=float))
    y = np.sort(np.asarray(ys, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("both samples must be non-empty")
    if x.size == y.size:
        return float(np.mean(np.abs(x - y)))
    support = np.sort(np.concatenate([x, y]))
    cdf_x = np.searchsorted(x, support[:-1], side="right") / x.size
    cdf_y = np.searchsorted(y, support[:-1], side="right") / y.size
    return float(np.sum(np.abs(cdf_x - cdf_y) * np.diff(support)))


def pairwise_accuracy(pairs) -> float:
    """Fraction of (chosen, rejected) score pairs ranked strictly correctly.

    Ties count as failures: a scorer that cannot separate a pair has not
    ranked it.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("need at least one pair")
    wins = sum(1 for chosen, rejected in pairs if chosen > rejected)
    return wins / len(pairs)


def histogram(values, bins: int = 20,
              value_range: tuple[float, float] | None = None) -> dict:
    """Fixed-width histogram serializable to JSON."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot histogram an empty sample")
    counts, edges = np.histogram(arr, bins=bins, range=value_range)
    return {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}
