"""Ordering and edge-recovery metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import kendalltau

from .errors import AllTied, LengthMismatch, SizeMismatch
from .sem import Ordering, WeightedDag

__all__ = [
    "EdgeMetrics",
    "kendall_tau",
    "kendall_tau_pairs",
    "edge_metrics",
    "ordering_to_ranks",
    "true_ranks",
]


@dataclass(frozen=True)
class EdgeMetrics:
    recall: float
    flipped: float
    fdr: float
    hamming: int


def _check_ranks(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch("rank vectors must have equal length")
    if a.size < 2:
        raise LengthMismatch("need at least two items")
    return a, b


def kendall_tau(true_ranks: Sequence[float], est_ranks: Sequence[float]) -> float:
    """Kendall's tau-b, O(p log p)."""
    a, b = _check_ranks(true_ranks, est_ranks)
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise AllTied("one ranking ties every item")
    return float(kendalltau(a, b, variant="b").statistic)


def kendall_tau_pairs(true_ranks: Sequence[float], est_ranks: Sequence[float]) -> float:
    """Kendall's tau-b by enumerating every pair; reference for :func:`kendall_tau`."""
    a, b = _check_ranks(true_ranks, est_ranks)
    n = a.size
    conc = disc = tie_a = tie_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            if da == 0:
                tie_a += 1
            if db == 0:
                tie_b += 1
            if da * db > 0:
                conc += 1
            elif da * db < 0:
                disc += 1
    n0 = n * (n - 1) // 2
    denom = math.sqrt((n0 - tie_a) * (n0 - tie_b))
    if denom == 0:
        raise AllTied("one ranking ties every item")
    return (conc - disc) / denom


def ordering_to_ranks(ordering: Ordering | Sequence[int]) -> np.ndarray:
    """1-based position of every variable in the sequence."""
    seq = ordering.sequence if isinstance(ordering, Ordering) else ordering
    ranks = np.empty(len(seq))
    ranks[np.asarray(seq, dtype=int)] = np.arange(1, len(seq) + 1)
    return ranks


def true_ranks(dag: WeightedDag) -> np.ndarray:
    """Ranks by longest-path depth.

    For graphs containing the chain ``1 -> 2 -> ... -> p`` this is the unique
    topological order; otherwise nodes at equal depth tie.
    """
    return dag.depth().astype(float) + 1.0


def _support(x) -> np.ndarray:
    if isinstance(x, WeightedDag):
        return x.B != 0
    A = getattr(x, "adjacency", x)
    return np.asarray(A) != 0


def edge_metrics(truth, estimate) -> EdgeMetrics:
    """Recall, Flipped, FDR and Hamming distance of an estimated graph.

    Both arguments follow the ``B[j, k] != 0 <=> k -> j`` convention. A
    flipped edge counts as a false discovery; an empty estimate has zero
    Flipped and FDR, and an empty truth has recall 1.
    """
    T = _support(truth)
    E = _support(estimate)
    if T.shape != E.shape:
        raise SizeMismatch(f"graphs have shapes {T.shape} and {E.shape}")
    n_true = int(T.sum())
    n_est = int(E.sum())
    hits = int((T & E).sum())
    flips = int((E & T.T).sum())
    recall = hits / n_true if n_true else 1.0
    flipped = flips / n_est if n_est else 0.0
    fdr = (n_est - hits) / n_est if n_est else 0.0
    hamming = int((T != E).sum())
    return EdgeMetrics(recall, flipped, fdr, hamming)
