"""Sample covariance and the conditional-variance criteria used for ordering."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CombinatorialBlowup, SingularConditioningSet, TooFewRows

__all__ = [
    "CovarianceEstimate",
    "SubsetResult",
    "sample_covariance",
    "conditional_variance",
    "best_subset_conditional_variance",
    "exhaustive_subset_oracle",
    "precision_diagonal",
    "PIVOT_RTOL",
]

# A Cholesky pivot whose square falls below PIVOT_RTOL times the matching
# diagonal entry (R^2 > 1 - PIVOT_RTOL) is treated as singular.
PIVOT_RTOL = 1e-8
JITTER = 1e-9
ORACLE_LIMIT = 10**6


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    """Symmetric ``p x p`` covariance; ``n = inf`` marks a population matrix."""

    S: np.ndarray
    n: float = math.inf
    centered: bool = True

    def __post_init__(self):
        S = np.array(self.S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError(f"covariance must be square, got {S.shape}")
        scale = max(float(np.max(np.abs(S))), 1.0) if S.size else 1.0
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * scale):
            raise ValueError("covariance is not symmetric")
        if np.any(np.diag(S) < 0):
            raise ValueError("covariance has a negative diagonal entry")
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @property
    def p(self) -> int:
        return self.S.shape[0]

    @property
    def is_population(self) -> bool:
        return math.isinf(self.n)


@dataclass(frozen=True)
class SubsetResult:
    value: float
    subset: tuple[int, ...]
    nodes_explored: int = 0


def _as_matrix(S) -> np.ndarray:
    return S.S if isinstance(S, CovarianceEstimate) else np.asarray(S, dtype=float)


def sample_covariance(X) -> CovarianceEstimate:
    """Column-centred covariance with the 1/n normalisation."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if n < 2:
        raise TooFewRows(f"need at least 2 rows, got {n}")
    Xc = X - X.mean(axis=0)
    S = Xc.T @ Xc / n
    return CovarianceEstimate(0.5 * (S + S.T), n=n, centered=True)


def _pivots_ok(L: np.ndarray, diag: np.ndarray) -> bool:
    return bool(np.all(np.diag(L) ** 2 > PIVOT_RTOL * diag))


def cholesky(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with one jittered retry.

    Raises SingularConditioningSet when both attempts fail, either in LAPACK
    or through a pivot below the relative floor.
    """
    k = A.shape[0]
    if k == 0:
        return np.zeros((0, 0))
    diag = np.diag(A).copy()
    try:
        L = np.linalg.cholesky(A)
        if _pivots_ok(L, diag):
            return L
    except np.linalg.LinAlgError:
        pass
    jitter = JITTER * float(np.trace(A)) / k
    try:
        L = np.linalg.cholesky(A + jitter * np.eye(k))
        if _pivots_ok(L, diag):
            return L
    except np.linalg.LinAlgError:
        pass
    raise SingularConditioningSet(f"conditioning block of size {k} is singular")


def conditional_variance(S, theta: Iterable[int], j: int) -> float:
    """``S_jj - S_jT S_TT^-1 S_Tj``: variance of ``j`` given the variables ``theta``."""
    M = _as_matrix(S)
    theta = list(theta)
    if j in theta:
        raise ValueError("target index is part of the conditioning set")
    if not theta:
        return float(M[j, j])
    idx = np.asarray(theta, dtype=int)
    L = cholesky(M[np.ix_(idx, idx)])
    w = solve_triangular(L, M[idx, j], lower=True)
    return max(float(M[j, j] - w @ w), 0.0)


def _subset_size(theta, q: int) -> int:
    if q < 1:
        raise ValueError("q must be at least 1")
    return min(q, len(theta))


def exhaustive_subset_oracle(S, theta: Iterable[int], j: int, q: int) -> SubsetResult:
    """Plain enumeration of every conditioning set of size ``min(q, |theta|)``."""
    pool = sorted(set(theta))
    if j in pool:
        raise ValueError("target index is part of the candidate pool")
    k = _subset_size(pool, q)
    if math.comb(len(pool), k) > ORACLE_LIMIT:
        raise CombinatorialBlowup(f"C({len(pool)}, {k}) subsets exceed {ORACLE_LIMIT}")
    best_val, best_sub, seen = math.inf, None, 0
    for C in combinations(pool, k):
        seen += 1
        try:
            v = conditional_variance(S, C, j)
        except SingularConditioningSet:
            continue
        if v < best_val:
            best_val, best_sub = v, C
    if best_sub is None:
        raise SingularConditioningSet("every candidate subset is singular")
    return SubsetResult(best_val, tuple(best_sub), seen)


def best_subset_conditional_variance(S, theta: Iterable[int], j: int, q: int) -> SubsetResult:
    """Smallest conditional variance of ``j`` over size-``q`` subsets of ``theta``.

    Depth-first branch and bound over subsets in lexicographic order. A node
    that has fixed ``F`` and may still draw from ``R`` is bounded below by
    the variance given all of ``F | R`` (conditioning on more never raises
    the variance); it is cut when that bound clears the incumbent by more
    than rounding. A greedy forward pass provides the first incumbent. Leaves are scored exactly as the enumeration oracle scores
    them, so value and tie-broken subset coincide with it.
    """
    M = _as_matrix(S)
    pool = sorted(set(theta))
    if j in pool:
        raise ValueError("target index is part of the candidate pool")
    k = _subset_size(pool, q)
    if k == 0:
        return SubsetResult(float(M[j, j]), (), 1)
    scale = float(M[j, j])
    best = [math.inf, None]
    explored = 0

    def offer(C: tuple[int, ...]):
        try:
            v = conditional_variance(M, C, j)
        except SingularConditioningSet:
            return
        if v < best[0] or (v == best[0] and C < best[1]):
            best[0], best[1] = v, C

    # greedy forward selection seeds the incumbent so pruning bites early
    greedy: list[int] = []
    for _ in range(k):
        scores = []
        for c in pool:
            if c in greedy:
                continue
            try:
                scores.append((conditional_variance(M, sorted(greedy + [c]), j), c))
            except SingularConditioningSet:
                continue
        if not scores:
            break
        greedy.append(min(scores)[1])
    if len(greedy) == k:
        offer(tuple(sorted(greedy)))

    def bound(nodes) -> float:
        try:
            return conditional_variance(M, nodes, j)
        except SingularConditioningSet:
            return -math.inf

    def visit(fixed: list[int], start: int):
        nonlocal explored
        explored += 1
        need = k - len(fixed)
        if need == 0:
            offer(tuple(fixed))
            return
        rest = pool[start:]
        if len(rest) < need:
            return
        if best[1] is not None and len(rest) > need:
            lb = bound(fixed + rest)
            if lb > best[0] + 1e-9 * abs(best[0]) + 1e-12 * scale:
                return
        for i in range(start, len(pool) - need + 1):
            fixed.append(pool[i])
            visit(fixed, i + 1)
            fixed.pop()

    visit([], 0)
    if best[1] is None:
        raise SingularConditioningSet("every candidate subset is singular")
    return SubsetResult(best[0], best[1], explored)


def precision_diagonal(S, remaining: Iterable[int]) -> dict[int, float]:
    """Diagonal of ``(S_RR)^-1`` keyed by variable index."""
    M = _as_matrix(S)
    idx = np.asarray(sorted(set(remaining)), dtype=int)
    L = cholesky(M[np.ix_(idx, idx)])
    Linv = solve_triangular(L, np.eye(idx.size), lower=True)
    d = np.einsum("ij,ij->j", Linv, Linv)
    return {int(v): float(x) for v, x in zip(idx, d)}
