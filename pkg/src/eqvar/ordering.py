"""Causal ordering by (conditional) variances, plus sample-size bounds.

Top-down runs pick, at every step, the unplaced variable with the smallest
variance conditional on the variables already placed: on all of them
(``TopDownFull``) or on the best subset of at most ``q`` of them
(``TopDownSubset``). The bottom-up run peels off sinks by smallest precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .covariance import PIVOT_RTOL, CovarianceEstimate, precision_diagonal
from .errors import Exhausted, SingularConditioningSet
from .sem import Ordering

__all__ = [
    "OrderingConfig",
    "BoundInputs",
    "order_topdown",
    "order_bottomup",
    "discover_order",
    "sample_size_bound_lowdim",
    "sample_size_bound_highdim",
]

MODES = ("full", "subset", "bottomup")


@dataclass(frozen=True)
class OrderingConfig:
    mode: str = "full"
    q: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "subset" and (self.q is None or self.q < 1):
            raise ValueError("subset mode needs q >= 1")

    @classmethod
    def full(cls) -> "OrderingConfig":
        return cls("full")

    @classmethod
    def subset(cls, q: int) -> "OrderingConfig":
        return cls("subset", int(q))

    @classmethod
    def bottom_up(cls) -> "OrderingConfig":
        return cls("bottomup")


def _matrix(S) -> np.ndarray:
    return S.S if isinstance(S, CovarianceEstimate) else np.asarray(S, dtype=float)


class _CholeskyState:
    """Growing Cholesky factor of ``S[T, T]`` with residual variances of all variables.

    Row ``r`` of ``W`` holds ``L^-1 S[T, :]`` restricted to the ``r``-th
    placed variable, so ``resid[j] = S_jj - sum_r W[r, j]^2`` is the variance
    of ``j`` given the placed set. Extending by one variable costs O(|T| p).
    """

    def __init__(self, M: np.ndarray):
        self.M = M
        p = M.shape[0]
        self.W = np.zeros((p, p))
        self.m = 0
        self.resid = np.diag(M).copy()
        self.floor = PIVOT_RTOL * np.diag(M)

    def can_extend(self, theta: int) -> bool:
        return self.resid[theta] > self.floor[theta]

    def extend(self, theta: int):
        if not self.can_extend(theta):
            raise SingularConditioningSet(f"variable {theta} is collinear with the placed set")
        m = self.m
        d = math.sqrt(self.resid[theta])
        row = (self.M[theta] - self.W[:m, theta] @ self.W[:m]) / d
        self.W[m] = row
        self.resid = self.resid - row * row
        self.resid[theta] = 0.0
        self.m = m + 1


def _argmin(values: np.ndarray, candidates: list[int]) -> int:
    # candidates are kept sorted, so np.argmin's first hit is the lowest index
    return candidates[int(np.argmin(values[candidates]))]


def order_topdown(S, config: OrderingConfig = OrderingConfig()) -> Ordering:
    """Top-down ordering with the full or the subset criterion.

    Raises :class:`Exhausted` (carrying the placed prefix) when the set of
    placed variables becomes singular before every variable is ordered.
    """
    if config.mode == "bottomup":
        return order_bottomup(S)
    M = _matrix(S)
    p = M.shape[0]
    if p < 1:
        raise ValueError("empty covariance")
    if config.mode == "subset":
        return _order_subset(M, config.q)

    state = _CholeskyState(M)
    remaining = list(range(p))
    seq: list[int] = []
    crit: list[float] = []
    for z in range(p):
        theta = _argmin(state.resid, remaining)
        if len(remaining) > 1 and not state.can_extend(theta):
            # every remaining variable is (numerically) determined by the placed set
            raise Exhausted(z + 1, seq, crit, [()] * len(seq))
        seq.append(theta)
        crit.append(max(float(state.resid[theta]), 0.0))
        remaining.remove(theta)
        if not remaining:
            break
        state.extend(theta)
    return Ordering(tuple(seq), tuple(crit), tuple(() for _ in seq))


def _residualise(R: np.ndarray, a: int) -> np.ndarray:
    col = R[:, a]
    return R - np.outer(col, col) / R[a, a]


def _scan(R, pool: np.ndarray, targets: np.ndarray, k: int, floor: np.ndarray):
    """Best size-``k`` subset of ``pool`` for every target under covariance ``R``.

    ``pool`` and ``targets`` are positions into ``R``. Returns the minimal
    variances and the chosen subsets as tuples of pool positions.
    """
    nt = targets.size
    if k == 0:
        return R[targets, targets].copy(), [()] * nt
    if pool.size < k:
        return np.full(nt, np.inf), [()] * nt
    if k == 1:
        vals, arg = _kernels.best_single(R, pool, targets, floor)
        return vals, [(int(pool[b]),) if b >= 0 else () for b in arg]
    if k == 2:
        vals, ia, ib = _kernels.best_pair(R, pool, targets, floor)
        subs = [(int(pool[a]), int(pool[b])) if a >= 0 else () for a, b in zip(ia, ib)]
        return vals, subs
    vals = np.full(nt, np.inf)
    subs: list[tuple] = [()] * nt
    for i in range(pool.size - k + 1):
        a = pool[i]
        if R[a, a] <= floor[a]:
            continue
        v, s = _scan(_residualise(R, a), pool[i + 1 :], targets, k - 1, floor)
        better = v < vals
        for t in np.flatnonzero(better):
            vals[t] = v[t]
            subs[t] = (int(a),) + s[t]
    return vals, subs


def _order_subset(M: np.ndarray, q: int) -> Ordering:
    p = M.shape[0]
    diag = np.diag(M)
    floor_all = PIVOT_RTOL * diag
    best = diag.copy()
    best_sub: list[tuple[int, ...]] = [()] * p
    state = _CholeskyState(M)
    remaining = list(range(p))
    placed: list[int] = []
    seq: list[int] = []
    crit: list[float] = []
    subs: list[tuple[int, ...]] = []
    for z in range(p):
        theta = _argmin(best, remaining)
        seq.append(theta)
        crit.append(max(float(best[theta]), 0.0))
        subs.append(best_sub[theta])
        remaining.remove(theta)
        if not remaining:
            break
        placed.append(theta)
        rem = np.asarray(remaining)
        if len(placed) <= q:
            # at most q placed: the only admissible set is all of them
            if not state.can_extend(theta):
                raise Exhausted(z + 2, seq, crit, subs)
            state.extend(theta)
            best[rem] = np.maximum(state.resid[rem], 0.0)
            full = tuple(sorted(placed))
            for j in remaining:
                best_sub[j] = full
            continue
        # new candidate sets all contain theta: condition on it first, then
        # search the q-1 remaining members among the earlier placed variables
        if M[theta, theta] <= floor_all[theta]:
            continue
        old = np.asarray(sorted(placed[:-1]))
        idx = np.concatenate([old, rem])
        col = M[idx, theta]
        Rc = M[np.ix_(idx, idx)] - np.outer(col, col) / M[theta, theta]
        pool_pos = np.arange(old.size)
        tgt_pos = np.arange(old.size, idx.size)
        vals, found = _scan(Rc, pool_pos, tgt_pos, q - 1, floor_all[idx])
        for t, j in enumerate(remaining):
            v = vals[t]
            if not np.isfinite(v):
                continue
            v = max(float(v), 0.0)
            cand = tuple(sorted([theta] + [int(idx[s]) for s in found[t]]))
            if v < best[j] or (v == best[j] and cand < best_sub[j]):
                best[j] = v
                best_sub[j] = cand
    return Ordering(tuple(seq), tuple(crit), tuple(subs))


def order_bottomup(S) -> Ordering:
    """Bottom-up ordering by smallest precision, returned source-first.

    Each step removes the remaining variable with the smallest diagonal entry
    of the inverse covariance (a sink); its criterion is the reciprocal, the
    full conditional variance.
    """
    M = _matrix(S)
    p = M.shape[0]
    n = S.n if isinstance(S, CovarianceEstimate) else math.inf
    if p >= n:
        raise SingularConditioningSet(f"sample covariance with p={p} >= n={n} is singular")
    remaining = list(range(p))
    rev: list[int] = []
    crit: list[float] = []
    while remaining:
        prec = precision_diagonal(M, remaining)
        # ties go to the highest index, so the source-first output reads 1..p
        sink = min(remaining, key=lambda j: (prec[j], -j))
        rev.append(sink)
        crit.append(1.0 / prec[sink])
        remaining.remove(sink)
    return Ordering(tuple(reversed(rev)), tuple(reversed(crit)), tuple(() for _ in rev))


def discover_order(S, config: OrderingConfig) -> Ordering:
    if config.mode == "bottomup":
        return order_bottomup(S)
    return order_topdown(S, config)


@dataclass(frozen=True)
class BoundInputs:
    """Constants entering the sample-size bounds.

    ``zeta`` may be ``math.inf`` (edgeless graph), in which case both bounds
    are 0: every ordering is then topological.
    """

    p: int
    epsilon: float
    gamma2_over_sigma2: float
    max_sigma_jj: float
    zeta: float
    lambda_min: float
    sigma2: float
    q: int | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be positive")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.gamma2_over_sigma2 < 0:
            raise ValueError("gamma^2 / sigma^2 must be nonnegative")
        for name in ("max_sigma_jj", "zeta", "lambda_min", "sigma2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.q is not None and self.q < 1:
            raise ValueError("q must be at least 1")


def _bound_rhs(b: BoundInputs, lead: float) -> float:
    log_term = math.log(b.p**2 + b.p) - math.log(b.epsilon / 2)
    noise = (1 + 4 * b.gamma2_over_sigma2) ** 2
    sep = (b.zeta * b.lambda_min + 2 * b.sigma2) / (b.zeta * b.lambda_min**2)
    return lead * log_term * 128 * noise * b.max_sigma_jj**2 * sep**2


def _smallest_int_above(x: float) -> int:
    return math.floor(x) + 1


def sample_size_bound_lowdim(b: BoundInputs) -> int:
    """Smallest n above the full-criterion bound (leading factor p^2)."""
    if math.isinf(b.zeta):
        return 0
    return _smallest_int_above(_bound_rhs(b, float(b.p) ** 2))


def sample_size_bound_highdim(b: BoundInputs) -> int:
    """Same bound with (q + 1)^2 in place of p^2; needs ``b.q``."""
    if b.q is None:
        raise ValueError("the high-dimensional bound needs q")
    if math.isinf(b.zeta):
        return 0
    return _smallest_int_above(_bound_rhs(b, float(b.q + 1) ** 2))


def bound_real_value(b: BoundInputs, *, highdim: bool = False) -> float:
    """Unrounded right-hand side of either bound."""
    lead = float(b.q + 1) ** 2 if highdim else float(b.p) ** 2
    return _bound_rhs(b, lead)

