"""Linear structural equation models with a shared error variance.

Conventions: ``B[j, k]`` is the coefficient of variable ``k`` in the
equation of variable ``j``, so a nonzero entry encodes the edge ``k -> j``.
Indices are 0-based in memory; everything written to disk is 1-based.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .covariance import CovarianceEstimate
from .errors import CyclicGraph, LengthMismatch, NonPositiveScale, NonZeroDiagonal

__all__ = [
    "ErrorSpec",
    "WeightedDag",
    "SemModel",
    "Ordering",
    "validate_dag",
    "population_covariance",
    "zeta",
    "is_topological",
    "rescale_known_ratios",
]


def _kahn(support: np.ndarray) -> list[int] | None:
    """Topological order of the digraph ``support[j, k] -> edge k->j``.

    Ready nodes are released lowest index first. Returns None on a cycle.
    """
    p = support.shape[0]
    indeg = support.sum(axis=1).astype(int)
    children = [np.flatnonzero(support[:, k]) for k in range(p)]
    ready = [k for k in range(p) if indeg[k] == 0]
    order: list[int] = []
    heapq.heapify(ready)
    while ready:
        k = heapq.heappop(ready)
        order.append(k)
        for j in children[k]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, int(j))
    if len(order) < p:
        return None
    return order


@dataclass(frozen=True)
class ErrorSpec:
    """Distribution of the i.i.d. errors.

    ``kind`` is ``"gaussian"`` or ``"rademacher"``; Rademacher errors take
    the values ``+-sqrt(sigma2)``. Both laws are sub-Gaussian with parameter
    ``gamma = sqrt(sigma2)``.
    """

    kind: str = "gaussian"
    sigma2: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "rademacher"):
            raise ValueError(f"unknown error kind {self.kind!r}")
        if not self.sigma2 > 0:
            raise NonPositiveScale("sigma2 must be positive")

    @property
    def gamma2(self) -> float:
        return float(self.sigma2)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma2": self.sigma2, "gamma2": self.gamma2}

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorSpec":
        return cls(kind=d.get("kind", "gaussian"), sigma2=float(d.get("sigma2", 1.0)))


@dataclass(frozen=True, eq=False)
class WeightedDag:
    """Coefficient matrix with acyclic support. Build through :func:`validate_dag`."""

    B: np.ndarray
    _order: tuple[int, ...] = field(repr=False)

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @cached_property
    def support(self) -> np.ndarray:
        return self.B != 0

    @cached_property
    def edges(self) -> frozenset[tuple[int, int]]:
        """Set of ``(k, j)`` pairs, one per edge ``k -> j``."""
        js, ks = np.nonzero(self.B)
        return frozenset(zip(ks.tolist(), js.tolist()))

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(self.B))

    def parents(self, j: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.B[j]).tolist())

    def children(self, j: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.B[:, j]).tolist())

    def ancestors(self, j: int) -> frozenset[int]:
        return self._reach(j, self.parents)

    def descendants(self, j: int) -> frozenset[int]:
        return self._reach(j, self.children)

    def _reach(self, j, step) -> frozenset[int]:
        seen: set[int] = set()
        todo = deque(step(j))
        while todo:
            k = todo.popleft()
            if k not in seen:
                seen.add(k)
                todo.extend(step(k))
        return frozenset(seen)

    def is_ancestral(self, nodes) -> bool:
        nodes = set(nodes)
        return all(self.parents(j) <= nodes for j in nodes)

    def markov_blanket(self, j: int) -> frozenset[int]:
        mb = set(self.parents(j)) | set(self.children(j))
        for c in self.children(j):
            mb |= self.parents(c)
        mb.discard(j)
        return frozenset(mb)

    @property
    def max_in_degree(self) -> int:
        return int(self.support.sum(axis=1).max()) if self.p else 0

    @property
    def max_markov_blanket(self) -> int:
        return max((len(self.markov_blanket(j)) for j in range(self.p)), default=0)

    @property
    def topological_order(self) -> tuple[int, ...]:
        """The topological order that releases the lowest ready index first."""
        return self._order

    def depth(self) -> np.ndarray:
        """Length of the longest directed path ending at each node."""
        d = np.zeros(self.p, dtype=int)
        for j in self._order:
            pa = np.flatnonzero(self.B[j])
            if pa.size:
                d[j] = d[pa].max() + 1
        return d

    def subgraph(self, nodes: Sequence[int]) -> "WeightedDag":
        idx = np.asarray(nodes, dtype=int)
        return validate_dag(self.B[np.ix_(idx, idx)])


def validate_dag(B) -> WeightedDag:
    """Check that ``B`` is square, has zero diagonal and an acyclic support."""
    B = np.array(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError(f"B must be square, got shape {B.shape}")
    if np.any(np.diag(B) != 0):
        raise NonZeroDiagonal("B has a nonzero diagonal entry")
    order = _kahn(B != 0)
    if order is None:
        raise CyclicGraph("support of B contains a directed cycle")
    B.setflags(write=False)
    return WeightedDag(B, tuple(order))


@dataclass(frozen=True, eq=False)
class SemModel:
    dag: WeightedDag
    sigma2: float = 1.0
    errors: ErrorSpec | None = None

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise NonPositiveScale("sigma2 must be positive")
        if self.errors is None:
            object.__setattr__(self, "errors", ErrorSpec("gaussian", self.sigma2))
        elif not math.isclose(self.errors.sigma2, self.sigma2):
            raise ValueError("error specification disagrees with sigma2")

    @property
    def p(self) -> int:
        return self.dag.p

    def to_dict(self) -> dict:
        return {"p": self.p, "sigma2": self.sigma2, "error": self.errors.to_dict()}


@dataclass(frozen=True)
class Ordering:
    """Estimated causal order plus the per-step record of the search.

    ``step_criteria[z]`` is the criterion value of ``sequence[z]`` and
    ``step_subsets[z]`` the conditioning set it was chosen with.
    """

    sequence: tuple[int, ...]
    step_criteria: tuple[float, ...]
    step_subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        p = len(self.sequence)
        if sorted(self.sequence) != list(range(p)):
            raise ValueError("sequence is not a permutation")
        if len(self.step_criteria) != p or len(self.step_subsets) != p:
            raise LengthMismatch("per-step records must have one entry per variable")
        placed: set[int] = set()
        for v, sub in zip(self.sequence, self.step_subsets):
            if not set(sub) <= placed:
                raise ValueError("step subset uses a variable not yet ordered")
            placed.add(v)

    @property
    def p(self) -> int:
        return len(self.sequence)

    def to_dict(self) -> dict:
        return {
            "sequence": [v + 1 for v in self.sequence],
            "step_criteria": [float(c) for c in self.step_criteria],
            "step_subsets": [[v + 1 for v in s] for s in self.step_subsets],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Ordering":
        return cls(
            tuple(v - 1 for v in d["sequence"]),
            tuple(float(c) for c in d["step_criteria"]),
            tuple(tuple(v - 1 for v in s) for s in d["step_subsets"]),
        )


def population_covariance(model: SemModel) -> CovarianceEstimate:
    """``sigma2 * (I - B)^-1 (I - B)^-T`` via a triangular solve in topological order."""
    dag = model.dag
    perm = np.asarray(dag.topological_order, dtype=int)
    p = dag.p
    # permuted I - B is unit lower triangular
    L = np.eye(p) - dag.B[np.ix_(perm, perm)]
    A = solve_triangular(L, np.eye(p), lower=True, unit_diagonal=True)
    sig = model.sigma2 * (A @ A.T)
    out = np.empty_like(sig)
    out[np.ix_(perm, perm)] = sig
    out = 0.5 * (out + out.T)
    return CovarianceEstimate(out, n=math.inf)


def zeta(dag: WeightedDag) -> float:
    """Smallest squared edge coefficient; ``math.inf`` for an edgeless graph."""
    w = dag.B[dag.B != 0]
    if w.size == 0:
        return math.inf
    return float(np.min(w * w))


def is_topological(sequence: Sequence[int], dag: WeightedDag) -> bool:
    if len(sequence) != dag.p:
        raise LengthMismatch(f"sequence has {len(sequence)} entries, graph has {dag.p}")
    pos = np.empty(dag.p, dtype=int)
    pos[np.asarray(sequence, dtype=int)] = np.arange(dag.p)
    js, ks = np.nonzero(dag.B)
    return bool(np.all(pos[ks] < pos[js]))


def rescale_known_ratios(data, a, *, covariance: bool = False):
    """Divide out known error-scale ratios ``a``.

    ``data`` is either an ``n x p`` sample matrix (column ``j`` divided by
    ``a[j]``) or a covariance (entry ``(i, j)`` divided by ``a[i] * a[j]``).
    A :class:`CovarianceEstimate` is always treated as a covariance; pass
    ``covariance=True`` for a bare array.
    """
    a = np.asarray(a, dtype=float)
    if np.any(~(a > 0)):
        raise NonPositiveScale("all scale ratios must be positive")
    if isinstance(data, CovarianceEstimate):
        if a.shape != (data.p,):
            raise LengthMismatch("scale vector length differs from p")
        return CovarianceEstimate(data.S / np.outer(a, a), n=data.n, centered=data.centered)
    X = np.asarray(data, dtype=float)
    if covariance:
        if X.shape != (a.size, a.size):
            raise LengthMismatch("scale vector length differs from p")
        return X / np.outer(a, a)
    if X.ndim != 2 or X.shape[1] != a.size:
        raise LengthMismatch("scale vector length differs from number of columns")
    return X / a
