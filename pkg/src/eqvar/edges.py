"""Graph recovery given an ordering: lasso regression on predecessors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LengthMismatch, NoConvergence, TooFewRows
from .sem import Ordering
from .simulate import make_rng

__all__ = ["LassoFit", "EstimatedGraph", "lasso_fit", "lasso_path", "cv_lasso", "select_edges"]

TOL = 1e-7
MAX_SWEEPS = 100_000
N_LAMBDA = 50
LAMBDA_RATIO = 1e-3
EDGE_THRESHOLD = 1e-8


@dataclass(frozen=True, eq=False)
class LassoFit:
    """Lasso solution on the original scale of ``X``.

    ``lam`` is the penalty on the standardised problem, where every column has
    unit 1/n-variance; ``std_coefficients`` holds that problem's solution.
    """

    coefficients: np.ndarray
    lam: float
    intercept: float
    cv_error: float | None = None
    std_coefficients: np.ndarray | None = None
    sweeps: int = 0

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(np.abs(self.coefficients) > EDGE_THRESHOLD)


@dataclass(frozen=True, eq=False)
class EstimatedGraph:
    """Fitted weights; ``adjacency[j, k] != 0`` encodes the edge ``k -> j``."""

    adjacency: np.ndarray

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        js, ks = np.nonzero(self.adjacency)
        return frozenset(zip(ks.tolist(), js.tolist()))


class _Standardised:
    """Centred, unit-variance design in covariance form."""

    def __init__(self, X: np.ndarray, y: np.ndarray):
        n = X.shape[0]
        self.n = n
        self.x_mean = X.mean(axis=0)
        self.y_mean = float(y.mean())
        Xc = X - self.x_mean
        sd = np.sqrt((Xc * Xc).mean(axis=0))
        self.scale = np.where(sd > 0, sd, 1.0)
        self.active = sd > 0
        Z = Xc / self.scale
        Z[:, ~self.active] = 0.0
        yc = y - self.y_mean
        self.G = Z.T @ Z / n
        self.c = Z.T @ yc / n
        self.yy = float(yc @ yc / n)

    @property
    def lambda_max(self) -> float:
        return float(np.max(np.abs(self.c))) if self.c.size else 0.0

    def solve(self, lam: float, beta: np.ndarray) -> int:
        sweeps = _kernels.lasso_cd(self.G, self.c, float(lam), beta, TOL, MAX_SWEEPS)
        if sweeps < 0:
            raise NoConvergence(f"coordinate descent did not converge in {MAX_SWEEPS} sweeps")
        return sweeps

    def objective(self, beta: np.ndarray, lam: float) -> float:
        return 0.5 * (self.yy - 2 * self.c @ beta + beta @ self.G @ beta) + lam * np.abs(beta).sum()

    def unscale(self, beta: np.ndarray) -> tuple[np.ndarray, float]:
        coef = beta / self.scale
        return coef, self.y_mean - float(self.x_mean @ coef)


def _prepare(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.size:
        raise LengthMismatch("X and y have different numbers of rows")
    if X.shape[0] < 2:
        raise TooFewRows("lasso needs at least 2 rows")
    if X.shape[1] < 1:
        raise ValueError("lasso needs at least one predictor")
    return X, y


def lasso_fit(X, y, lam: float, beta0: np.ndarray | None = None) -> LassoFit:
    """Minimise ``(1/2n)|y - Xb|^2 + lam |b|_1`` over standardised columns."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    X, y = _prepare(X, y)
    prob = _Standardised(X, y)
    beta = np.zeros(X.shape[1]) if beta0 is None else np.array(beta0, dtype=float)
    sweeps = prob.solve(lam, beta)
    coef, icpt = prob.unscale(beta)
    return LassoFit(coef, float(lam), icpt, None, beta, sweeps)


def lambda_grid(lam_max: float) -> np.ndarray:
    return lam_max * np.geomspace(1.0, LAMBDA_RATIO, N_LAMBDA)


def lasso_path(prob: _Standardised, lambdas: np.ndarray) -> np.ndarray:
    """Warm-started solutions, one row per penalty, on the standardised scale."""
    beta = np.zeros(prob.c.size)
    out = np.empty((lambdas.size, beta.size))
    for i, lam in enumerate(lambdas):
        prob.solve(lam, beta)
        out[i] = beta
    return out


def cv_lasso(X, y, folds: int = 5, seed: int = 0, rule: str = "1se") -> LassoFit:
    """Lasso with the penalty chosen by K-fold cross-validation.

    Rows are shuffled once with ``seed`` and cut into contiguous folds; the
    grid is 50 log-spaced penalties from the full-data ``lambda_max`` down to
    ``1e-3 * lambda_max``. ``rule="min"`` takes the penalty with the smallest
    CV error, ``rule="1se"`` the largest penalty whose CV error is within one
    standard error of that minimum.
    """
    if rule not in ("min", "1se"):
        raise ValueError(f"unknown selection rule {rule!r}")
    X, y = _prepare(X, y)
    n, d = X.shape
    if folds < 2 or n < folds:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    full = _Standardised(X, y)
    lam_max = full.lambda_max
    if lam_max <= 0:
        return LassoFit(np.zeros(d), 0.0, full.y_mean, 0.0, np.zeros(d), 0)
    lambdas = lambda_grid(lam_max)
    perm = make_rng(seed).permutation(n)
    blocks = np.array_split(perm, folds)
    fold_mse = np.empty((folds, lambdas.size))
    sizes = np.array([len(b) for b in blocks], dtype=float)
    for f, test in enumerate(blocks):
        train = np.ones(n, dtype=bool)
        train[test] = False
        prob = _Standardised(X[train], y[train])
        path = lasso_path(prob, lambdas)
        coefs = path / prob.scale
        icpts = prob.y_mean - coefs @ prob.x_mean
        pred = X[test] @ coefs.T + icpts
        fold_mse[f] = ((y[test][:, None] - pred) ** 2).mean(axis=0)
    cv = sizes @ fold_mse / n
    best = int(np.argmin(cv))
    if rule == "1se":
        # fold-size weighted spread of the fold errors, as in glmnet
        spread = sizes @ (fold_mse - cv) ** 2 / n
        se = np.sqrt(spread / (folds - 1))
        best = int(np.flatnonzero(cv <= cv[best] + se[best])[0])
    beta = lasso_path(full, lambdas[: best + 1])[-1].copy()
    coef, icpt = full.unscale(beta)
    return LassoFit(coef, float(lambdas[best]), icpt, float(cv[best]), beta, 0)


def select_edges(
    X, ordering: Ordering, folds: int = 5, seed: int = 0, rule: str = "1se"
) -> EstimatedGraph:
    """Regress each variable on its predecessors and keep nonzero coefficients."""
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if ordering.p != p:
        raise LengthMismatch("ordering length differs from the number of columns")
    A = np.zeros((p, p))
    seq = list(ordering.sequence)
    for z in range(1, p):
        j, preds = seq[z], seq[:z]
        fit = cv_lasso(X[:, preds], X[:, j], folds=folds, seed=_fold_seed(seed, z), rule=rule)
        keep = np.abs(fit.coefficients) > EDGE_THRESHOLD
        A[j, np.asarray(preds)[keep]] = fit.coefficients[keep]
    return EstimatedGraph(A)


def _fold_seed(seed: int, position: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(position,)).generate_state(1)[0])
