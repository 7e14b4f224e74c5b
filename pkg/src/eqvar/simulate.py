"""Random graph families, coefficient laws and data sampling for simulations.

All randomness flows through :func:`make_rng`, a Philox (counter-based)
generator keyed by a master seed plus a substream path, so replicates can be
generated in any order or in parallel with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .sem import ErrorSpec, SemModel, WeightedDag, validate_dag

__all__ = [
    "ErrorSpec",
    "CoeffLaw",
    "GraphRecipe",
    "FAMILIES",
    "make_rng",
    "gen_chain_random",
    "gen_highdim",
    "gen_peters",
    "gen_fully_connected",
    "generate",
    "sample_data",
    "sparse_pc",
]

FAMILIES = ("chain-random", "highdim-smallk", "highdim-hub", "peters", "fully-connected")


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Philox generator for ``seed`` and substream ``path``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in path))
    return np.random.Generator(np.random.Philox(ss))


def sparse_pc(p: int) -> float:
    """Edge probability of the sparse low-dimensional setting, 3 / (2p - 2)."""
    return 3.0 / (2 * p - 2)


@dataclass(frozen=True)
class CoeffLaw:
    """Uniform magnitude on ``[lo, hi]`` with an independent fair random sign.

    This is the same distribution as the uniform law on
    ``[-hi, -lo] U [lo, hi]``; ``kind`` only records how a config named it.
    """

    lo: float = 0.3
    hi: float = 1.0
    kind: str = "plus-minus"

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError("coefficient law needs 0 < lo < hi")
        if self.kind not in ("plus-minus", "two-sided"):
            raise ValueError(f"unknown coefficient law {self.kind!r}")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        mag = rng.uniform(self.lo, self.hi, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * mag


@dataclass(frozen=True)
class GraphRecipe:
    family: str
    p: int
    coeff_law: CoeffLaw = field(default_factory=CoeffLaw)
    seed: int = 0
    pc: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown graph family {self.family!r}")
        if self.p < 1:
            raise ValueError("p must be positive")
        if not 0 <= self.pc <= 1:
            raise ValueError("pc must lie in [0, 1]")

    def rng(self) -> np.random.Generator:
        return make_rng(self.seed, 0)


def _fill(p: int, pairs: list[tuple[int, int]], law: CoeffLaw, rng) -> WeightedDag:
    # pairs are (parent, child)
    B = np.zeros((p, p))
    if pairs:
        ks, js = np.array(pairs).T
        B[js, ks] = law.draw(rng, len(pairs))
    return validate_dag(B)


def gen_chain_random(recipe: GraphRecipe) -> WeightedDag:
    """Chain ``v -> v+1`` plus each longer forward edge with probability ``pc``."""
    p, rng = recipe.p, recipe.rng()
    pairs = [(v, v + 1) for v in range(p - 1)]
    for u in range(p):
        for v in range(u - 1):
            if rng.random() < recipe.pc:
                pairs.append((v, u))
    return _fill(p, pairs, recipe.coeff_law, rng)


def gen_highdim(recipe: GraphRecipe, variant: str | None = None) -> WeightedDag:
    """Chain plus two extra parents for every node from the third on.

    ``smallk``: a parent must currently have out-degree below 4 (checked
    again after the first draw). ``hub``: parents are drawn from the first
    nine nodes. The chain predecessor is never drawn twice, so in-degree is
    at most 3.
    """
    if variant is None:
        variant = recipe.family.rsplit("-", 1)[-1]
    if variant not in ("smallk", "hub"):
        raise ValueError(f"unknown high-dimensional variant {variant!r}")
    p, rng = recipe.p, recipe.rng()
    if p < 4:
        raise ValueError("high-dimensional families need p >= 4")
    pairs = [(v, v + 1) for v in range(p - 1)]
    outdeg = np.zeros(p, dtype=int)
    outdeg[: p - 1] = 1
    # 0-based v >= 2 is 1-based v > 2
    for v in range(2, p):
        chosen: list[int] = []
        for _ in range(2):
            if variant == "smallk":
                pool = [u for u in range(v - 1) if outdeg[u] < 4 and u not in chosen]
            else:
                # 1-based u < min(v, 10)
                pool = [u for u in range(min(v + 1, 10) - 1) if u != v - 1 and u not in chosen]
            if not pool:
                break
            u = pool[int(rng.integers(len(pool)))]
            chosen.append(u)
            outdeg[u] += 1
        pairs.extend((u, v) for u in chosen)
    return _fill(p, pairs, recipe.coeff_law, rng)


def gen_peters(recipe: GraphRecipe) -> WeightedDag:
    """Random causal order, then every pair joined with probability ``pc``."""
    p, rng = recipe.p, recipe.rng()
    perm = rng.permutation(p)
    pairs = []
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < recipe.pc:
                pairs.append((int(perm[a]), int(perm[b])))
    return _fill(p, pairs, recipe.coeff_law, rng)


def gen_fully_connected(recipe: GraphRecipe) -> WeightedDag:
    p, rng = recipe.p, recipe.rng()
    pairs = [(v, u) for u in range(p) for v in range(u)]
    return _fill(p, pairs, recipe.coeff_law, rng)


def generate(recipe: GraphRecipe) -> WeightedDag:
    if recipe.family == "chain-random":
        return gen_chain_random(recipe)
    if recipe.family == "peters":
        return gen_peters(recipe)
    if recipe.family == "fully-connected":
        return gen_fully_connected(recipe)
    return gen_highdim(recipe)


def draw_errors(spec: ErrorSpec, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "gaussian":
        return rng.standard_normal((n, p)) * np.sqrt(spec.sigma2)
    signs = np.where(rng.random((n, p)) < 0.5, -1.0, 1.0)
    return signs * np.sqrt(spec.sigma2)


def sample_data(model: SemModel, n: int, seed, *path: int) -> np.ndarray:
    """``n`` draws of ``X = (I - B)^-1 eps``, solved in topological order.

    ``seed`` is an integer (optionally with a substream ``path``) or an
    existing ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed, *path)
    dag = model.dag
    eps = draw_errors(model.errors, n, dag.p, rng)
    perm = np.asarray(dag.topological_order, dtype=int)
    L = np.eye(dag.p) - dag.B[np.ix_(perm, perm)]
    # rows of X satisfy L x = eps, i.e. X_perm = eps_perm L^-T
    Xp = solve_triangular(L, eps[:, perm].T, lower=True, unit_diagonal=True).T
    X = np.empty_like(Xp)
    X[:, perm] = Xp
    return X
