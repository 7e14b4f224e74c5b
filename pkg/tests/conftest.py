import sys

import numpy as np
import pytest

from eqvar import SemModel, population_covariance, validate_dag


def random_model(rng, p_max=8, lo=0.3, hi=1.0, density=None, sigma2=1.0):
    """Random DAG under a random causal order, |coefficients| in [lo, hi]."""
    p = int(rng.integers(2, p_max + 1))
    dens = rng.uniform(0.2, 0.9) if density is None else density
    perm = rng.permutation(p)
    B = np.zeros((p, p))
    for a in range(p):
        for b in range(a + 1, p):
            if rng.random() < dens:
                mag = rng.uniform(lo, hi)
                B[perm[b], perm[a]] = mag if rng.random() < 0.5 else -mag
    return SemModel(validate_dag(B), sigma2)


def random_pd(rng, p, extra=5):
    A = rng.standard_normal((p + extra, p))
    return A.T @ A / (p + extra)


@pytest.fixture
def chain3():
    B = np.zeros((3, 3))
    B[1, 0] = B[2, 1] = 1.0
    return SemModel(validate_dag(B), 1.0)


@pytest.fixture
def collider3():
    B = np.zeros((3, 3))
    B[2, 0] = B[2, 1] = 1.0
    return SemModel(validate_dag(B), 1.0)


@pytest.fixture
def chain_cov(chain3):
    return population_covariance(chain3)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
