import math

import numpy as np
import pytest

from eqvar import (
    CoeffLaw,
    ErrorSpec,
    GraphRecipe,
    SemModel,
    gen_chain_random,
    gen_fully_connected,
    gen_highdim,
    gen_peters,
    generate,
    is_topological,
    make_rng,
    population_covariance,
    sample_covariance,
    sample_data,
    validate_dag,
    zeta,
)
from eqvar.simulate import FAMILIES, sparse_pc


def recipe(family, p, seed=0, pc=0.0, lo=0.3, hi=1.0):
    return GraphRecipe(family, p, CoeffLaw(lo, hi), seed=seed, pc=pc)


class TestChainRandom:
    def test_pure_chain(self):
        dag = gen_chain_random(recipe("chain-random", 6))
        assert dag.edges == {(v, v + 1) for v in range(5)}

    def test_complete(self):
        dag = gen_chain_random(recipe("chain-random", 6, pc=1.0))
        assert dag.n_edges == 15

    def test_mean_edge_count(self):
        counts = [gen_chain_random(recipe("chain-random", 20, seed=s, pc=0.3)).n_edges for s in range(500)]
        # 19 chain edges plus Binomial(171, 0.3)
        se = math.sqrt(171 * 0.3 * 0.7 / 500)
        assert abs(np.mean(counts) - 70.3) < 4 * se

    def test_unique_order(self):
        for s in range(50):
            dag = gen_chain_random(recipe("chain-random", 10, seed=s, pc=0.2))
            assert is_topological(tuple(range(10)), dag)
            assert all((v, v + 1) in dag.edges for v in range(9))

    def test_sparse_pc(self):
        assert sparse_pc(40) == pytest.approx(3 / 78)


class TestHighDim:
    @pytest.mark.parametrize("variant", ["smallk", "hub"])
    def test_in_degree_at_most_three(self, variant):
        for s in range(50):
            dag = gen_highdim(recipe(f"highdim-{variant}", 60, seed=s), variant)
            assert dag.max_in_degree <= 3
            assert all((v, v + 1) in dag.edges for v in range(59))

    def test_smallk_blanket_bounded(self):
        sizes = [gen_highdim(recipe("highdim-smallk", 100, seed=s)).max_markov_blanket for s in range(100)]
        assert max(sizes) <= 15

    def test_smallk_out_degree(self):
        for s in range(50):
            B = gen_highdim(recipe("highdim-smallk", 80, seed=s)).B
            assert ((B != 0).sum(axis=0) <= 4).all()

    def test_hub_blanket_large(self):
        sizes = [gen_highdim(recipe("highdim-hub", 100, seed=s)).max_markov_blanket for s in range(100)]
        assert min(sizes) >= 20

    def test_hub_parents_from_first_nodes(self):
        dag = gen_highdim(recipe("highdim-hub", 50, seed=3))
        for k, j in dag.edges:
            assert k == j - 1 or k < min(j + 1, 10) - 1

    def test_too_small(self):
        with pytest.raises(ValueError):
            gen_highdim(recipe("highdim-hub", 3))


class TestPeters:
    def test_empty(self):
        assert gen_peters(recipe("peters", 8, pc=0.0)).n_edges == 0

    def test_complete(self):
        assert gen_peters(recipe("peters", 8, pc=1.0, lo=0.1)).n_edges == 28

    def test_coefficient_support(self):
        vals = []
        for s in range(400):
            B = gen_peters(recipe("peters", 12, seed=s, pc=0.5, lo=0.1)).B
            vals.extend(np.abs(B[B != 0]).tolist())
        vals = np.array(vals)
        assert vals.size >= 10**4
        assert vals.min() >= 0.1 and vals.max() <= 1.0


class TestFullyConnected:
    def test_edges(self):
        dag = gen_fully_connected(recipe("fully-connected", 5))
        assert dag.n_edges == 10
        assert is_topological(tuple(range(5)), dag)

    def test_zeta_floor(self):
        for s in range(50):
            assert zeta(gen_fully_connected(recipe("fully-connected", 6, seed=s))) >= 0.09


@pytest.mark.parametrize("family", FAMILIES)
def test_generators_valid_and_law_respected(family):
    lo, hi = 0.5, 0.9
    for s in range(30):
        dag = generate(recipe(family, 12, seed=s, pc=0.4, lo=lo, hi=hi))
        validate_dag(dag.B)
        mags = np.abs(dag.B[dag.B != 0])
        assert np.all((mags >= lo) & (mags <= hi))


def test_signs_balanced():
    draws = CoeffLaw().draw(make_rng(0), 20000)
    assert abs((draws > 0).mean() - 0.5) < 0.02


def test_generator_deterministic():
    a = generate(recipe("chain-random", 15, seed=9, pc=0.3))
    b = generate(recipe("chain-random", 15, seed=9, pc=0.3))
    assert np.array_equal(a.B, b.B)


def test_recipe_validation():
    with pytest.raises(ValueError):
        recipe("chain-random", 5, pc=1.5)
    with pytest.raises(ValueError):
        CoeffLaw(1.0, 0.5)
    with pytest.raises(ValueError):
        recipe("mystery", 5)


class TestSampleData:
    def test_independent_columns(self):
        n = 5000
        X = sample_data(SemModel(validate_dag(np.zeros((4, 4))), 1.0), n, 1)
        assert np.all(np.abs(X.var(axis=0) - 1) <= 3 * math.sqrt(2 / n))

    def test_chain_large_sample(self):
        B = np.zeros((3, 3))
        B[1, 0] = B[2, 1] = 1.0
        X = sample_data(SemModel(validate_dag(B), 1.0), 10**6, 2)
        np.testing.assert_allclose(sample_covariance(X).S, [[1, 1, 1], [1, 2, 2], [1, 2, 3]], atol=0.01)

    def test_rademacher_values(self):
        m = SemModel(validate_dag(np.zeros((3, 3))), 0.8, ErrorSpec("rademacher", 0.8))
        X = sample_data(m, 1000, 3)
        assert np.allclose(np.abs(X), math.sqrt(0.8))

    def test_converges_to_population(self):
        for s in range(20):
            dag = generate(recipe("chain-random", 10, seed=s, pc=0.3))
            m = SemModel(dag, 1.0)
            n = 20000
            S = population_covariance(m).S
            Sh = sample_covariance(sample_data(m, n, s)).S
            tol = 5 * S.diagonal().max() * math.sqrt(math.log(10) / n)
            assert np.abs(Sh - S).max() <= tol

    def test_deterministic_and_substreams(self):
        m = SemModel(generate(recipe("peters", 6, pc=0.5, lo=0.1)), 1.0)
        assert np.array_equal(sample_data(m, 50, 4), sample_data(m, 50, 4))
        assert not np.array_equal(sample_data(m, 50, 4, 1), sample_data(m, 50, 4, 2))

    def test_structural_equation_holds(self):
        m = SemModel(generate(recipe("peters", 7, seed=5, pc=0.6, lo=0.1)), 1.0)
        X = sample_data(m, 30, 5)
        eps = X - X @ m.dag.B.T
        ref = make_rng(5)
        np.testing.assert_allclose(eps, ref.standard_normal((30, 7)), atol=1e-12)
