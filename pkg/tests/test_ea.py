import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_net
from neuroablate.datasets import Dataset, gen_synthetic
from neuroablate.ea import (
    Chromosome,
    EAConfig,
    crossover,
    decode,
    encode,
    evolve,
    fitness,
    mutate,
    population_fitness,
    roulette_select,
    selection_probs,
)
from neuroablate.errors import ArityError, ConfigError
from neuroablate.netcore import NeuronConfig, Topology, networks_equal


def brute_fitness(net, data):
    total = 0.0
    for x, t in zip(data.inputs, data.targets):
        h = [
            1 / (1 + math.exp(-(sum(w * v for w, v in zip(row[:-1], x)) + row[-1])))
            for row in net.weights[0]
        ]
        for k, row in enumerate(net.weights[1]):
            o = 1 / (1 + math.exp(-(sum(w * v for w, v in zip(row[:-1], h)) + row[-1])))
            total += (o - t[k]) ** 2
    return total


class TestEncoding:
    def test_round_trip(self):
        net = random_net(Topology(9, (8,), 2), 0)
        assert networks_equal(decode(encode(net), net.topology), net)

    def test_gene_count(self):
        assert len(encode(random_net(Topology(9, (8,), 2), 0)).genes) == 98

    def test_truncated(self):
        genes = encode(random_net(Topology(9, (8,), 2), 0)).genes
        with pytest.raises(ArityError):
            decode(genes[:-1], Topology(9, (8,), 2))

    def test_row_major_order(self):
        net = random_net(Topology(2, (1,), 1), 0)
        g = encode(net).genes
        assert g[2] == net.weights[0][0, 2]
        assert g[3] == net.weights[1][0, 0]

    def test_neuron_configs_carried(self):
        t = Topology(2, (2,), 2)
        cfgs = [[NeuronConfig(output_scale=0.5)] * 2, [NeuronConfig()] * 2]
        net = decode(np.zeros(t.n_weights), t, cfgs)
        assert net.neuron_configs[0][1].output_scale == 0.5


class TestFitness:
    def test_zero_when_outputs_match(self):
        t = Topology(1, (1,), 1)
        data = Dataset(np.array([[0.0], [1.0]]), np.array([[1.0], [1.0]]))
        # saturated output neuron ~ 1 everywhere
        genes = np.array([0.0, 0.0, 0.0, 800.0])
        assert fitness(genes, data, t) == 0.0

    def test_zero_weights(self):
        t = Topology(1, (1,), 1)
        data = Dataset(np.array([[0.3]]), np.array([[1.0]]))
        assert fitness(np.zeros(4), data, t) == 0.25

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_double_loop(self, seed):
        t = Topology(2, (2,), 2)
        net = random_net(t, seed)
        data = gen_synthetic("xor")
        assert fitness(encode(net), data, t) == pytest.approx(brute_fitness(net, data), rel=1e-12)

    def test_population_matches_single(self):
        t = Topology(2, (3,), 2)
        data = gen_synthetic("blobs", 30, 1)
        pop = np.random.default_rng(0).uniform(-2, 2, (6, t.n_weights))
        cfgs = [[NeuronConfig(output_scale=0.0), NeuronConfig(), NeuronConfig()], [NeuronConfig()] * 2]
        got = population_fitness(pop, data, t, cfgs)
        want = [fitness(g, data, t, cfgs) for g in pop]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_arity(self):
        with pytest.raises(ArityError):
            fitness(np.zeros(Topology(3, (2,), 2).n_weights), gen_synthetic("xor"), Topology(3, (2,), 2))


class TestSelection:
    def test_equal_fits_uniform(self):
        np.testing.assert_allclose(selection_probs([2.0] * 5), 0.2)

    def test_worst_gets_epsilon(self):
        p = selection_probs([0.0, 1.0])
        assert p[0] == pytest.approx(1.0)
        assert p[1] == pytest.approx(1e-9, rel=1e-6)

    def test_reciprocal(self):
        p = selection_probs([1.0, 3.0], epsilon=1e-12, inversion="reciprocal")
        np.testing.assert_allclose(p, [0.75, 0.25])

    @given(st.lists(st.floats(0, 1e6), min_size=1, max_size=30), st.sampled_from(["linear", "reciprocal"]))
    def test_distribution(self, fits, inversion):
        p = selection_probs(fits, inversion=inversion)
        assert np.all(p >= 0)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.floats(0, 1e3), min_size=2, max_size=20))
    def test_lower_fit_never_less_likely(self, fits):
        p = selection_probs(fits)
        order = np.argsort(fits, kind="stable")
        assert np.all(np.diff(p[order]) <= 1e-15)

    def test_negative_fit(self):
        with pytest.raises(ValueError):
            selection_probs([-1.0, 0.0])

    def test_certain_winner(self, rng):
        assert set(roulette_select([1.0, 0.0, 0.0], 500, rng)) == {0}

    def test_count_zero(self, rng):
        assert len(roulette_select([0.5, 0.5], 0, rng)) == 0

    def test_frequencies(self, rng):
        from scipy.stats import chisquare

        p = np.array([0.1, 0.2, 0.3, 0.4])
        counts = np.bincount(roulette_select(p, 20000, rng), minlength=4)
        assert chisquare(counts, 20000 * p).pvalue > 0.001


class TestCrossover:
    def test_endpoints(self, rng):
        w1, w2 = np.array([1.0, 2.0]), np.array([3.0, -4.0])
        c1, c2 = crossover(w1, w2, rng, alpha=1.0, beta=0.0)
        np.testing.assert_array_equal(c1, w1)
        np.testing.assert_array_equal(c2, w2)

    def test_midpoint(self, rng):
        c1, c2 = crossover([0.0, 2.0], [2.0, 4.0], rng, alpha=0.5, beta=0.5)
        np.testing.assert_array_equal(c1, [1.0, 3.0])
        np.testing.assert_array_equal(c2, [1.0, 3.0])

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_children_inside_parent_box(self, seed):
        rng = np.random.default_rng(seed)
        w1, w2 = rng.normal(size=10), rng.normal(size=10)
        lo, hi = np.minimum(w1, w2), np.maximum(w1, w2)
        for c in crossover(w1, w2, rng):
            assert np.all(c >= lo - 1e-12) and np.all(c <= hi + 1e-12)

    def test_swapping_parents_swaps_weights(self, rng):
        w1, w2 = np.array([1.0, 5.0]), np.array([-2.0, 0.5])
        a = crossover(w1, w2, rng, 0.3, 0.8)
        b = crossover(w2, w1, rng, 0.7, 0.2)
        np.testing.assert_allclose(a[0], b[0])
        np.testing.assert_allclose(a[1], b[1])

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            crossover([1.0], [1.0, 2.0], rng)


class TestMutation:
    def test_single_gene_within_bound(self, rng):
        g = np.zeros(20)
        for _ in range(200):
            m = mutate(g, 0.4, rng)
            changed = np.flatnonzero(m != g)
            assert len(changed) <= 1
            assert np.all(np.abs(m - g) <= 0.4)
        assert np.all(g == 0)

    def test_step_mean_near_zero(self, rng):
        steps = np.array([mutate([0.0], 0.4, rng)[0] for _ in range(20000)])
        # U(-0.4, 0.4): sd = 0.4 / sqrt(3)
        assert abs(steps.mean()) < 4 * 0.4 / math.sqrt(3) / math.sqrt(20000)

    def test_per_gene_bound(self, rng):
        m = mutate(np.ones(50), 0.1, rng, mode="per-gene")
        assert np.all(np.abs(m - 1) <= 0.1)

    def test_bad_cte(self, rng):
        with pytest.raises(ValueError):
            mutate([0.0], 0.0, rng)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"population_size": 3},
            {"population_size": 0},
            {"generations": 0},
            {"crossover_prob": 1.5},
            {"mutation_cte": 0.0},
            {"inversion": "rank"},
        ],
    )
    def test_rejected(self, kw):
        with pytest.raises(ConfigError):
            EAConfig(**kw)


class TestEvolve:
    def test_curve_length_and_monotone(self):
        res = evolve(Topology(2, (4,), 2), gen_synthetic("xor"), EAConfig(generations=150, seed=2))
        assert res.curve.steps == list(range(1, 151))
        assert np.all(np.diff(res.curve.sse) <= 0)

    def test_best_ever_beats_final_population(self):
        res = evolve(Topology(2, (4,), 2), gen_synthetic("xor"), EAConfig(generations=100, seed=5))
        assert res.best.fit <= res.final_fits.min()
        assert res.best.fit == res.curve.sse[-1]
        assert fitness(res.best, gen_synthetic("xor"), Topology(2, (4,), 2)) == pytest.approx(res.best.fit, rel=1e-12)

    def test_deterministic(self):
        cfg = EAConfig(generations=50, seed=11)
        a = evolve(Topology(2, (4,), 2), gen_synthetic("xor"), cfg)
        b = evolve(Topology(2, (4,), 2), gen_synthetic("xor"), cfg)
        assert networks_equal(a.network, b.network)
        assert a.curve == b.curve

    def test_unpacks_like_bp(self):
        net, curve = evolve(Topology(2, (2,), 2), gen_synthetic("xor"), EAConfig(generations=3))
        assert curve.kind == "ea"
        assert net.topology == Topology(2, (2,), 2)

    def test_target_fit_stops(self):
        res = evolve(Topology(2, (4,), 2), gen_synthetic("xor"), EAConfig(generations=500, target_fit=10.0))
        assert len(res.curve.steps) == 1

    def test_no_variation_keeps_population(self):
        cfg = EAConfig(generations=20, crossover_prob=0.0, mutation_prob=0.0, seed=3)
        res = evolve(Topology(2, (2,), 2), gen_synthetic("xor"), cfg)
        first = np.random.default_rng(3).uniform(-0.5, 0.5, (10, Topology(2, (2,), 2).n_weights))
        # selection only copies rows of the initial population
        for row in res.final_population:
            assert any(np.array_equal(row, f) for f in first)

    def test_chromosome_fit_slot(self):
        assert Chromosome(np.zeros(3)).fit is None
