import math
import random
import statistics

import pytest

from conftest import A, B, C, random_graph
from usimrank import (
    UncertainGraph,
    estimate_meeting,
    required_samples,
    sample_walk,
    sample_walks,
    simrank_sampling,
)
from usimrank.oracle import exact_kstep_all, exact_simrank_uncertain
from usimrank.sampling import LazyWorld, sampling_bound


class TestSampleWalk:
    def test_certain_cycle_is_deterministic(self):
        g = UncertainGraph(2, [(0, 1, 1.0), (1, 0, 1.0)])
        rng = random.Random(0)
        for _ in range(20):
            assert sample_walk(g, 0, 4, rng) == (0, 1, 0, 1, 0)

    def test_isolated_vertex_dies_immediately(self):
        g = UncertainGraph(1, [])
        assert sample_walk(g, 0, 3, random.Random(1)) == (0,)

    def test_first_step_frequency(self, toy):
        # The walk advances past a iff arc (a, b) is instantiated: p = 0.5,
        # 10,000 draws, 4 sigma is 0.02.
        rng = random.Random(17)
        hits = sum(len(sample_walk(toy, A, 2, rng)) > 1 for _ in range(10_000))
        assert abs(hits / 10_000 - 0.5) <= 0.02

    def test_never_uses_missing_arcs(self):
        rng = random.Random(5)
        for _ in range(50):
            g = random_graph(rng)
            walk = sample_walk(g, rng.randrange(g.vertex_count), 6, rng)
            for u, v in zip(walk, walk[1:]):
                assert g.has_arc(u, v)

    def test_frozen_world_is_stable(self, toy):
        rng = random.Random(9)
        for _ in range(100):
            world = LazyWorld(toy, rng)
            first = [list(world.options(v)) for v in toy.vertices()]
            again = [list(world.options(v)) for v in toy.vertices()]
            assert first == again
            for v, options in enumerate(first):
                assert set(options) <= set(toy.out_targets(v))


class TestEstimateMeeting:
    def test_identical_walks(self):
        walks = [(0, 1, 2)] * 5
        for k in range(3):
            assert estimate_meeting(walks, walks, k) == 1.0

    def test_parity_pair_stays_near_zero(self, toy):
        rng = random.Random(3)
        means = []
        for _ in range(100):
            wu = sample_walks(toy, A, 4, 50, rng)
            wv = sample_walks(toy, B, 4, 50, rng)
            means.append(
                statistics.fmean(estimate_meeting(wu, wv, k) for k in range(1, 5))
            )
        assert statistics.fmean(means) <= 0.01

    def test_toy_self_pair_two_steps(self, toy):
        # Enumeration gives 0.15625; N = 10,000 keeps 4 sigma under 0.015.
        rng = random.Random(11)
        wu = sample_walks(toy, A, 2, 10_000, rng)
        wv = sample_walks(toy, A, 2, 10_000, rng)
        assert estimate_meeting(wu, wv, 2) == pytest.approx(0.15625, abs=0.015)

    def test_short_walks_never_meet(self):
        assert estimate_meeting([(0,)], [(0, 1)], 1) == 0.0

    def test_rejects_empty_or_mismatched(self):
        with pytest.raises(ValueError):
            estimate_meeting([], [], 1)
        with pytest.raises(ValueError):
            estimate_meeting([(0,)], [(0,), (1,)], 1)

    def test_unbiased_against_enumeration(self):
        # Mean over 200 runs within 4 standard errors of the exact value.
        rng = random.Random(101)
        g = random_graph(random.Random(8), max_vertices=5, max_arcs=10)
        mats = exact_kstep_all(g, 4)
        u, v = 0, 1
        runs = {k: [] for k in range(1, 5)}
        for _ in range(200):
            wu = sample_walks(g, u, 4, 300, rng)
            wv = sample_walks(g, v, 4, 300, rng)
            for k in range(1, 5):
                runs[k].append(estimate_meeting(wu, wv, k))
        for k in range(1, 5):
            exact = float(mats[k - 1].row(u) @ mats[k - 1].row(v))
            mean = statistics.fmean(runs[k])
            se = statistics.stdev(runs[k]) / math.sqrt(len(runs[k]))
            assert abs(mean - exact) <= max(4 * se, 1e-9)


class TestRequiredSamples:
    def test_reference_values(self):
        assert required_samples(0.1, 0.1) == 899
        assert required_samples(1.0, 2.0 / math.e**3) == 9

    def test_monotone(self):
        assert required_samples(0.05, 0.1) >= required_samples(0.1, 0.1)
        assert required_samples(0.1, 0.01) >= required_samples(0.1, 0.1)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            required_samples(0.0, 0.1)
        with pytest.raises(ValueError):
            required_samples(0.1, 1.0)


class TestSimrankSampling:
    def test_dead_start_keeps_only_base_term(self):
        g = UncertainGraph(2, [(1, 0, 0.5)])
        est = simrank_sampling(g, 0, 0, 3, 0.6, 50, random.Random(2))
        assert est.value == pytest.approx(1.0 - 0.6)

    def test_toy_self_pair_close_to_exact(self, toy):
        # 100 repetitions with N = 10,000: at least 90% land within 0.03
        # of the enumerated value.
        exact = exact_simrank_uncertain(toy, A, A, 3, 0.6)
        rng = random.Random(7)
        close = 0
        for _ in range(100):
            est = simrank_sampling(toy, A, A, 3, 0.6, 10_000, rng)
            close += abs(est.value - exact) <= 0.03
        assert close >= 90

    def test_mutual_cycle_distinct_pair_is_zero(self):
        g = UncertainGraph(2, [(0, 1, 1.0), (1, 0, 1.0)])
        est = simrank_sampling(g, 0, 1, 4, 0.6, 200, random.Random(3))
        assert est.value == 0.0

    def test_value_in_unit_interval(self):
        rng = random.Random(13)
        for _ in range(20):
            g = random_graph(rng)
            u = rng.randrange(g.vertex_count)
            v = rng.randrange(g.vertex_count)
            est = simrank_sampling(g, u, v, 4, 0.6, 100, rng)
            assert 0.0 <= est.value <= 1.0

    def test_deterministic_under_seed(self, toy):
        a = simrank_sampling(toy, A, A, 3, 0.6, 500, random.Random(42))
        b = simrank_sampling(toy, A, A, 3, 0.6, 500, random.Random(42))
        assert a.value == b.value

    def test_accuracy_target_sets_count_and_bound(self, toy):
        est = simrank_sampling(
            toy, A, A, 3, 0.6, rng=random.Random(1), epsilon=0.1, delta=0.1
        )
        assert est.N == 899
        assert est.bound == pytest.approx(sampling_bound(3, 0.6, 0.1))
        assert est.bound == pytest.approx((0.6 - 0.6**3) * 0.1)
