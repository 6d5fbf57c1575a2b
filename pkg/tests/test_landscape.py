import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from plantedclique import (GammaParam, binary_entropy, brute_force_min,
                           enumerate_local_minima, gen_er, gen_planted,
                           init_state, local_min_check)

from conftest import graph_from_edges


class TestBinaryEntropy:
    def test_half_is_one(self):
        assert binary_entropy(0.5) == 1.0

    def test_degenerate_ends(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_point_nine(self):
        # frozen from the definition: -0.9 log2 0.9 - 0.1 log2 0.1
        assert abs(binary_entropy(0.9) - 0.4690) <= 1e-4
        assert abs(binary_entropy(0.9) - 0.46899559358928122) <= 1e-15

    def test_symmetry(self):
        for p in (0.1, 0.25, 0.4):
            assert binary_entropy(p) == pytest.approx(binary_entropy(1 - p), abs=1e-15)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(1.01)


class TestLocalMinCheck:
    def test_singleton_never_strict(self):
        g = graph_from_edges(4, [(0, 1)])
        rep = local_min_check(g, [0], GammaParam(2))
        assert not rep.is_strict_local_min
        assert not rep.is_absorbing  # adding the neighbour 1 lowers energy
        rep = local_min_check(g, [3], GammaParam(2))
        assert not rep.is_strict_local_min
        assert rep.is_absorbing  # isolated singleton: nothing improves

    def test_empty_set_absorbing_not_strict(self):
        g = gen_er(10, 0)
        rep = local_min_check(g, [], GammaParam(3))
        assert rep.is_absorbing and not rep.is_strict_local_min
        assert rep.violating_vertex is not None

    def test_triangle_strict_at_gamma_three(self):
        # triangle plus two outsiders with at most 2 edges into it:
        # inside degrees 2 > kappa*2 = 3/2, outside 2 < kappa*3 = 9/4
        g = graph_from_edges(5, [(0, 1), (0, 2), (1, 2), (3, 0), (3, 1), (4, 2)])
        rep = local_min_check(g, [0, 1, 2], GammaParam(3))
        assert rep.is_strict_local_min and rep.is_absorbing
        assert rep.violating_vertex is None
        assert rep.kappa == Fraction(3, 4)

    def test_triangle_not_strict_with_universal_outsider(self):
        g = graph_from_edges(5, [(0, 1), (0, 2), (1, 2), (3, 0), (3, 1), (3, 2)])
        rep = local_min_check(g, [0, 1, 2], GammaParam(3))
        assert not rep.is_strict_local_min
        assert rep.violating_vertex == 3

    def test_planted_clique_is_strict_on_most_instances(self):
        hits = 0
        for seed in range(20):
            inst = gen_planted(64, 24, seed)
            rep = local_min_check(inst.graph, range(24), GammaParam(4))
            hits += rep.is_strict_local_min
            assert rep.is_strict_local_min <= rep.is_absorbing
        assert hits >= 16

    def test_matches_exhaustive_delta_scan(self, rng):
        for trial in range(60):
            n = int(rng.integers(2, 30))
            g = gen_er(n, int(rng.integers(0, 10**6)))
            u = np.flatnonzero(rng.random(n) < rng.random())
            qd = int(rng.integers(1, 4))
            gam = GammaParam(qd + int(rng.integers(1, 9)), qd)
            state = init_state(g, u, gam)
            deltas = state.all_flip_deltas()
            rep = local_min_check(g, u, gam)
            assert rep.is_strict_local_min == bool((deltas > 0).all())
            assert rep.is_absorbing == bool((deltas >= 0).all())


class TestBruteForceMin:
    def test_empty_graph(self):
        g = graph_from_edges(5, [])
        best, argmins = brute_force_min(g, GammaParam(2))
        assert best == 0
        assert set(argmins) == {frozenset()} | {frozenset([v]) for v in range(5)}

    def test_complete_graph(self):
        g = Graph_complete(5)
        best, argmins = brute_force_min(g, GammaParam(2))
        # H(U) = -C(|U|,2) on cliques, minimized by the full set
        assert best == -math.comb(5, 2)
        assert argmins == [frozenset(range(5))]

    def test_minimizers_are_absorbing(self):
        gam = GammaParam(2)
        for seed in range(5):
            inst = gen_planted(12, 8, seed)
            best, argmins = brute_force_min(inst.graph, gam)
            for s in argmins:
                rep = local_min_check(inst.graph, s, gam)
                assert rep.is_absorbing
            if len(argmins) == 1:
                assert local_min_check(inst.graph, argmins[0], gam).is_strict_local_min

    def test_agrees_with_direct_enumeration(self):
        from conftest import py_scaled_energy
        gam = GammaParam(5, 2)
        g = gen_er(10, 42)
        dense = g.to_dense()
        best, argmins = brute_force_min(g, gam)
        values = {}
        for r in range(11):
            for combo in itertools.combinations(range(10), r):
                values[frozenset(combo)] = py_scaled_energy(dense, combo, gam)
        target = min(values.values())
        assert best == target
        assert set(argmins) == {s for s, v in values.items() if v == target}

    def test_too_large_rejected(self):
        with pytest.raises(ValueError):
            brute_force_min(gen_er(25, 0), GammaParam(2))


def Graph_complete(n):
    return graph_from_edges(n, list(itertools.combinations(range(n), 2)))


class TestEnumerateLocalMinima:
    def test_size_one_is_empty(self):
        g = gen_er(16, 1)
        found, est = enumerate_local_minima(g, 1, [], GammaParam(3), 10**6)
        assert found == [] and est.observed_count == 0 and not est.sampled

    def test_oversized_subsets_find_nothing(self):
        # at gamma=6 a strict minimum of size 5 must be nearly complete;
        # a 5-clique among 8 coin vertices is unlikely for this seed
        g = gen_er(8, 3)
        found, _ = enumerate_local_minima(g, 5, [], GammaParam(6), 10**6)
        for s in found:
            sub = g.to_dense()[np.ix_(sorted(s), sorted(s))]
            assert sub.sum() >= 2 * (math.comb(5, 2) - 1)

    def test_exhaustive_matches_direct_loop(self):
        gam = GammaParam(5)
        inst = gen_planted(18, 5, 7)
        forbidden = set(range(5))
        found, est = enumerate_local_minima(inst.graph, 3, forbidden, gam, 10**6)
        direct = []
        pool = [v for v in range(18) if v not in forbidden]
        for combo in itertools.combinations(pool, 3):
            if local_min_check(inst.graph, combo, gam).is_strict_local_min:
                direct.append(frozenset(combo))
        assert set(found) == set(direct)
        assert est.observed_count == len(direct)
        assert est.stderr == 0.0 and not est.sampled
        assert all(not (s & forbidden) for s in found)

    def test_sampling_estimator_tracks_exhaustive(self):
        gam = GammaParam(6)
        g = gen_er(20, 11)
        _, exact = enumerate_local_minima(g, 3, [], gam, 10**6)
        found, est = enumerate_local_minima(g, 3, [], gam, 400, seed=5)
        assert est.sampled and est.samples == 400
        assert est.total_subsets == math.comb(20, 3)
        # Horvitz-Thompson estimate within 4 standard errors (plus slack for
        # the tiny-count regime where stderr can be 0 on a miss)
        slack = 4 * max(est.stderr, est.total_subsets / 400)
        assert abs(est.count_estimate - exact.observed_count) <= slack
        assert all(local_min_check(g, s, gam).is_strict_local_min for s in found)

    def test_predicted_exponent_regime(self):
        g = gen_er(64, 0)
        h = binary_entropy(10 / 11)  # ~0.439 < 1/2 at gamma = 10
        # c = m / log2(n) must lie in (1/(1-h), 2): at n=64 that is m in (10.7, 12)
        _, est = enumerate_local_minima(g, 11, [], GammaParam(10), 10, seed=0)
        expected = 1 - 0.5 * (11 / 6) * (1 - h)
        assert est.predicted_exponent == pytest.approx(expected, rel=1e-12)
        # m = 8 sits below the window, so no prediction is attached
        _, est2 = enumerate_local_minima(g, 8, [], GammaParam(10), 10, seed=0)
        assert est2.predicted_exponent is None
        # and at gamma = 2 the entropy h(2/3) exceeds 1/2 for every m
        _, est3 = enumerate_local_minima(g, 8, [], GammaParam(2), 10, seed=0)
        assert est3.predicted_exponent is None

    def test_budget_and_size_validation(self):
        g = gen_er(10, 0)
        with pytest.raises(ValueError):
            enumerate_local_minima(g, 0, [], GammaParam(2), 100)
        with pytest.raises(ValueError):
            enumerate_local_minima(g, 3, [], GammaParam(2), 0)
        with pytest.raises(ValueError):
            enumerate_local_minima(g, 11, [], GammaParam(2), 100)
