from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plantedclique import (GammaParam, apply_flip, delta_add, delta_remove,
                           gen_er, gen_planted, init_state)

from conftest import graph_from_edges, py_scaled_energy


class TestGammaParam:
    def test_parsing(self):
        assert GammaParam.from_value("7/2") == GammaParam(7, 2)
        assert GammaParam.from_value(3.5) == GammaParam(7, 2)
        assert GammaParam.from_value("4") == GammaParam(4, 1)
        assert GammaParam.from_value(Fraction(9, 4)) == GammaParam(9, 4)

    def test_normalization(self):
        g = GammaParam(6, 4)
        assert (g.p, g.q_den) == (3, 2)

    def test_rejects_gamma_at_most_one(self):
        with pytest.raises(ValueError):
            GammaParam(1, 1)
        with pytest.raises(ValueError):
            GammaParam(2, 3)
        with pytest.raises(ValueError):
            GammaParam(-4, -1)

    def test_kappa(self):
        assert GammaParam(3, 1).kappa == Fraction(3, 4)
        assert GammaParam(19, 1).kappa == Fraction(19, 20)
        assert GammaParam(7, 2).kappa == Fraction(7, 9)

    def test_str(self):
        assert str(GammaParam(4, 1)) == "4"
        assert str(GammaParam(7, 2)) == "7/2"


TRIANGLE = graph_from_edges(6, [(0, 1), (0, 2), (1, 2)])


class TestInitState:
    def test_empty_subset(self):
        st_ = init_state(TRIANGLE, [], GammaParam(3))
        assert st_.size == 0 and st_.internal_edges == 0
        assert st_.scaled_energy == 0

    def test_clique_energy(self):
        st_ = init_state(TRIANGLE, [0, 1, 2], GammaParam(3))
        assert st_.scaled_energy == -3  # H = -|E| when U is a clique

    def test_one_edge_triple(self):
        g = graph_from_edges(5, [(0, 1)])
        st_ = init_state(g, [0, 1, 2], GammaParam(3))
        assert st_.scaled_energy == -1 + 3 * (3 - 1)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            init_state(TRIANGLE, [0, 6], GammaParam(2))
        with pytest.raises(ValueError):
            init_state(TRIANGLE, [-1], GammaParam(2))

    def test_full_set_energy_matches_edge_count(self):
        g = gen_er(40, 3)
        gam = GammaParam(5, 2)
        st_ = init_state(g, range(40), gam)
        assert st_.scaled_energy == 5 * (40 * 39 // 2) - 7 * g.num_edges()

    def test_planted_clique_energy(self):
        inst = gen_planted(30, 9, 1)
        gam = GammaParam(7, 2)
        st_ = init_state(inst.graph, range(9), gam)
        # the clique is complete, so H(PC) = -C(k,2), scaled by q_den
        assert st_.scaled_energy == -gam.q_den * (9 * 8 // 2)
        assert st_.energy() == Fraction(-36)


class TestDeltas:
    def test_add_from_empty_is_zero(self):
        st_ = init_state(TRIANGLE, [], GammaParam(2))
        assert delta_add(st_, 0) == 0

    def test_add_worked_example(self):
        # gamma=3, |U|=4, deg=4 -> -4*4 + 3*4 = -4
        g = graph_from_edges(6, [(5, 0), (5, 1), (5, 2), (5, 3)])
        st_ = init_state(g, [0, 1, 2, 3], GammaParam(3))
        assert delta_add(st_, 5) == -4

    def test_remove_singleton_is_zero(self):
        st_ = init_state(TRIANGLE, [4], GammaParam(2))
        assert delta_remove(st_, 4) == 0

    def test_remove_worked_example(self):
        # gamma=2, |U|=3, deg=2 -> 3*2 - 2*2 = 2
        st_ = init_state(TRIANGLE, [0, 1, 2], GammaParam(2))
        assert delta_remove(st_, 0) == 2

    def test_delta_matches_recompute(self, rng):
        g = gen_er(24, 9)
        dense = g.to_dense()
        gam = GammaParam(7, 3)
        members = set(np.flatnonzero(rng.random(24) < 0.5).tolist())
        st_ = init_state(g, members, gam)
        for x in range(24):
            if x in members:
                target = py_scaled_energy(dense, members - {x}, gam)
                assert delta_remove(st_, x) == target - st_.scaled_energy
            else:
                target = py_scaled_energy(dense, members | {x}, gam)
                assert delta_add(st_, x) == target - st_.scaled_energy

    def test_vectorized_deltas_match_scalar(self, rng):
        g = gen_er(30, 2)
        st_ = init_state(g, np.flatnonzero(rng.random(30) < 0.4), GammaParam(9, 4))
        deltas = st_.all_flip_deltas()
        for x in range(30):
            expected = delta_remove(st_, x) if x in st_ else delta_add(st_, x)
            assert deltas[x] == expected

    def test_wrong_side_rejected(self):
        st_ = init_state(TRIANGLE, [0, 1], GammaParam(2))
        with pytest.raises(ValueError):
            delta_add(st_, 0)
        with pytest.raises(ValueError):
            delta_remove(st_, 5)


class TestApplyFlip:
    def test_involution(self):
        g = gen_er(20, 4)
        st_ = init_state(g, [1, 3, 5], GammaParam(3))
        before = (st_.member.copy(), st_.size, st_.internal_edges,
                  st_.deg_into.copy(), st_.scaled_energy)
        apply_flip(apply_flip(st_, 7), 7)
        assert np.array_equal(st_.member, before[0])
        assert (st_.size, st_.internal_edges) == (before[1], before[2])
        assert np.array_equal(st_.deg_into, before[3])
        assert st_.scaled_energy == before[4]

    def test_add_then_remove_restores_energy(self):
        st_ = init_state(TRIANGLE, [0, 1], GammaParam(5, 2))
        e0 = st_.scaled_energy
        d = delta_add(st_, 2)
        apply_flip(st_, 2)
        assert st_.scaled_energy == e0 + d
        assert delta_remove(st_, 2) == -d
        apply_flip(st_, 2)
        assert st_.scaled_energy == e0

    def test_flip_all_equals_full_init(self):
        g = gen_er(33, 6)
        gam = GammaParam(4)
        st_ = init_state(g, [], gam)
        for x in range(33):
            apply_flip(st_, x)
        full = init_state(g, range(33), gam)
        assert st_.scaled_energy == full.scaled_energy
        assert st_.internal_edges == full.internal_edges
        assert np.array_equal(st_.deg_into, full.deg_into)

    def test_degree_sum_invariant(self, rng):
        g = gen_er(26, 8)
        st_ = init_state(g, [0, 4, 9], GammaParam(2))
        for x in rng.integers(0, 26, size=60):
            apply_flip(st_, int(x))
            assert int(st_.deg_into[st_.member].sum()) == 2 * st_.internal_edges


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32), st.integers(2, 40),
       st.lists(st.integers(0, 39), min_size=0, max_size=60),
       st.tuples(st.integers(1, 9), st.integers(1, 4)))
def test_incremental_energy_always_matches_recompute(seed, n, flips, gam_raw):
    """Flip-sequence invariant: cached state equals a from-scratch rebuild
    (exact integer equality), for any graph, start and flip order."""
    p, qd = gam_raw
    if p <= qd:
        p = qd + p
    gam = GammaParam(p, qd)
    g = gen_er(n, seed)
    state = init_state(g, [], gam)
    for v in flips:
        apply_flip(state, v % n)
        fresh = init_state(g, np.flatnonzero(state.member), gam)
        assert state.scaled_energy == fresh.scaled_energy
        assert state.internal_edges == fresh.internal_edges
        assert np.array_equal(state.deg_into, fresh.deg_into)
