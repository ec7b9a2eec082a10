import numpy as np
import pytest
from hypothesis import given, strategies as stn

from defalloc.belief import (
    belief_error,
    init_belief,
    known_belief,
    mean_closed_form,
    update_belief,
)
from defalloc.harness import rng_stream


class TestInit:
    def test_uniform_prior(self):
        b = init_belief(4)
        assert np.array_equal(b.mean, np.full(4, 0.25))
        assert np.array_equal(b.variance, np.zeros(4))
        assert b.t == 1

    def test_single_node(self):
        assert init_belief(1).mean[0] == 1.0

    def test_ten_nodes(self):
        assert np.allclose(init_belief(10).mean, 0.1)

    def test_rejects_zero_nodes(self):
        with pytest.raises(ValueError):
            init_belief(0)


class TestUpdate:
    def test_one_step_arithmetic(self):
        b = update_belief(init_belief(4), np.array([1, 0, 0, 0]))
        assert b.mean[0] == pytest.approx(0.625, abs=1e-15)
        assert b.variance[0] == pytest.approx((1 - 0.625) ** 2 / 2, abs=1e-15)
        assert b.variance[0] == pytest.approx(0.0703125, abs=1e-15)
        assert b.t == 2

    def test_constant_stream_fixed_point(self):
        b = init_belief(1)
        for _ in range(10):
            b = update_belief(b, np.array([1]))
            assert b.mean[0] == 1.0
            assert b.variance[0] == 0.0

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            update_belief(init_belief(2), np.array([0.5, 0.0]))

    def test_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            update_belief(init_belief(2), np.array([1.0]))

    @given(stn.integers(1, 6), stn.lists(stn.booleans(), min_size=1, max_size=40))
    def test_mean_matches_closed_form(self, n, bits):
        b = init_belief(n)
        obs = np.array([[float(x)] * n for x in bits])
        for row in obs:
            b = update_belief(b, row)
        expected = mean_closed_form(n, obs)
        assert np.max(np.abs(b.mean - expected)) <= 1e-12

    @given(stn.integers(1, 4), stn.lists(stn.integers(0, 15), min_size=1, max_size=30))
    def test_bounds_under_any_stream(self, n, rows):
        b = init_belief(n)
        for r in rows:
            obs = np.array([(r >> k) & 1 for k in range(n)], dtype=float)
            b = update_belief(b, obs)
            assert np.all(b.mean >= 0.0) and np.all(b.mean <= 1.0)
            assert np.all(b.variance >= 0.0) and np.all(b.variance <= 0.25)


class TestKnownBelief:
    def test_peak_variance(self):
        b = known_belief(np.array([0.5]))
        assert b.variance[0] == 0.25

    def test_degenerate(self):
        assert known_belief(np.array([0.0])).variance[0] == 0.0

    def test_hand_value(self):
        assert known_belief(np.array([0.2])).variance[0] == pytest.approx(0.16, abs=1e-15)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            known_belief(np.array([1.2]))


class TestBeliefError:
    def test_known_belief_has_zero_error(self):
        p = np.array([0.3, 0.7])
        me, ve = belief_error(known_belief(p), p)
        assert np.array_equal(me, np.zeros(2))
        assert np.array_equal(ve, np.zeros(2))

    def test_uniform_prior_coincidence(self):
        me, _ = belief_error(init_belief(2), np.array([0.5, 0.5]))
        assert np.array_equal(me, np.zeros(2))

    def test_mean_error_shrinks_with_observations(self):
        p = np.array([0.2, 0.5, 0.8])
        errs = {}
        for T in (20, 500):
            finals = []
            for seed in range(100):
                rng = rng_stream(seed, "attacks")
                b = init_belief(3)
                draws = rng.random((T, 3)) < p
                for row in draws:
                    b = update_belief(b, row.astype(float))
                me, _ = belief_error(b, p)
                finals.append(np.max(np.abs(me)))
            errs[T] = np.median(finals)
        assert errs[500] < errs[20]
