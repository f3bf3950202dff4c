from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventqkd.rng import ALICE, BOB, ActorStreams, RngStream, coin, new_stream, uniform


class TestDeterminism:
    def test_same_seed_same_stream(self):
        a = new_stream(1, 0).uniforms(100)
        b = new_stream(1, 0).uniforms(100)
        np.testing.assert_array_equal(a, b)

    def test_stream_ids_differ(self):
        assert new_stream(1, 0).uniform() != new_stream(1, 1).uniform()

    def test_seeds_differ(self):
        assert not np.array_equal(new_stream(2, 0).uniforms(100), new_stream(1, 0).uniforms(100))

    def test_int_and_tuple_id_agree(self):
        assert RngStream(5, 3).uniform() == RngStream(5, (3,)).uniform()

    def test_child_is_extended_id(self):
        assert RngStream(5, (1,)).child(2).uniform() == RngStream(5, (1, 2)).uniform()

    def test_negative_id_rejected(self):
        with pytest.raises(ValueError):
            RngStream(1, -1)

    def test_actor_purposes_independent(self):
        s = ActorStreams(1, ALICE)
        assert s.emit.uniform() != s.setting.uniform()
        assert ActorStreams(1, ALICE).emit.uniform() != ActorStreams(1, BOB).emit.uniform()


class TestBatchInvariance:
    @given(st.integers(0, 2**63), st.lists(st.integers(1, 7), min_size=1, max_size=6))
    @settings(max_examples=40, deadline=None)
    def test_uniforms_any_batching(self, seed, sizes):
        s1, s2 = RngStream(seed, 0), RngStream(seed, 0)
        batched = np.concatenate([s1.uniforms(n) for n in sizes])
        scalar = np.array([s2.uniform() for _ in range(sum(sizes))])
        np.testing.assert_array_equal(batched, scalar)

    def test_coins_batching(self):
        s1, s2 = RngStream(9, 4), RngStream(9, 4)
        np.testing.assert_array_equal(s1.coins(50), [s2.coin() for _ in range(50)])

    def test_module_helpers(self):
        s1, s2 = RngStream(3, 0), RngStream(3, 0)
        assert uniform(s1) == s2.uniform()
        assert coin(s1) == s2.coin()


class TestDistribution:
    N = 10**6

    def test_range(self):
        u = RngStream(1, 0).uniforms(self.N)
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_mean(self):
        assert abs(RngStream(1, 0).uniforms(self.N).mean() - 0.5) < 0.002

    def test_ks(self):
        u = np.sort(RngStream(1, 0).uniforms(self.N))
        ecdf = np.arange(1, self.N + 1) / self.N
        assert np.max(np.abs(ecdf - u)) < 0.005

    def test_coin_fraction(self):
        assert abs(RngStream(1, 7).coins(self.N).mean() - 0.5) < 0.002

    def test_four_way_choice(self):
        c = RngStream(1, 8).coins(2 * self.N).reshape(-1, 2).astype(int)
        freq = np.bincount(2 * c[:, 0] + c[:, 1], minlength=4) / self.N
        np.testing.assert_allclose(freq, 0.25, atol=0.003)

    def test_coin_values(self):
        assert set(np.unique(RngStream(2, 0).coins(1000))) == {0, 1}
