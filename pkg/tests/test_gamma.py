import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from gwrnet.gamma import (GammaGWR, GammaParams, GlobalContext, default_alpha, gamma_distance,
                          update_global_context)
from gwrnet.gwr import GWR, GwrParams

from conftest import graph_ok

CYCLE = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def train_cycle(seq, K=2, epochs=300, seed=0, repeats=5):
    """Learn a repeating sequence, then freeze insertion and keep adapting."""
    net = GammaGWR(seq.shape[1], GammaParams(K=K), seed=seed)
    stream = np.tile(seq, (repeats, 1))
    for _ in range(epochs):
        net.train_sequence(stream)
    return net


class TestParams:
    def test_default_alpha_decays_and_sums_to_one(self):
        a = default_alpha(3)
        assert a == pytest.approx((0.4, 0.3, 0.2, 0.1))
        assert default_alpha(0) == (1.0,)

    @pytest.mark.parametrize("kw", [{"K": -1}, {"K": 1, "alpha": (1.0,)}, {"K": 1, "alpha": (1.0, 0.0)},
                                    {"beta": 1.0}, {"beta": 0.0}])
    def test_rejected(self, kw):
        with pytest.raises(ValueError):
            GammaParams(**kw)

    def test_round_trip(self):
        p = GammaParams(K=2, beta=0.4)
        assert GammaParams.from_dict(p.to_dict()) == p


class TestGammaDistance:
    def test_k0_is_scaled_euclidean(self):
        d = gamma_distance([0, 0], np.zeros((0, 2)), [3, 4], np.zeros((0, 2)), [2.0])
        assert d == 10.0

    def test_all_terms_vanish(self):
        w, c = np.array([1.0, 2.0]), np.array([[0.5, 0.5]])
        assert gamma_distance(w, c, w, c, (0.5, 0.5)) == 0.0

    def test_hand_sum(self):
        d = gamma_distance([0, 0], [[0, 0]], [3, 0], [[0, 4]], (1, 1))
        assert d == 7.0

    def test_matches_network_distances(self, rng):
        net = GammaGWR(3, GammaParams(K=2), seed=1)
        net.train_sequence(rng.normal(size=(40, 3)))
        C = rng.normal(size=(2, 3))
        x = rng.normal(size=3)
        d = net._distances_with(x, C)
        for r in range(net.node_count):
            assert d[r] == pytest.approx(gamma_distance(net.weights[r], net.contexts[r], x, C, net.params.alpha))


class TestGlobalContext:
    def test_first_step_after_reset_is_zero(self):
        net = GammaGWR(2, GammaParams(K=2))
        net.train_step((0.3, 0.4))
        ctx = GlobalContext.zeros(2, 2)
        update_global_context(ctx, 0.7)
        np.testing.assert_array_equal(ctx.C, 0.0)

    def test_beta_one_copies_previous_weight(self):
        ctx = GlobalContext(np.zeros((3, 2)), np.array([2.0, -1.0]), np.ones((3, 2)))
        update_global_context(ctx, 1.0)
        np.testing.assert_array_equal(ctx.C, [[2.0, -1.0]] * 3)

    def test_k1_descriptor_zero_is_weight(self):
        ctx = GlobalContext(np.zeros((1, 2)), np.array([2.0, 0.0]), np.array([[9.0, 9.0]]))
        update_global_context(ctx, 0.5)
        np.testing.assert_array_equal(ctx.C, [[2.0, 0.0]])

    def test_higher_orders_use_lagged_descriptors(self):
        ctx = GlobalContext(np.zeros((2, 1)), np.array([1.0]), np.array([[3.0], [5.0]]))
        update_global_context(ctx, 0.5)
        np.testing.assert_allclose(ctx.C, [[1.0], [2.0]])


class TestK0Equivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_identical_to_gwr(self, seed):
        rng = np.random.default_rng(100 + seed)
        X = rng.normal(size=(300, 3))
        a = GWR(3, GwrParams(), seed=seed)
        b = GammaGWR(3, GammaParams(K=0, alpha=(1.0,)), seed=seed)
        for x in X:
            assert a.train_step(x) == b.train_step(x)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.habituation, b.habituation)
        assert a.edges == b.edges


class TestTraining:
    def test_learned_cycle_replays_with_full_activity(self):
        net = train_cycle(CYCLE, K=1, epochs=200)
        net.params = GammaParams(K=1, activation_threshold=0.0)
        for _ in range(400):
            net.train_sequence(np.tile(CYCLE, (5, 1)))
        _, acts, _ = net.trace(np.tile(CYCLE, (5, 1)))
        assert np.mean(acts) > 0.99
        assert min(acts[4:]) > 0.999

    def test_constant_stream_contexts_converge(self):
        c = np.array([0.2, 0.6])
        net = GammaGWR(2, GammaParams(K=1, activation_threshold=0.0), seed=0, init_samples=[c, c + 1])
        net.train_sequence(np.tile(c, (6000, 1)))
        b = net.row(net.bmu(c))
        assert np.linalg.norm(net.contexts[b, 0] - c) < 1e-6
        assert np.linalg.norm(net.weights[b] - c) < 1e-6
        assert net.train_step(c).activity > 1 - 1e-6

    def test_forward_beats_reverse(self):
        net = train_cycle(CYCLE, K=2, epochs=100)
        fwd = np.mean(net.trace(np.tile(CYCLE, (3, 1)))[1])
        rev = np.mean(net.trace(np.tile(CYCLE[::-1], (3, 1)))[1])
        assert fwd > rev

    @given(hnp.arrays(np.float64, (50, 2), elements=st.floats(-1, 2)), st.integers(0, 3))
    def test_contexts_stay_inside_input_box(self, X, seed):
        lo, hi = -1.0, 2.0
        net = GammaGWR(2, GammaParams(K=2, max_edge_age=6), seed=seed, init_samples=[(0, 0), (1, 1)])
        net.train_sequence(X)
        box = np.concatenate([net.contexts.ravel(), net.context.C.ravel()])
        # contexts start at the zero reset vector, which lies in the box
        assert box.min() >= lo - 1e-12 and box.max() <= hi + 1e-12
        graph_ok(net)

    @given(hnp.arrays(np.float64, (30, 2), elements=st.floats(-5, 5)))
    def test_activity_in_unit_interval(self, X):
        net = GammaGWR(2, GammaParams(K=1), seed=0)
        for out in net.train_sequence(X):
            assert 0.0 < out.activity <= 1.0
            assert (out.activity == 1.0) == (out.activity == np.exp(-0.0))


class TestLabels:
    def test_two_class_separable(self):
        pos, neg = np.ones((10, 2)), -np.ones((10, 2))
        net = GammaGWR(2, GammaParams(K=1), seed=0)
        for e in range(20):
            net.train_epoch([pos, neg], shuffle_seed=e, labels=["pos", "neg"])
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert net.predict_label(pos + rng.normal(0, 0.05, pos.shape))[0] == "pos"
            assert net.predict_label(neg + rng.normal(0, 0.05, neg.shape))[0] == "neg"

    def test_predict_label_is_read_only(self, rng):
        net = GammaGWR(2, GammaParams(K=2), seed=0)
        net.train_epoch([rng.normal(size=(20, 2))], labels=[1])
        before = net.to_dict()
        net.predict_label(rng.normal(size=(10, 2)))
        net.trace(rng.normal(size=(10, 2)))
        assert net.to_dict() == before

    def test_unlabeled_network_refuses(self):
        with pytest.raises(ValueError):
            GammaGWR(2).predict_label(np.zeros((3, 2)))


class TestSerialization:
    def test_round_trip_continues_identically(self, rng):
        net = GammaGWR(2, GammaParams(K=2), seed=3)
        X = rng.normal(size=(60, 2))
        for x in X[:40]:
            net.train_step(x, label=0)
        clone = GammaGWR.from_dict(net.to_dict())
        for x in X[40:]:
            assert net.train_step(x) == clone.train_step(x)
        np.testing.assert_array_equal(net.contexts, clone.contexts)
        np.testing.assert_array_equal(net.context.C, clone.context.C)
