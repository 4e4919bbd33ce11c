import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from gwrnet.gwr import GWR, HABITUATION_FIXED_POINT, GwrParams, activity, habituate
from gwrnet.io import dumps_model

from conftest import graph_ok


def brute_force_bmus(weights, ids, x):
    """Independent oracle: exhaustive scan with math.dist and explicit id tie-break."""
    scored = sorted((math.dist(w, x), i) for w, i in zip(weights.tolist(), ids))
    return scored[0][1], scored[1][1], scored[0][0], scored[1][0]


class TestParams:
    def test_defaults(self):
        p = GwrParams()
        assert (p.activation_threshold, p.habituation_threshold) == (0.9, 0.3)
        assert (p.tau_b, p.tau_n, p.eps_b, p.eps_n) == (0.3, 0.1, 0.1, 0.01)
        assert p.max_edge_age == 50

    @pytest.mark.parametrize("kw", [
        {"activation_threshold": 1.0}, {"activation_threshold": -0.1},
        {"habituation_threshold": 0.0}, {"tau_b": 0.05}, {"eps_n": 0.2},
        {"eps_b": 1.5}, {"max_edge_age": 0}, {"max_nodes": 1},
    ])
    def test_out_of_range_rejected(self, kw):
        with pytest.raises(ValueError):
            GwrParams(**kw)

    def test_dict_round_trip(self):
        p = GwrParams(activation_threshold=0.5, max_nodes=10)
        assert GwrParams.from_dict(p.to_dict()) == p

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="bogus"):
            GwrParams.from_dict({"bogus": 1})


class TestInit:
    def test_two_nodes_fully_habituable(self):
        net = GWR(3, seed=42)
        assert net.node_count == 2
        assert net.weights.shape == (2, 3)
        np.testing.assert_array_equal(net.habituation, [1.0, 1.0])

    def test_same_seed_same_network(self):
        assert dumps_model(GWR(2, seed=7)) == dumps_model(GWR(2, seed=7))

    def test_explicit_samples(self):
        net = GWR(2, seed=0, init_samples=[(0, 0), (1, 1)])
        np.testing.assert_array_equal(net.weights, [[0, 0], [1, 1]])

    def test_bad_dim(self):
        with pytest.raises(ValueError):
            GWR(0)


class TestFindBmus:
    def net(self):
        return GWR(2, init_samples=[(0, 0), (3, 4)])

    def test_exact_match_first(self):
        b, s, db, ds = self.net().find_bmus((0, 0))
        assert (b, db) == (0, 0.0)

    def test_exact_match_second(self):
        assert self.net().find_bmus((3, 4)) == (1, 0, 0.0, 5.0)

    def test_tie_goes_to_lower_id(self):
        net = GWR(2, init_samples=[(1, 1), (1, 1)])
        for x in [(0, 0), (5, -2), (1, 1)]:
            assert net.find_bmus(x)[:2] == (0, 1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            self.net().find_bmus((1, 2, 3))

    def test_oracle_agreement(self):
        rng = np.random.default_rng(3)
        net = GWR(4, GwrParams(activation_threshold=0.8), seed=3)
        for _ in range(3):
            net.train_epoch(rng.normal(size=(80, 4)), shuffle_seed=1)
        assert net.node_count > 5
        for x in rng.normal(size=(1000, 4)):
            b, s, db, ds = net.find_bmus(x)
            ob, os_, odb, ods = brute_force_bmus(net.weights, net.ids, x)
            assert (b, s) == (ob, os_)
            assert db == pytest.approx(odb, abs=1e-12)
            assert ds == pytest.approx(ods, abs=1e-12)

    @given(hnp.arrays(np.float64, (6, 3), elements=st.floats(-10, 10)),
           hnp.arrays(np.float64, 3, elements=st.floats(-10, 10)))
    def test_best_is_no_farther_than_second(self, W, x):
        net = GWR(3, init_samples=W[:2])
        b, s, db, ds = net.find_bmus(x)
        assert b != s and db <= ds


class TestActivity:
    def test_perfect_match(self):
        assert activity(0.0) == 1.0

    def test_ln2_halves(self):
        assert activity(math.log(2)) == pytest.approx(0.5, abs=1e-15)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_strictly_decreasing(self, d1, d2):
        if d1 < d2 and math.exp(-d1) != math.exp(-d2):
            assert activity(d1) > activity(d2)

    def test_negative_distance(self):
        with pytest.raises(ValueError):
            activity(-1.0)


class TestHabituate:
    @pytest.mark.parametrize("h,tau,expected", [
        (1.0, 0.3, 0.7),
        (0.5, 0.1, 0.5 - 0.0475),
        (HABITUATION_FIXED_POINT, 0.3, HABITUATION_FIXED_POINT),
    ])
    def test_hand_values(self, h, tau, expected):
        assert habituate(h, tau) == pytest.approx(expected, abs=1e-12)

    def test_fixed_point_value(self):
        assert HABITUATION_FIXED_POINT == pytest.approx(0.047619047619, abs=1e-12)

    @given(st.floats(0, 1), st.floats(1e-3, 1))
    def test_stays_in_unit_interval(self, h, tau):
        assert 0.0 <= habituate(h, tau) <= 1.0

    @pytest.mark.parametrize("tau", [0.3, 0.1, 0.01])
    def test_strictly_decreasing_to_fixed_point(self, tau):
        h, steps = 1.0, 0
        while abs(h - HABITUATION_FIXED_POINT) > 1e-9:
            nxt = habituate(h, tau)
            assert nxt < h
            h, steps = nxt, steps + 1
            assert steps < 100000
        for _ in range(200):
            h = habituate(h, tau)
        assert abs(h - HABITUATION_FIXED_POINT) <= 1e-9

    @pytest.mark.parametrize("h,tau", [(1.2, 0.1), (-0.1, 0.1), (0.5, 0.0)])
    def test_invalid(self, h, tau):
        with pytest.raises(ValueError):
            habituate(h, tau)


class TestTrainStep:
    def test_weight_update_without_insertion(self):
        net = GWR(2, init_samples=[(0, 0), (5, 5)])
        out = net.train_step((1, 0))
        assert not out.inserted
        np.testing.assert_allclose(net.weight(0), [0.1, 0.0], atol=1e-15)

    def test_habituation_gate_blocks_insertion(self):
        net = GWR(2, init_samples=[(0, 0), (5, 5)])
        out = net.train_step((3, 0))
        assert out.activity < 0.9 and out.bmu_habituation == 1.0
        assert not out.inserted and net.node_count == 2

    def test_exact_input_leaves_weight(self):
        net = GWR(2, init_samples=[(0.5, 0.5), (5, 5)])
        out = net.train_step((0.5, 0.5))
        assert out.activity == 1.0 and not out.inserted
        np.testing.assert_array_equal(net.weight(0), [0.5, 0.5])

    def test_insertion_places_midpoint_and_rewires(self):
        net = GWR(2, init_samples=[(0, 0), (5, 5)])
        for _ in range(10):
            net.train_step((0, 0))
        h_b = net.habituation[0]
        assert h_b < 0.3
        out = net.train_step((2, 0))
        assert out.inserted and out.winner_id == 2
        np.testing.assert_allclose(net.weight(2), [1.0, 0.0])
        assert (0, 2) in net.edges and (1, 2) in net.edges and (0, 1) not in net.edges
        assert net.habituation[0] == h_b

    def test_max_nodes_caps_growth(self):
        net = GWR(2, GwrParams(max_nodes=3), seed=1)
        rng = np.random.default_rng(0)
        for x in rng.normal(size=(500, 2)) * 5:
            net.train_step(x)
        assert net.node_count <= 3

    def test_labels_credit_winner(self):
        net = GWR(1, init_samples=[(0,), (10,)])
        net.train_step((0,), label="a")
        assert net.node_label(0) == ("a", 1.0)

    @given(hnp.arrays(np.float64, (60, 2), elements=st.floats(-3, 3)), st.integers(0, 5))
    def test_invariants_hold_after_every_step(self, X, seed):
        net = GWR(2, GwrParams(max_edge_age=5), seed=seed)
        for x in X:
            out = net.train_step(x)
            if out.inserted:
                assert out.activity < net.params.activation_threshold
                assert out.bmu_habituation < net.params.habituation_threshold
            assert np.all((net.habituation >= 0) & (net.habituation <= 1))
            graph_ok(net)


class TestNodeLabel:
    def test_majority_and_confidence(self):
        net = GWR(1, init_samples=[(0,), (1,)])
        net.label_counts[0].update({"A": 9, "B": 1})
        assert net.node_label(0) == ("A", 0.9)

    def test_tie_lowest_label(self):
        net = GWR(1, init_samples=[(0,), (1,)])
        net.label_counts[0].update({2: 5, 1: 5})
        assert net.node_label(0) == (1, 0.5)


class TestTrainEpoch:
    def test_single_point_attractor(self):
        net = GWR(2, GwrParams(activation_threshold=0.0), seed=0)
        for e in range(40):
            stats = net.train_epoch([[0.3, -0.2]] * 100, shuffle_seed=e)
        assert stats.quantization_error < 1e-3

    def test_repeatable(self):
        X = np.random.default_rng(1).normal(size=(50, 3))
        a = [GWR(3, seed=4).train_epoch(X, shuffle_seed=9) for _ in range(2)]
        assert a[0] == a[1]

    def test_displacement_non_increasing_without_insertion(self):
        X = np.random.default_rng(2).uniform(size=(40, 2))
        net = GWR(2, GwrParams(activation_threshold=0.0), seed=2)
        moves = []
        for e in range(25):
            before = net.weights.copy()
            net.train_epoch(X, shuffle_seed=e)
            moves.append(float(np.abs(net.weights - before).sum()))
        for prev, cur in zip(moves[5:], moves[6:]):
            assert cur <= prev + 1e-6

    def test_labels_length_checked(self):
        with pytest.raises(ValueError):
            GWR(1).train_epoch([[0.0], [1.0]], labels=["a"])

    def test_label_totals_conserved_without_deletions(self):
        rng = np.random.default_rng(5)
        net = GWR(2, GwrParams(max_edge_age=10000), seed=5)
        X = rng.normal(size=(200, 2))
        y = rng.integers(0, 3, size=200).tolist()
        net.train_epoch(X, labels=y)
        assert net.label_totals() == {k: y.count(k) for k in set(y)}

    def test_predict_label_falls_back_to_labeled_node(self):
        net = GWR(1, init_samples=[(0,), (10,)])
        net.add_label(1, "far")
        assert net.predict_label((0.1,)) == ("far", 1.0)


class TestSerialization:
    def test_round_trip_behaviour(self):
        rng = np.random.default_rng(8)
        net = GWR(3, seed=8)
        net.train_epoch(rng.normal(size=(100, 3)), labels=[i % 2 for i in range(100)])
        clone = GWR.from_dict(net.to_dict())
        X = rng.normal(size=(50, 3))
        for x in X:
            assert net.train_step(x) == clone.train_step(x)
        np.testing.assert_array_equal(net.weights, clone.weights)
        assert dumps_model(net) == dumps_model(clone)
