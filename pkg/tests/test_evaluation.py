import numpy as np
import pytest
from hypothesis import given, strategies as st

from gwrnet.evaluation.experiments import (compare_gng_gwr, continual_protocol, cross_validate, load_iris,
                                           make_folds, plateau_epoch)
from gwrnet.evaluation.metrics import classification_metrics, quantization_error, report_from_confusion
from gwrnet.evaluation.synthetic import (SyntheticSpec, class_signatures, exercise_routine, gen_exercise_corpus,
                                         gen_synthetic, inject_fault)
from gwrnet.gwr import GWR, GwrParams
from gwrnet.hierarchy import preset


class TestSynthetic:
    def test_deterministic(self):
        a = gen_synthetic(SyntheticSpec(seed=3))
        b = gen_synthetic(SyntheticSpec(seed=3))
        assert [s.seq_id for s in a] == [s.seq_id for s in b]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.frames, y.frames)

    def test_shape_and_labels(self):
        data = gen_synthetic(SyntheticSpec(classes=3, subjects=2, sequences_per_subject=2, frames=40))
        assert len(data) == 12
        assert {s.label for s in data} == {0, 1, 2}
        assert all(s.frames.shape == (40, 13, 3) for s in data)

    def test_distinct_signatures(self):
        sigs = class_signatures(SyntheticSpec(classes=4))
        assert len({s.frequency for s in sigs}) == 4

    def test_noiseless_two_frequencies_separable(self):
        spec = SyntheticSpec(classes=2, frequencies=[1.0, 2.0], noise_sigma=0.0, subject_variation=0.0, frames=90)
        data = gen_synthetic(spec)
        # oracle: dominant frequency of hip-centered motion energy
        def dominant(s):
            x = s.frames - s.frames[:, :1]
            energy = np.abs(np.fft.rfft(x - x.mean(axis=0), axis=0)).sum(axis=(1, 2))
            return np.fft.rfftfreq(len(x), 1 / spec.fps)[np.argmax(energy[1:]) + 1]
        for s in data:
            assert dominant(s) == pytest.approx([1.0, 2.0][s.label], abs=0.34)

    @pytest.mark.parametrize("kw", [{"classes": 0}, {"frames": 1}, {"joints": 12}, {"noise_sigma": -1},
                                    {"classes": 2, "frequencies": [1.0, 1.0]}])
    def test_rejected(self, kw):
        with pytest.raises(ValueError):
            SyntheticSpec(**kw)

    def test_exercise_corpus(self):
        corpus = gen_exercise_corpus(3, 2, seed=0)
        assert [s.label for s in corpus] == ["correct"] * 3 + ["incorrect"] * 2
        j, start, length = corpus[-1].meta["fault"]
        assert length == 150 and 0 < start

    def test_inject_fault(self):
        f = exercise_routine(20, noise=0.0)
        g = inject_fault(f, 6, 5, 3, offset=1.0)
        diff = g - f
        assert np.count_nonzero(diff) == 3 and np.all(diff[5:8, 6, 2] == 1.0)


class TestMetrics:
    def test_perfect(self):
        r = classification_metrics([0, 1, 2], [0, 1, 2])
        assert r.accuracy == r.macro_precision == r.macro_recall == r.macro_f == 1.0

    def test_constant_guess_balanced(self):
        assert classification_metrics([0] * 4, [0, 0, 1, 1]).accuracy == 0.5

    def test_hand_confusion(self):
        # positive class: TP 3, FN 2, FP 1
        r = report_from_confusion([1, 0], [[3, 2], [1, 4]])
        assert r.precision[1] == 0.75 and r.recall[1] == 0.6
        assert r.f_score[1] == pytest.approx(2 * 0.75 * 0.6 / 1.35)

    @given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=60))
    def test_self_consistent(self, pairs):
        pred, truth = zip(*pairs)
        r = classification_metrics(pred, truth)
        again = report_from_confusion(r.labels, r.confusion)
        assert again.accuracy == r.accuracy and again.f_score == r.f_score
        for i, lab in enumerate(r.labels):
            assert r.confusion[i].sum() == list(truth).count(lab)
            assert 0.0 <= r.precision[lab] <= 1.0 and 0.0 <= r.recall[lab] <= 1.0

    def test_qe_zero_on_weights(self):
        net = GWR(2, seed=0)
        assert quantization_error(net, net.weights) == 0.0

    def test_qe_midpoint(self):
        p, q = np.array([0.0, 0.0]), np.array([2.0, 4.0])
        net = GWR(2, init_samples=[(p + q) / 2, (100, 100)])
        assert quantization_error(net, [p, q]) == pytest.approx(np.linalg.norm(p - q) / 2)


class TestFolds:
    @pytest.fixture
    def data(self):
        return gen_synthetic(SyntheticSpec(classes=2, subjects=3, sequences_per_subject=2, frames=12))

    def test_loso(self, data):
        folds = make_folds(data, "loso")
        assert len(folds) == 3
        assert sorted(i for f in folds for i in f) == list(range(len(data)))

    def test_leave_one_out(self, data):
        assert len(make_folds(data, "kfold", k=len(data))) == len(data)

    def test_order_independent(self, data):
        perm = np.random.default_rng(0).permutation(len(data))
        shuffled = [data[i] for i in perm]
        ids = lambda ds, folds: [sorted(ds[i].seq_id for i in f) for f in folds]
        assert ids(data, make_folds(data, "kfold", 4, seed=2)) == ids(shuffled, make_folds(shuffled, "kfold", 4, seed=2))

    @pytest.mark.parametrize("protocol,k", [("kfold", 1), ("kfold", 99), ("bogus", 2)])
    def test_rejected(self, data, protocol, k):
        with pytest.raises(ValueError):
            make_folds(data, protocol, k)


class TestProtocols:
    def test_cross_validate_small(self):
        data = gen_synthetic(SyntheticSpec(classes=2, subjects=2, sequences_per_subject=1, seed=2))
        spec = preset("recurrent", epochs=3)
        a = cross_validate(data, spec, "loso", seed=0)
        b = cross_validate(data, spec, "loso", seed=0)
        assert a.accuracy == b.accuracy and a.fold_accuracy == b.fold_accuracy
        assert len(a.folds) == 2 and a.metrics.confusion.sum() == len(data)

    def test_continual_lower_triangular(self):
        data = gen_synthetic(SyntheticSpec(classes=3, subjects=2, sequences_per_subject=1, seed=0))
        r = continual_protocol(data, [2, 0, 1], preset("recurrent", epochs=2))
        for m in (r.growing, r.fixed):
            assert np.isnan(m[np.triu_indices(3, 1)]).all()
            assert np.isfinite(m[np.tril_indices(3)]).all()
        first = r.node_counts["fixed"][0]
        assert r.node_counts["fixed"][-1] == first

    def test_continual_needs_two_classes(self):
        with pytest.raises(ValueError):
            continual_protocol([], [0], preset("recurrent"))


class TestIris:
    def test_bundled_table(self):
        X, y = load_iris()
        assert X.shape == (150, 4) and len(set(y)) == 3
        np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-12)
        np.testing.assert_allclose(X.std(axis=0), 1, atol=1e-12)

    def test_growth_curves(self):
        X, _ = load_iris()
        curves = compare_gng_gwr(X, epochs=8, seed=0)
        g = curves["gwr"]
        assert g.node_count[-1] > 2 and g.quantization_error[-1] < g.initial_qe
        assert curves["gng"].node_count == [2 + e for e in range(1, 9)]

    def test_default_threshold_grows_then_plateaus(self):
        X, _ = load_iris()
        g = compare_gng_gwr(X, epochs=30, seed=0, gwr_params=GwrParams(activation_threshold=0.9))["gwr"]
        assert g.node_count[0] < g.node_count[-1] and plateau_epoch(g.node_count) < 29
        assert g.quantization_error[-1] < g.initial_qe

    @pytest.mark.parametrize("counts,expected", [([2, 5, 9, 10, 10, 10], 2), ([3, 3, 3], 0), ([1, 2, 3, 50], 3)])
    def test_plateau_epoch(self, counts, expected):
        assert plateau_epoch(counts) == expected


def test_heavy_noise_drops_to_chance():
    accs = []
    for seed in range(3):
        data = gen_synthetic(SyntheticSpec(classes=3, subjects=3, sequences_per_subject=2,
                                           noise_sigma=0.5, seed=seed))
        spec = preset("recurrent", epochs=2, seed=seed)
        for layer in spec.pose + spec.motion + [spec.integration]:
            layer.params = {**layer.params, "max_nodes": 60}
        accs.append(cross_validate(data, spec, "loso", seed=seed).window_accuracy)
    assert abs(np.mean(accs) - 1 / 3) <= 0.1
