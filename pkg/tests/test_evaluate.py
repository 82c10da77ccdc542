import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pairwise_auc
from optopro import LifParams, auc_score, roc_curve, simulate_dataset, train_test_evaluate
from optopro.errors import DegenerateLabelsError, DegenerateResponseError
from optopro.evaluate import RocCurve
from optopro.pointproc import Dataset, Sweep


def labelled(draw_scores=st.integers(0, 5)):
    return st.lists(st.tuples(draw_scores, st.integers(0, 1)), min_size=2, max_size=40).filter(
        lambda xs: 0 < sum(y for _, y in xs) < len(xs))


class TestAucValues:
    def test_perfect(self):
        assert roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).auc == 1.0

    def test_inverted(self):
        assert roc_curve([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]).auc == 0.0

    def test_constant_scores(self):
        assert roc_curve([0.3] * 6, [0, 1, 0, 1, 1, 0]).auc == 0.5

    def test_worked_example(self):
        # pairs (pos, neg): (0.9, 0.8), (0.9, 0.1), (0.4, 0.8), (0.4, 0.1) -> 3/4
        assert roc_curve([0.1, 0.4, 0.8, 0.9], [0, 1, 0, 1]).auc == 0.75

    def test_random_against_pairwise(self):
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(200):
            n = int(rng.integers(2, 60))
            s = rng.integers(0, 8, n) / 7.0  # coarse grid forces ties
            y = rng.integers(0, 2, n)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            ref = pairwise_auc(s, y)
            assert abs(roc_curve(s, y).auc - ref) < 1e-12
            assert abs(auc_score(s, y) - ref) < 1e-12


class TestAucInvariants:
    @given(labelled())
    @settings(max_examples=150, deadline=None)
    def test_monotone_transform(self, xs):
        s = np.array([a for a, _ in xs], float)
        y = np.array([b for _, b in xs])
        a = roc_curve(s, y).auc
        assert roc_curve(np.exp(2 * s) + 1, y).auc == a
        assert roc_curve(-s, y).auc == pytest.approx(1 - a, abs=1e-12)

    @given(labelled())
    @settings(max_examples=150, deadline=None)
    def test_label_swap(self, xs):
        s = np.array([a for a, _ in xs], float)
        y = np.array([b for _, b in xs])
        assert roc_curve(s, 1 - y).auc == pytest.approx(1 - roc_curve(s, y).auc, abs=1e-12)

    @given(labelled(), st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_permutation(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        a = roc_curve([p for p, _ in xs], [q for _, q in xs]).auc
        b = roc_curve([p for p, _ in ys], [q for _, q in ys]).auc
        assert a == b

    @given(labelled())
    @settings(max_examples=150, deadline=None)
    def test_curve_shape(self, xs):
        r = roc_curve([a for a, _ in xs], [b for _, b in xs])
        assert isinstance(r, RocCurve)
        assert r.points[0] == (0.0, 0.0)
        assert r.points[-1] == (1.0, 1.0)
        assert np.all(np.diff(r.fpr) >= 0) and np.all(np.diff(r.tpr) >= 0)
        assert np.isinf(r.thresholds[0])
        assert np.all(np.diff(r.thresholds[1:]) < 0)
        assert 0.0 <= r.auc <= 1.0

    @pytest.mark.parametrize("labels", [[0, 0, 0], [1, 1, 1]])
    def test_single_class(self, labels):
        with pytest.raises(DegenerateLabelsError):
            roc_curve([0.1, 0.2, 0.3], labels)
        with pytest.raises(DegenerateLabelsError):
            auc_score([0.1, 0.2, 0.3], labels)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            roc_curve([0.1, 0.2], [0, 1, 1])


class TestTrainTest:
    def test_in_sample_beats_out_of_sample_on_average(self):
        params = LifParams()
        gaps = []
        for seed in range(20):
            train = simulate_dataset(params, 2000, 0.14, seed=100 + seed)
            test = simulate_dataset(params, 2000, 0.14, seed=200 + seed, sweep_id=1)
            gaps.append(train_test_evaluate(train, train).auc
                        - train_test_evaluate(train, test).auc)
        assert np.mean(gaps) >= 0

    def test_excluded_bins_counted(self):
        train = simulate_dataset(LifParams(), 3000, 0.14, seed=5)
        test = simulate_dataset(LifParams(), 3000, 0.14, seed=6, sweep_id=1)
        ev = train_test_evaluate(train, test)
        assert ev.n_excluded > 0
        assert ev.probabilities.size == ev.roc.n_pos + ev.roc.n_neg
        assert ev.n_excluded + ev.probabilities.size == 3000
        assert 0.5 < ev.auc <= 1.0

    def test_test_without_spikes(self):
        train = simulate_dataset(LifParams(), 3000, 0.14, seed=5)
        fl = np.zeros(200, np.uint8)
        fl[::7] = 1
        sp = np.zeros(200, np.uint8)
        sp[0] = 1  # defines the spike marker, no spike afterwards
        test = Dataset((Sweep(1, fl, sp),))
        with pytest.raises(DegenerateLabelsError):
            train_test_evaluate(train, test)

    def test_train_without_spikes(self):
        fl = np.ones(50, np.uint8)
        train = Dataset((Sweep(0, fl, np.zeros(50, np.uint8)),))
        with pytest.raises(DegenerateResponseError):
            train_test_evaluate(train, train)
