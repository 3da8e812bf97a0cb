import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import rational_metrics
from pseudoperiodic.classify import (
    LDA,
    ConfusionCounts,
    Dataset,
    DecisionTree,
    GaussianNB,
    RandomForest,
    compute_metrics,
    kfold_cv,
    predict_gnb,
    predict_lda,
    stratified_folds,
    train_forest,
    train_gnb,
    train_lda,
    train_tree,
)
from pseudoperiodic.errors import ContractError, TrainingError


def two_blobs(rng, n=250, d=7, shift=4.0):
    X0 = rng.normal(size=(n, d))
    X1 = rng.normal(size=(n, d))
    X1[:, 0] += shift
    return np.vstack([X0, X1]), np.repeat([0, 1], n)


class TestGNB:
    def test_huge_margin(self, rng):
        X = np.vstack([rng.normal(0, 1, (20, 7)), rng.normal(0, 1, (20, 7))])
        X[20:, 2] += 1000
        y = np.repeat([0, 1], 20)
        model = train_gnb(Dataset(X, y))
        assert np.array_equal(predict_gnb(model, X), y)

    def test_midpoint_tie_goes_to_normal(self):
        X = np.array([[-1.0], [-3.0], [1.0], [3.0]])
        y = np.array([0, 0, 1, 1])
        assert GaussianNB(standardize=False).fit(X, y).predict([[0.0]]).tolist() == [0]

    def test_separable_blobs(self, rng):
        X, y = two_blobs(rng)
        Xt, yt = two_blobs(rng)
        model = GaussianNB().fit(X, y)
        assert np.mean(model.predict(Xt) == yt) > 0.95

    def test_needs_two_per_class(self):
        with pytest.raises(TrainingError):
            GaussianNB().fit([[0.0], [1.0], [2.0]], [0, 0, 1])
        with pytest.raises(TrainingError):
            GaussianNB().fit([[0.0], [1.0]], [0, 0])

    def test_constant_feature_survives(self, rng):
        X, y = two_blobs(rng, n=50)
        X[:, 3] = 2.0
        assert np.mean(GaussianNB().fit(X, y).predict(X) == y) > 0.9


class TestLDA:
    def test_boundary_orthogonal_to_shifted_axis(self, rng):
        X, y = two_blobs(rng, n=5000)
        w = train_lda(Dataset(X, y)).coef_
        w = w / np.linalg.norm(w)
        assert abs(w[0]) > 0.99

    def test_duplicated_column_still_trains(self, rng):
        X, y = two_blobs(rng, n=100)
        X = np.column_stack([X, X[:, 0]])
        model = LDA().fit(X, y)
        assert np.mean(predict_lda(model, X) == y) > 0.9

    def test_equal_means_fall_back_to_prior(self):
        X = np.array([[-1.0], [1.0], [-1.0], [1.0], [-1.0], [1.0]])
        y = np.array([0, 0, 0, 0, 1, 1])
        assert LDA(standardize=False).fit(X, y).predict([[5.0], [-5.0]]).tolist() == [0, 0]
        assert LDA(standardize=False).fit(X, 1 - y).predict([[5.0], [-5.0]]).tolist() == [1, 1]


class TestTrees:
    def test_pure_set_predicts_normal(self, rng):
        X = rng.normal(size=(10, 7))
        model = train_tree(Dataset(X, np.zeros(10, dtype=int)))
        assert model.predict(rng.normal(size=(5, 7))).tolist() == [0] * 5

    def test_xor_depth_two(self):
        X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=float)
        y = np.array([0, 1, 1, 0] * 5)
        tree = DecisionTree(max_depth=2).fit(X, y)
        assert tree.depth == 2
        assert np.array_equal(tree.predict(X), y)

    def test_one_tree_forest_equals_tree(self, rng):
        X, y = two_blobs(rng, n=60, shift=1.0)
        forest = RandomForest(n_trees=1, bootstrap=False, max_features=7, rng=np.random.default_rng(0)).fit(X, y)
        tree = DecisionTree().fit(X, y)
        Xt = rng.normal(size=(200, 7))
        assert np.array_equal(forest.predict(Xt), tree.predict(Xt))

    def test_forest_votes_ties_to_normal(self, rng):
        X, y = two_blobs(rng, n=30, shift=0.5)
        forest = train_forest(Dataset(X, y), n_trees=4, rng=np.random.default_rng(1))
        votes = forest.votes(X)
        assert np.array_equal(forest.predict(X), (votes > 2).astype(int))

    def test_odd_forest_never_ties(self, rng):
        X, y = two_blobs(rng, n=30, shift=0.5)
        forest = RandomForest(n_trees=5, rng=np.random.default_rng(2)).fit(X, y)
        assert np.all(2 * forest.votes(rng.normal(size=(100, 7))) != 5)

    @pytest.mark.parametrize("make", [lambda: GaussianNB(), lambda: LDA(), lambda: DecisionTree()])
    def test_training_order_does_not_matter(self, rng, make):
        X, y = two_blobs(rng, n=40, shift=1.0)
        X = np.round(X, 1)  # plenty of tied feature values
        perm = rng.permutation(y.size)
        Xt = rng.normal(size=(300, 7))
        a = make().fit(X, y).predict(Xt)
        b = make().fit(X[perm], y[perm]).predict(Xt)
        assert np.array_equal(a, b)


class TestMetrics:
    def test_perfect(self):
        m = compute_metrics(ConfusionCounts(tp=5, tn=5))
        assert (m.acc, m.sen, m.spe, m.fmea, m.pre) == (1, 1, 1, 1, 0.5)

    def test_worked_example(self):
        m = compute_metrics(ConfusionCounts(tp=8, tn=9, fp=1, fn=2))
        assert (m.sen, m.spe, m.acc) == (0.8, 0.9, 0.85)
        assert m.fmea == pytest.approx(0.8421, abs=1e-4)

    def test_zero_over_zero(self):
        assert compute_metrics(ConfusionCounts(tn=4, fn=3)).fmea == 0

    def test_empty(self):
        with pytest.raises(ContractError):
            compute_metrics(ConfusionCounts())

    @given(*(st.integers(0, 10**6) for _ in range(4)))
    def test_rational_oracle(self, tp, tn, fp, fn):
        if tp + tn + fp + fn == 0:
            return
        m = compute_metrics(ConfusionCounts(tp, tn, fp, fn))
        exact = rational_metrics(tp, tn, fp, fn)
        for name, value in exact.items():
            assert getattr(m, name) == float(value)
            assert 0 <= getattr(m, name) <= 1


class TestCrossValidation:
    def test_folds_partition_and_stratify(self, rng):
        y = np.array([0] * 93 + [1] * 17)
        fold = stratified_folds(y, 10, rng)
        assert set(fold) == set(range(10))
        for c in (0, 1):
            per = np.bincount(fold[y == c], minlength=10)
            assert per.max() - per.min() <= 1

    def test_every_sample_tested_once(self, rng):
        X, y = two_blobs(rng, n=50)
        res = kfold_cv(Dataset(X, y), 10, "gnb", seed=1)
        assert res.counts.total == 100
        assert np.all(res.predictions >= 0)
        assert len(res.folds) == 10

    def test_deterministic(self, rng):
        X, y = two_blobs(rng, n=50, shift=1.0)
        ds = Dataset(X, y)
        a = kfold_cv(ds, 5, "forest", seed=3, n_trees=15)
        b = kfold_cv(ds, 5, "forest", seed=3, n_trees=15)
        assert a.to_dict() == b.to_dict()
        c = kfold_cv(ds, 5, "forest", seed=3, n_trees=15, workers=3)
        assert a.to_dict() == c.to_dict()

    def test_replicated_blobs_match_single_split(self, rng):
        X, y = two_blobs(rng, n=20, shift=10)
        ds = Dataset(np.vstack([X] * 10), np.tile(y, 10))
        assert kfold_cv(ds, 10, "lda", seed=0).pooled.acc == 1.0

    def test_sample_order_barely_matters(self, rng):
        X, y = two_blobs(rng, n=250, shift=3.0)
        perm = rng.permutation(y.size)
        a = kfold_cv(Dataset(X, y), 10, "gnb", seed=0).pooled.acc
        b = kfold_cv(Dataset(X[perm], y[perm]), 10, "gnb", seed=0).pooled.acc
        assert abs(a - b) < 0.05

    def test_single_class_folds_are_skipped(self):
        X = np.arange(12, dtype=float).reshape(-1, 1)
        y = np.array([0] * 10 + [1] * 2)
        res = kfold_cv(Dataset(X, y), 3, "gnb", seed=0)
        assert len(res.skipped) + len(res.folds) == 3
        assert res.skipped

    def test_bad_k(self, rng):
        X, y = two_blobs(rng, n=5)
        with pytest.raises(ContractError):
            kfold_cv(Dataset(X, y), 11)
        with pytest.raises(ContractError):
            kfold_cv(Dataset(X, y), 1)
