import numpy as np
import pytest

from phonassess.errors import PhonassessError
from phonassess.models import (DecisionTree, ForestModel, TreeNode, predict,
                               predict_forest, predict_tree, train_cart, train_forest)


class TestCart:
    def test_constant_target_single_leaf(self):
        X = np.random.default_rng(0).uniform(0, 1, (12, 3))
        tree = train_cart(X, np.full(12, 4.2), mode="regression")
        assert tree.root.is_leaf
        assert predict(tree, X[0]) == 4.2

    def test_step_function_threshold(self):
        X = np.linspace(0, 1, 40).reshape(-1, 1)
        y = np.where(X[:, 0] > 0.5, 10.0, 0.0)
        tree = train_cart(X, y, mode="regression")
        assert 0.4 < tree.root.threshold < 0.6
        mae = np.mean([abs(predict(tree, r) - v) for r, v in zip(X, y)])
        assert mae == 0.0

    def test_separable_blobs_perfect(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(0, 0.5, (15, 2)), rng.normal(5, 0.5, (15, 2))])
        y = np.array(["HC"] * 15 + ["PD"] * 15)
        tree = train_cart(X, y, mode="classification")
        acc = np.mean([predict(tree, r) == t for r, t in zip(X, y)])
        assert acc == 1.0

    def test_constant_features_single_leaf(self):
        X = np.ones((10, 2))
        y = np.array([0.0, 1.0] * 5)
        tree = train_cart(X, y, mode="regression")
        assert tree.root.is_leaf

    def test_tie_at_threshold_goes_left(self):
        X = np.array([[0.0], [0.0], [0.0], [1.0], [1.0], [1.0]])
        y = np.array([0.0, 0.0, 0.0, 9.0, 9.0, 9.0])
        tree = train_cart(X, y, mode="regression", min_leaf=1)
        thr = tree.root.threshold
        assert predict(tree, [thr]) == 0.0  # exactly at the threshold -> left

    def test_missing_referenced_feature_raises(self):
        X = np.linspace(0, 1, 20).reshape(-1, 1)
        y = (X[:, 0] > 0.5).astype(float)
        tree = train_cart(X, y, mode="regression")
        with pytest.raises(PhonassessError):
            predict(tree, [np.nan])

    def test_single_leaf_predicts_constant_for_missing(self):
        tree = train_cart(np.ones((6, 1)), np.full(6, 2.5), mode="regression")
        # no feature referenced: NaN row is fine
        assert predict(tree, [np.nan]) == 2.5

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(0.1, 2.0, (40, 3))
        y = (X[:, 0] * 2 + X[:, 1] > 2.5).astype(float)
        t_raw = train_cart(X, y, mode="regression")
        t_exp = train_cart(np.exp(X), y, mode="regression")
        for row in X:
            assert predict(t_raw, row) == predict(t_exp, np.exp(row))

    def test_json_roundtrip(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(0, 1, (30, 4))
        y = np.array(["PD" if v > 0.5 else "HC" for v in X[:, 1]])
        tree = train_cart(X, y, mode="classification")
        clone = DecisionTree.from_json(tree.to_json())
        for row in X:
            assert predict(tree, row) == predict(clone, row)


class TestForest:
    def test_degenerate_equals_cart(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(0, 1, (30, 3))
        y = np.array(["PD" if v > 0.5 else "HC" for v in X[:, 0]])
        forest = train_forest(X, y, n_trees=1, bootstrap=False, feature_subsample=None,
                              seed=0, min_leaf=3)
        cart = train_cart(X, y, mode="classification", min_leaf=3)
        for row in X:
            assert predict_forest(forest, row) == predict_tree(cart, row)

    def test_majority_vote(self):
        leaf_a = DecisionTree(root=TreeNode(prediction="A"), mode="classification",
                              n_features=1, classes=["A", "B"])
        leaf_b = DecisionTree(root=TreeNode(prediction="B"), mode="classification",
                              n_features=1, classes=["A", "B"])
        forest = ForestModel(trees=[leaf_a, leaf_a, leaf_b], mode="classification",
                             seed=0, bootstrap=True, feature_subsample=None)
        assert predict_forest(forest, [0.0]) == "A"

    def test_single_class_error(self):
        X = np.random.default_rng(5).uniform(0, 1, (10, 2))
        with pytest.raises(PhonassessError):
            train_forest(X, np.array(["PD"] * 10))

    def test_seeded_reproducibility(self):
        rng = np.random.default_rng(6)
        X = np.vstack([rng.normal(0, 1, (12, 4)), rng.normal(3, 1, (12, 4))])
        y = np.array(["HC"] * 12 + ["PD"] * 12)
        a = train_forest(X, y, n_trees=15, seed=42)
        b = train_forest(X, y, n_trees=15, seed=42)
        assert a.to_json() == b.to_json()
        probe = rng.normal(1.5, 1, (20, 4))
        assert [predict_forest(a, r) for r in probe] == [predict_forest(b, r) for r in probe]

    def test_forest_json_roundtrip(self):
        rng = np.random.default_rng(7)
        X = np.vstack([rng.normal(0, 1, (10, 3)), rng.normal(4, 1, (10, 3))])
        y = np.array(["HC"] * 10 + ["PD"] * 10)
        forest = train_forest(X, y, n_trees=5, seed=9)
        clone = ForestModel.from_json(forest.to_json())
        for row in X:
            assert predict_forest(forest, row) == predict_forest(clone, row)

    def test_regression_forest_mean(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(0, 1, (40, 2))
        y = 3 * X[:, 0]
        forest = train_forest(X, y, n_trees=10, seed=1, mode="regression")
        preds = [predict_forest(forest, r) for r in X]
        assert np.corrcoef(preds, y)[0, 1] > 0.9
