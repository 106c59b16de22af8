import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import best_split_1d, gini_naive
from progspace.errors import DegenerateTargetError, FitError, ShapeError, StratificationError
from progspace.forest import (ForestParams, HyperGrid, MajorityClassifier, TreeParams, bootstrap_indices,
                              cross_validate, cross_validate_estimator, forest_fit, forest_predict_proba,
                              gini, grid_search_cv, load_forest, resolve_mtry, save_forest, stratified_kfold,
                              tree_fit)


def separable(n=200, d=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = np.where(X[:, 0] > 0.5, "B", "A")
    return X, y


def tree_gains(tree, X, codes, n_classes):
    """Gini decrease at every internal node, recomputed from the data."""
    out = []
    def walk(node, idx):
        if tree.feature[node] < 0:
            return
        go_left = X[idx, tree.feature[node]] <= tree.threshold[node]
        L, R = idx[go_left], idx[~go_left]
        def g(ix):
            return gini_naive(np.bincount(codes[ix], minlength=n_classes).tolist())
        out.append(g(idx) - (len(L) * g(L) + len(R) * g(R)) / len(idx))
        walk(tree.left[node], L)
        walk(tree.right[node], R)
    walk(0, np.arange(len(codes)))
    return out


# ---------------------------------------------------------------- gini

def test_gini_examples():
    assert gini([5, 0, 0]) == 0.0
    assert gini([1, 1]) == 0.5
    assert gini([2, 2, 2]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        gini([0, 0])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(lambda c: sum(c) > 0))
def test_gini_matches_naive(counts):
    assert gini(counts) == pytest.approx(gini_naive(counts), abs=1e-12)
    assert 0.0 <= gini(counts) < 1.0


# ---------------------------------------------------------------- trees

def test_single_class_single_leaf():
    t = tree_fit(np.random.default_rng(0).random((10, 3)), ["A"] * 10)
    assert t.n_nodes == 1 and t.is_leaf(0)


def test_root_split_at_midpoint():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    t = tree_fit(X, ["A", "A", "B", "B"], TreeParams(mtry=1))
    assert t.feature[0] == 0 and t.threshold[0] == 1.5
    assert [t.classes[i] for i in t.predict_index(X)] == ["A", "A", "B", "B"]


def test_depth_zero_is_majority_leaf():
    X = np.arange(5.0).reshape(-1, 1)
    t = tree_fit(X, ["A", "B", "B", "A", "B"], TreeParams(max_depth=0))
    assert t.n_nodes == 1 and t.classes[t.leaf_votes()[0]] == "B"


@pytest.mark.parametrize("seed", range(5))
def test_root_split_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    x = np.round(rng.random(30), 2)
    y = rng.integers(0, 3, 30)
    t = tree_fit(x.reshape(-1, 1), y.tolist(), TreeParams(max_depth=1, mtry=1))
    gain, thr = best_split_1d(x.tolist(), y.tolist())
    if thr is None:
        assert t.n_nodes == 1
    else:
        assert t.threshold[0] == pytest.approx(thr)


def test_thresholds_are_midpoints_and_gains_positive():
    rng = np.random.default_rng(1)
    X = np.round(rng.random((80, 4)), 2)
    y = rng.integers(0, 3, 80)
    t = tree_fit(X, y.tolist(), TreeParams(mtry=2), np.random.default_rng(2))

    def walk(node, idx):
        if t.is_leaf(node):
            assert t.counts[node].sum() == len(idx) > 0
            return
        f, thr = t.feature[node], t.threshold[node]
        vals = np.unique(X[idx, f])
        below, above = vals[vals <= thr], vals[vals > thr]
        # adjacent distinct values of the node's own samples
        assert thr == (below.max() + above.min()) / 2
        go_left = X[idx, f] <= thr
        walk(t.left[node], idx[go_left])
        walk(t.right[node], idx[~go_left])

    walk(0, np.arange(80))
    assert all(g > 0 for g in tree_gains(t, X, y, 3))


def test_pure_nodes_never_split():
    X, y = separable(60)
    t = tree_fit(X, y, TreeParams(mtry="all"))
    for node in range(t.n_nodes):
        if (t.counts[node] > 0).sum() == 1:
            assert t.is_leaf(node)


def test_min_samples_leaf_respected():
    rng = np.random.default_rng(3)
    X = rng.random((100, 3))
    y = rng.integers(0, 2, 100)
    t = tree_fit(X, y.tolist(), TreeParams(min_samples_leaf=7, mtry="all"))
    leaves = [n for n in range(t.n_nodes) if t.is_leaf(n)]
    assert min(t.counts[n].sum() for n in leaves) >= 7


def test_tree_deterministic_given_rng():
    X, y = separable(50)
    a = tree_fit(X, y, TreeParams(mtry=2), np.random.default_rng(7))
    b = tree_fit(X, y, TreeParams(mtry=2), np.random.default_rng(7))
    assert np.array_equal(a.threshold, b.threshold) and np.array_equal(a.feature, b.feature)


def test_empty_data_rejected():
    with pytest.raises(FitError):
        tree_fit(np.zeros((0, 2)), [])


def test_resolve_mtry():
    assert resolve_mtry("sqrt", 436) == 21
    assert resolve_mtry("third", 436) == 146
    assert resolve_mtry(None, 7) == 7 and resolve_mtry(50, 7) == 7


# ---------------------------------------------------------------- forests

def test_separable_oob_accuracy():
    X, y = separable(200, d=1)
    m = forest_fit(X, y, ForestParams(n_trees=50), seed=0)
    assert m.oob_accuracy >= 0.95


def test_same_seed_same_predictions():
    X, y = separable(100)
    probe = np.random.default_rng(9).random((20, 5))
    a = forest_fit(X, y, ForestParams(n_trees=15), seed=4)
    b = forest_fit(X, y, ForestParams(n_trees=15), seed=4)
    assert np.array_equal(a.predict_proba(probe), b.predict_proba(probe))


def test_single_tree_forest_equals_its_tree():
    X, y = separable(60)
    m = forest_fit(X, y, ForestParams(n_trees=1), seed=2)
    probe = np.random.default_rng(1).random((30, 5))
    tree = m.trees[0]
    assert m.predict(probe) == [m.classes[i] for i in tree.predict_index(probe)]


def test_vote_fractions():
    X, y = separable(80)
    m = forest_fit(X, y, ForestParams(n_trees=2, max_depth=0), seed=0, classes=["A", "B", "C", "D"])
    m.trees[0].counts[0] = [5, 0, 0, 0]
    m.trees[1].counts[0] = [0, 5, 0, 0]
    assert np.array_equal(forest_predict_proba(m, X[:1]), [[0.5, 0.5, 0.0, 0.0]])
    # ties go to the earlier class
    assert m.predict(X[:1]) == ["A"]
    m.trees[1].counts[0] = [5, 0, 0, 0]
    assert np.array_equal(forest_predict_proba(m, X[:1]), [[1.0, 0.0, 0.0, 0.0]])


def test_training_points_recovered_by_deep_forest():
    X, y = separable(120)
    m = forest_fit(X, y, ForestParams(n_trees=30, mtry="all"), seed=1)
    assert m.predict(X) == list(y)


def test_forest_errors():
    X, y = separable(20)
    with pytest.raises(DegenerateTargetError):
        forest_fit(X, ["A"] * 20)
    m = forest_fit(X, y, ForestParams(n_trees=3))
    with pytest.raises(ShapeError):
        m.predict_proba(np.zeros((2, 4)))


def test_constant_features_change_nothing():
    X, y = separable(80, d=3)
    Xc = np.hstack([X, np.full((80, 4), 0.7)])
    a = forest_fit(X, y, ForestParams(n_trees=10, mtry="all"), seed=3)
    b = forest_fit(Xc, y, ForestParams(n_trees=10, mtry="all"), seed=3)
    probe = np.random.default_rng(0).random((25, 3))
    assert a.predict(probe) == b.predict(np.hstack([probe, np.full((25, 4), 0.7)]))


def test_bootstrap_frequency():
    n = 100
    freq = np.zeros(n)
    for s in range(1000):
        freq[np.unique(bootstrap_indices(n, s, 0))] += 1
    freq /= 1000
    assert freq.min() >= 0.58 and freq.max() <= 0.68


def test_bootstrap_of_tree_matches_forest():
    X, y = separable(40)
    m = forest_fit(X, y, ForestParams(n_trees=4), seed=11)
    for t, tree in enumerate(m.trees):
        assert np.array_equal(tree.sample, bootstrap_indices(40, 11, t))


def test_parallel_training_is_identical():
    X, y = separable(100)
    a = forest_fit(X, y, ForestParams(n_trees=8), seed=5, n_jobs=1)
    b = forest_fit(X, y, ForestParams(n_trees=8), seed=5, n_jobs=2)
    assert all(np.array_equal(s.threshold, t.threshold) for s, t in zip(a.trees, b.trees))


def test_forest_round_trip(tmp_path):
    X, y = separable(60)
    m = forest_fit(X, y, ForestParams(n_trees=5, max_depth=3, mtry=2, min_samples_leaf=2), seed=8)
    save_forest(m, tmp_path / "f.txt")
    g = load_forest(tmp_path / "f.txt")
    assert g.params == m.params and g.classes == m.classes and g.oob_accuracy == m.oob_accuracy
    probe = np.random.default_rng(0).random((40, 5))
    assert np.array_equal(g.predict_proba(probe), m.predict_proba(probe))


# ---------------------------------------------------------------- folds

def test_folds_exact_division():
    folds = stratified_kfold(["a"] * 5 + ["b"] * 5, 5, seed=0)
    labels = ["a"] * 5 + ["b"] * 5
    assert all(sorted(labels[i] for i in f) == ["a", "b"] for f in folds)


def test_folds_round_robin():
    labels = ["x"] * 7 + ["y"] * 3
    folds = stratified_kfold(labels, 3, seed=1)
    assert [sum(labels[i] == "y" for i in f) for f in folds] == [1, 1, 1]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=12, max_size=80), st.integers(2, 4), st.integers(0, 10**6))
def test_folds_partition_and_balance(labels, k, seed):
    counts = np.bincount(labels)
    if counts[counts > 0].min() < k:
        with pytest.raises(StratificationError):
            stratified_kfold(labels, k, seed)
        return
    folds = stratified_kfold(labels, k, seed)
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(len(labels)))
    for c in set(labels):
        per = [sum(labels[i] == c for i in f) for f in folds]
        assert max(per) - min(per) <= 1


def test_folds_depend_only_on_labels_and_seed():
    labels = ["a", "b"] * 10
    assert all(np.array_equal(p, q) for p, q in zip(stratified_kfold(labels, 4, 3), stratified_kfold(labels, 4, 3)))


# ---------------------------------------------------------------- CV

def test_cross_validate_fold_accuracy():
    X, y = separable(100)
    folds = stratified_kfold(y, 5, 0)
    res = cross_validate(X, y, ForestParams(n_trees=10), folds, seed=0)
    for fr in res:
        pred = np.argmax(fr.proba, axis=1)
        truth = np.array([["A", "B"].index(v) for v in y[fr.test_index]])
        assert fr.accuracy == np.mean(pred == truth)
    assert np.mean([fr.accuracy for fr in res]) > 0.9


def test_majority_baseline():
    X, y = separable(100)
    folds = stratified_kfold(y, 5, 0)
    res = cross_validate_estimator(MajorityClassifier, X, y, folds)
    assert all(np.all(fr.proba.sum(axis=1) == 1) for fr in res)


def test_single_point_grid():
    X, y = separable(60)
    grid = HyperGrid([5], [3], ["sqrt"], [1])
    assert grid_search_cv(X, y, grid, 3, seed=0).best == ForestParams(5, 3, "sqrt", 1)


def test_degenerate_config_loses():
    X, y = separable(100)
    best, scores = grid_search_cv(X, y, HyperGrid([10], [0, None], ["all"], [1]), 5, seed=0)
    assert best.max_depth is None
    assert dict((p.max_depth, a) for p, a in scores)[0] < 0.7


def test_grid_scores_match_direct_cv():
    X, y = separable(80)
    grid = HyperGrid([4, 9], [2, None], ["sqrt"], [1, 3])
    res = grid_search_cv(X, y, grid, 4, seed=2)
    folds = stratified_kfold(y, 4, 2)
    for p, mean, fold_acc in res.scores:
        direct = [fr.accuracy for fr in cross_validate(X, y, p, folds, seed=2)]
        assert fold_acc == direct and mean == pytest.approx(np.mean(direct))


def test_grid_tie_prefers_smaller_forest_then_shallower():
    X, y = separable(60, d=1)
    res = grid_search_cv(X, y, HyperGrid([20, 5], [None, 6], ["all"], [1]), 3, seed=0)
    top = max(m for _, m, _ in res.scores)
    tied = [p for p, m, _ in res.scores if m == top]
    assert res.best.n_trees == min(p.n_trees for p in tied)
    assert res.best in tied


def test_grid_deterministic_and_parallel_equal():
    X, y = separable(60)
    grid = HyperGrid([3, 6], [2, None], ["sqrt"], [1])
    a = grid_search_cv(X, y, grid, 3, seed=1)
    b = grid_search_cv(X, y, grid, 3, seed=1, n_jobs=2)
    assert a.best == b.best and [s[1] for s in a.scores] == [s[1] for s in b.scores]
