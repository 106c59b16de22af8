import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mann_whitney_auc, population_std, roc_by_thresholds
from progspace.metrics import (REPORT_CLASSES, REPORT_HEADER, accuracy, auc, confusion_matrix, cv_summary,
                               one_vs_rest_auc, read_report_csv, render_report, roc_curve, write_report_csv)


def test_accuracy_examples():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([1, 2], [3, 4]) == 0.0
    assert accuracy("abcd", "abcx") == 0.75
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])


def test_accuracy_is_confusion_trace():
    rng = np.random.default_rng(0)
    t, p = rng.integers(0, 4, 60).tolist(), rng.integers(0, 4, 60).tolist()
    cm = confusion_matrix(t, p, [0, 1, 2, 3])
    assert accuracy(t, p) == np.trace(cm) / cm.sum()
    assert cm.sum(axis=1).tolist() == np.bincount(t, minlength=4).tolist()


def test_perfect_separation_passes_through_corner():
    pts = roc_curve([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert (0.0, 1.0) in pts
    assert auc(pts) == 1.0


def test_inverted_scores():
    assert auc(roc_curve([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0])) == 0.0


def test_all_tied_scores():
    assert roc_curve([0.5] * 4, [1, 0, 1, 0]) == [(0.0, 0.0), (1.0, 1.0)]


def test_small_example_against_enumeration():
    s, y = [0.9, 0.8, 0.7, 0.6], [1, 1, 0, 1]
    pts = roc_curve(s, y)
    assert (0.0, 2 / 3) in pts
    assert pts == roc_by_thresholds(s, y)


def test_single_class_undefined():
    with pytest.raises(ValueError):
        roc_curve([0.1, 0.2], [1, 1])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 6), st.booleans()), min_size=2, max_size=60))
def test_curve_matches_enumeration_and_mann_whitney(pairs):
    scores = [s / 6 for s, _ in pairs]
    labels = [y for _, y in pairs]
    if all(labels) or not any(labels):
        return
    pts = roc_curve(scores, labels)
    assert pts == pytest.approx(roc_by_thresholds(scores, labels))
    assert pts[0] == (0.0, 0.0) and pts[-1] == (1.0, 1.0)
    xs, ys = zip(*pts)
    assert all(np.diff(xs) >= 0) and all(np.diff(ys) >= 0)
    assert abs(auc(pts) - mann_whitney_auc(scores, labels)) < 1e-12


def test_seeded_random_instance_n50():
    rng = np.random.default_rng(50)
    s = rng.random(50)
    y = rng.integers(0, 2, 50)
    assert abs(auc(roc_curve(s, y)) - mann_whitney_auc(s, y)) < 1e-12


def test_monotone_transform_invariance():
    rng = np.random.default_rng(1)
    s, y = rng.random(40), rng.integers(0, 2, 40)
    assert auc(roc_curve(s, y)) == pytest.approx(auc(roc_curve(np.exp(3 * s) - 7, y)), abs=1e-15)


def test_reversed_labels_complement():
    rng = np.random.default_rng(2)
    s, y = rng.permutation(30) / 30, rng.integers(0, 2, 30)
    assert auc(roc_curve(s, 1 - y)) == pytest.approx(1 - auc(roc_curve(s, y)), abs=1e-12)


def test_one_vs_rest_examples():
    y = ["a", "b", "c", "a", "b", "c"]
    onehot = np.eye(3)[[0, 1, 2, 0, 1, 2]]
    assert one_vs_rest_auc(onehot, y, ["a", "b", "c"]) == {"a": 1.0, "b": 1.0, "c": 1.0}
    uniform = np.full((6, 3), 1 / 3)
    assert one_vs_rest_auc(uniform, y, ["a", "b", "c"]) == {"a": 0.5, "b": 0.5, "c": 0.5}


def test_one_vs_rest_matches_pairwise_oracle():
    rng = np.random.default_rng(3)
    proba = rng.dirichlet([1, 1, 1], size=45)
    y = rng.choice(["a", "b", "c"], size=45).tolist()
    got = one_vs_rest_auc(proba, y, ["a", "b", "c"])
    for j, c in enumerate("abc"):
        assert got[c] == pytest.approx(mann_whitney_auc(proba[:, j], [v == c for v in y]), abs=1e-12)


def test_missing_class_is_marked_not_fatal():
    got = one_vs_rest_auc(np.eye(3)[[0, 1, 0]], ["a", "b", "a"], ["a", "b", "c"])
    assert got["c"] is None and got["a"] == 1.0


# ---------------------------------------------------------------- summary

def test_summary_renders_table_format():
    # engineered folds: mean 0.8454, population std 0.0335
    d = 0.0335 / np.sqrt(2)
    folds = [0.8454 - 2 * d, 0.8454 - d, 0.8454, 0.8454 + d, 0.8454 + 2 * d]
    # population std of (-2,-1,0,1,2)*d is sqrt(2)*d
    r = cv_summary(folds, [{c: 0.9 for c in REPORT_CLASSES}] * 5, 24)
    assert r.accuracy_text() == "84.54 ± 3.35"


def test_identical_folds_zero_std():
    r = cv_summary([0.9] * 5, [{c: 0.8 for c in REPORT_CLASSES}] * 5, 48)
    assert r.accuracy_text() == "90.00 ± 0.00"
    assert r.auc_text("Low") == "0.80 ± 0.00"
    assert r.row()[0] == "M48"


def test_summary_matches_recomputation():
    rng = np.random.default_rng(5)
    accs = rng.uniform(0.6, 0.95, 5).tolist()
    aucs = [{c: float(v) for c, v in zip(REPORT_CLASSES, rng.uniform(0.7, 1, 4))} for _ in range(5)]
    r = cv_summary(accs, aucs, 24)
    assert abs(r.accuracy_mean - 100 * sum(accs) / 5) < 1e-9
    assert abs(r.accuracy_std - 100 * population_std(accs)) < 1e-9
    for c in REPORT_CLASSES:
        vals = [a[c] for a in aucs]
        assert abs(r.auc_mean[c] - sum(vals) / 5) < 1e-9
        assert abs(r.auc_std[c] - population_std(vals)) < 1e-9


def test_undefined_fold_auc_skipped():
    aucs = [{"Control": 0.9, "Low": None, "Moderate": 0.8, "High": 1.0},
            {"Control": 0.7, "Low": 0.6, "Moderate": 0.8, "High": 1.0}]
    r = cv_summary([0.5, 0.7], aucs, 24)
    assert r.auc_mean["Low"] == 0.6 and r.auc_mean["Control"] == pytest.approx(0.8)


def test_summary_needs_two_folds():
    with pytest.raises(ValueError):
        cv_summary([0.9], [{}], 24)


def test_report_csv_layout(tmp_path):
    r = cv_summary([0.8, 0.9], [{c: 0.9 for c in REPORT_CLASSES}] * 2, 24)
    write_report_csv([r], tmp_path / "r.csv")
    rows = read_report_csv(tmp_path / "r.csv")
    assert rows[0] == REPORT_HEADER == ["model", "accuracy", "auc_control", "auc_low", "auc_moderate", "auc_high"]
    assert rows[1] == ["M24", "85.00 ± 5.00", "0.90 ± 0.00", "0.90 ± 0.00", "0.90 ± 0.00", "0.90 ± 0.00"]


def test_rendered_report_mentions_population_std():
    r = cv_summary([0.8, 0.9], [{c: 0.9 for c in REPORT_CLASSES}] * 2, 24, confusion=np.eye(4, dtype=int))
    text = render_report(r)
    assert "AUC -control" in text and "population standard deviation" in text
    assert "85.00 ± 5.00" in text
