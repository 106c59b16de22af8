import numpy as np
import pytest

from progspace.cohort import ColumnMeta
from progspace.errors import DomainError, LabelingError, RankError, ShapeError
from progspace.nmf import (AxisLabel, Orientation, frobenius_residual, interpret_axes, load_factorization,
                           nmf_fit, nmf_transform, orient_axes, save_factorization)


def cols(groups):
    return [ColumnMeta(f"c{i}", f"c{i}", g, "numeric") for i, g in enumerate(groups)]


def test_rank_one_exact():
    V = np.outer([1, 2, 3], [0.2, 0.4])
    f = nmf_fit(V, 1, seed=0, tol=1e-12, max_iter=5000)
    assert f.residual < 1e-6


def test_zero_matrix():
    f = nmf_fit(np.zeros((4, 4)), 2, seed=0)
    assert f.residual_history[-1] <= 1e-12


def test_seeded_fit_is_bit_identical():
    V = np.random.default_rng(1).random((20, 8))
    a, b = nmf_fit(V, 2, seed=4), nmf_fit(V, 2, seed=4)
    assert np.array_equal(a.W, b.W) and np.array_equal(a.H, b.H)


def test_negative_input_rejected():
    with pytest.raises(DomainError):
        nmf_fit(np.array([[1.0, -0.1], [0.2, 0.3]]), 1)


def test_rank_too_large():
    with pytest.raises(RankError):
        nmf_fit(np.ones((3, 2)), 3)


def test_history_monotone_and_last_entry_matches():
    V = np.random.default_rng(2).random((5, 4))
    f = nmf_fit(V, 2, seed=0, tol=1e-10, max_iter=3000)
    h = np.asarray(f.residual_history)
    assert np.all(np.diff(h) <= 1e-9)
    assert abs(frobenius_residual(V, f.W, f.H) - h[-1]) <= 1e-9
    assert (f.W >= 0).all() and (f.H >= 0).all()


def test_stop_flag_and_iterations():
    V = np.random.default_rng(3).random((10, 6))
    f = nmf_fit(V, 2, seed=0, tol=1e-3, max_iter=2000)
    assert f.converged and f.iterations == len(f.residual_history) < 2000
    g = nmf_fit(V, 2, seed=0, tol=1e-15, max_iter=5)
    assert not g.converged and g.iterations == 5


@pytest.mark.parametrize("seed", range(5))
def test_exact_low_rank_recovery(seed):
    rng = np.random.default_rng(seed)
    V = rng.random((50, 2)) @ rng.random((2, 30))
    V /= V.max()
    f = nmf_fit(V, 2, seed=seed, tol=1e-14, max_iter=20000)
    assert f.residual < 1e-5


def test_frobenius_residual_examples():
    assert frobenius_residual([[1.0]], [[0.0]], [[0.0]]) == 1.0
    W, H = np.array([[1.0, 2.0]]), np.array([[0.5], [0.25]])
    assert frobenius_residual(W @ H, W, H) == 0.0
    with pytest.raises(ShapeError):
        frobenius_residual(np.ones((2, 2)), np.ones((2, 1)), np.ones((2, 2)))


def test_scale_gauge_reconstruction():
    V = np.random.default_rng(4).random((12, 7))
    f = nmf_fit(V, 2, seed=0)
    D = np.diag([3.0, 0.5])
    assert np.allclose((f.W @ D) @ (np.linalg.inv(D) @ f.H), f.W @ f.H, atol=1e-12)


# ---------------------------------------------------------------- transform

def test_transform_matches_training_residuals():
    rng = np.random.default_rng(7)
    V = rng.random((30, 2)) @ rng.random((2, 12)) + 0.05 * rng.random((30, 12))
    V /= V.max()
    f = nmf_fit(V, 2, seed=0, tol=1e-13, max_iter=60000)
    W = nmf_transform(V, f.H, seed=0, tol=1e-14, max_iter=60000)
    fit_rows = np.linalg.norm(V - f.W @ f.H, axis=1)
    new_rows = np.linalg.norm(V - W @ f.H, axis=1)
    assert np.max(np.abs(fit_rows - new_rows)) < 1e-6


def test_transform_zero_row():
    H = np.random.default_rng(0).random((2, 5))
    assert np.all(nmf_transform(np.zeros((1, 5)), H) == 0.0)


def test_transform_duplicate_rows_identical():
    rng = np.random.default_rng(1)
    H = rng.random((2, 6))
    row = rng.random(6)
    W = nmf_transform(np.tile(row, (3, 1)), H)
    assert np.array_equal(W[0], W[1]) and np.array_equal(W[1], W[2])


def test_transform_independent_of_batch():
    rng = np.random.default_rng(2)
    H = rng.random((2, 6))
    V = rng.random((8, 6))
    assert np.array_equal(nmf_transform(V, H)[3], nmf_transform(V[3:4], H)[0])


def test_transform_column_mismatch():
    with pytest.raises(ShapeError):
        nmf_transform(np.ones((2, 3)), np.ones((2, 4)))


# ---------------------------------------------------------------- interpretation

def test_axes_by_group_mass():
    groups = ["memory", "memory", "cognition", "cognition", "other"]
    H = np.array([[0.0, 0.1, 0.9, 0.8, 0.1], [0.7, 0.9, 0.1, 0.0, 0.1]])
    ia = interpret_axes(H, cols(groups))
    assert ia.axis_labels == [AxisLabel.COGNITION, AxisLabel.MEMORY]
    assert ia.group_loadings[0]["cognition"] == pytest.approx(1.7)


def test_equal_h_leaves_axes_unlabeled():
    ia = interpret_axes(np.ones((2, 4)), cols(["memory", "memory", "cognition", "cognition"]))
    assert ia.axis_labels == [AxisLabel.UNLABELED, AxisLabel.UNLABELED]


def test_other_only_unlabeled():
    ia = interpret_axes(np.random.default_rng(0).random((2, 3)), cols(["other"] * 3))
    assert ia.axis_labels == [AxisLabel.UNLABELED, AxisLabel.UNLABELED]


def test_same_claim_keeps_larger_margin():
    groups = ["memory", "memory", "cognition"]
    H = np.array([[1.0, 1.0, 0.5], [0.6, 0.6, 1.0]])
    # both rows are memory-heavy; the first has margin 1.5, the second 0.2
    ia = interpret_axes(H, cols(groups))
    assert ia.axis_labels == [AxisLabel.MEMORY, AxisLabel.UNLABELED]


def test_interpretation_needs_rank_two():
    with pytest.raises(LabelingError):
        interpret_axes(np.ones((3, 2)), cols(["memory", "cognition"]))


def test_orientation_signs_follow_severity():
    groups = ["memory", "cognition"]
    ia = interpret_axes(np.array([[0.1, 1.0], [1.0, 0.1]]), cols(groups))
    W = np.array([[0.0, 3.0], [1.0, 2.0], [2.0, 1.0], [3.0, 0.0]])
    sev = [0, 1, 1, 2]
    o = orient_axes(ia, W, sev).orientation
    # axis 0 (cognition) grows with severity, axis 1 (memory) shrinks
    assert (o.cognition_axis, o.memory_axis, o.cognition_sign, o.memory_sign) == (0, 1, 1.0, -1.0)
    xy = o.project(W)
    score = xy[:, 1] - xy[:, 0]
    assert np.allclose(score, o.score(W))
    assert np.all(np.diff(score) > 0)


def test_orientation_project_plot_identity():
    xy = np.array([[0.3, -0.2]])
    assert np.array_equal(Orientation().project(xy), xy)
    assert Orientation().score(xy)[0] == pytest.approx(-0.5)


def test_factorization_round_trip(tmp_path):
    f = nmf_fit(np.random.default_rng(0).random((6, 4)), 2, seed=9)
    save_factorization(f, tmp_path)
    g = load_factorization(tmp_path)
    assert np.array_equal(f.W, g.W) and np.array_equal(f.H, g.H)
    assert g.residual_history == f.residual_history and g.seed == 9
    assert "final_residual" in (tmp_path / "nmf_meta.txt").read_text()
