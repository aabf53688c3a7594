import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gflc.errors import DegenerateLabelsError, ShapeError
from gflc.estimator import (
    LEAF,
    ForestModel,
    Tree,
    auc,
    fit_forest,
    predict_proba,
    roc_curve,
    select_threshold,
)


def pair_count_auc(p, y):
    """O(n^2) Mann-Whitney oracle."""
    pos = [a for a, t in zip(p, y) if t == 1]
    neg = [a for a, t in zip(p, y) if t == 0]
    wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in pos for b in neg)
    return wins / (len(pos) * len(neg))


def trapezoid_auc(p, y):
    curve = roc_curve(p, y)
    return float(np.trapezoid(curve.tpr, curve.fpr))


def test_auc_examples():
    assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.3] * 6, [1, 0, 1, 0, 0, 1]) == 0.5
    assert auc([0.8, 0.6, 0.4], [1, 0, 1]) == 0.5


def test_auc_requires_both_labels():
    with pytest.raises(DegenerateLabelsError):
        auc([0.1, 0.2], [1, 1])


@given(st.integers(0, 10**6))
def test_auc_matches_pair_count_with_ties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 60))
    p = rng.integers(0, 5, n) / 4.0  # heavy ties
    y = rng.integers(0, 2, n)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    assert auc(p, y) == pair_count_auc(p, y)


def test_auc_properties(rng):
    for _ in range(50):
        n = int(rng.integers(4, 80))
        p = rng.random(n)
        y = rng.integers(0, 2, n)
        y[:2] = [0, 1]
        a = auc(p, y)
        assert a == pytest.approx(trapezoid_auc(p, y), abs=1e-12)
        assert a + auc(p, 1 - y) == pytest.approx(1.0, abs=1e-12)
        assert auc(np.exp(3 * p) - 7, y) == a


def test_roc_perfect_separation():
    curve = roc_curve([0.9, 0.1], [1, 0])
    assert (1.0, 0.0) in zip(curve.tpr.tolist(), curve.fpr.tolist())


def test_roc_constant_scores():
    curve = roc_curve([0.4, 0.4, 0.4], [1, 0, 1])
    assert set(zip(curve.tpr.tolist(), curve.fpr.tolist())) == {(0.0, 0.0), (1.0, 1.0)}


def test_roc_structure(rng):
    p = rng.random(40)
    y = rng.integers(0, 2, 40)
    y[:2] = [0, 1]
    curve = roc_curve(p, y)
    assert (curve.tpr[0], curve.fpr[0]) == (0.0, 0.0)
    assert (curve.tpr[-1], curve.fpr[-1]) == (1.0, 1.0)
    assert (np.diff(curve.thresholds) < 0).all()
    assert (np.diff(curve.tpr) >= 0).all() and (np.diff(curve.fpr) >= 0).all()
    # each point agrees with direct counting at its threshold
    for t, tpr, fpr in curve.points():
        pred = p >= t
        assert tpr == (pred & (y == 1)).sum() / (y == 1).sum()
        assert fpr == (pred & (y == 0)).sum() / (y == 0).sum()


def test_roc_single_label():
    with pytest.raises(DegenerateLabelsError):
        roc_curve([0.1, 0.2], [0, 0])


def test_select_threshold_example():
    pair = select_threshold([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
    assert pair.tau_plus == 0.8
    assert pair.tau_minus == pytest.approx(0.2)
    assert pair.tau_minus == 1 - pair.tau_plus


def test_select_threshold_clamp():
    pair = select_threshold([0.35, 0.3, 0.1, 0.2], [1, 1, 0, 0])
    assert pair.tau_raw == 0.3
    assert (pair.tau_plus, pair.tau_minus) == (0.5, 0.5)


def test_select_threshold_single_label():
    with pytest.raises(DegenerateLabelsError):
        select_threshold([0.1, 0.2], [1, 1])


@given(st.integers(0, 10**6))
def test_select_threshold_maximises_objective(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 50))
    p = np.round(rng.random(n), 2)
    y = rng.integers(0, 2, n)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    pair = select_threshold(p, y)
    assert pair.tau_minus == 1 - pair.tau_plus
    assert pair.tau_minus <= pair.tau_plus

    def objective(t):
        pred = p >= t
        return (pred & (y == 1)).sum() / (y == 1).sum() - 5 * (pred & (y == 0)).sum() / (y == 0).sum()

    grid = np.r_[np.unique(p), np.nextafter(p.max(), 2), np.nextafter(p.min(), -1)]
    best = max(objective(t) for t in grid)
    assert objective(pair.tau_raw) == best
    # largest maximiser
    assert pair.tau_raw == max(t for t in grid if objective(t) == best)


def test_forest_separable_data():
    x = np.r_[np.linspace(-3, -0.1, 20), np.linspace(0.1, 3, 20)][:, None]
    y = np.r_[np.zeros(20), np.ones(20)]
    model = fit_forest(x, y, tree_count=10, max_depth=2, seed=0)
    assert auc(predict_proba(model, x), y) == 1.0


def test_forest_constant_model():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = fit_forest(np.random.default_rng(0).random((10, 2)), np.zeros(10))
    assert model.degenerate
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    np.testing.assert_array_equal(predict_proba(model, np.zeros((3, 2))), 0.0)


def test_forest_determinism(rng):
    x = rng.normal(size=(80, 3))
    y = (x[:, 0] + 0.5 * rng.normal(size=80) > 0).astype(int)
    a = fit_forest(x, y, 5, 4, seed=3)
    b = fit_forest(x, y, 5, 4, seed=3)
    for ta, tb in zip(a.trees, b.trees):
        for field in ("feature", "threshold", "left", "right", "value"):
            np.testing.assert_array_equal(getattr(ta, field), getattr(tb, field))


def test_forest_threads_match_serial(rng):
    x = rng.normal(size=(60, 2))
    y = (x[:, 1] > 0).astype(int)
    serial = predict_proba(fit_forest(x, y, 6, 3, seed=1), x)
    threaded = predict_proba(fit_forest(x, y, 6, 3, seed=1, n_jobs=3), x)
    np.testing.assert_array_equal(serial, threaded)


def test_forest_structure_and_mean(rng):
    x = rng.normal(size=(100, 3))
    y = (x.sum(1) + rng.normal(size=100) > 0).astype(int)
    model = fit_forest(x, y, 7, 3, seed=2)
    assert model.tree_count == 7
    per_tree = np.array([t.predict(x) for t in model.trees])
    np.testing.assert_allclose(predict_proba(model, x), per_tree.mean(0), rtol=0, atol=1e-15)
    for t in model.trees:
        assert t.depth() <= 3
        assert ((t.value >= 0) & (t.value <= 1)).all()
        internal = t.feature != LEAF
        assert (t.left[internal] != LEAF).all() and (t.right[internal] != LEAF).all()
    probs = predict_proba(model, rng.normal(size=(30, 3)) * 10)
    assert ((probs >= 0) & (probs <= 1)).all()


def test_single_tree_leaf_fraction():
    tree = Tree(
        feature=np.array([0, LEAF, LEAF]),
        threshold=np.array([0.0, 0.0, 0.0]),
        left=np.array([1, LEAF, LEAF]),
        right=np.array([2, LEAF, LEAF]),
        value=np.array([0.5, 0.25, 0.75]),
    )
    model = ForestModel((tree,), n_features=1, max_depth=1, seed=0)
    np.testing.assert_array_equal(predict_proba(model, [[1.0], [-1.0]]), [0.75, 0.25])


def test_predict_shape_error(rng):
    model = fit_forest(rng.normal(size=(20, 2)), np.r_[np.zeros(10), np.ones(10)], 2, 2)
    with pytest.raises(ShapeError):
        predict_proba(model, np.zeros((3, 3)))


def test_no_signal_auc_near_half():
    from gflc.dataset import generate_synthetic, split

    ds = generate_synthetic(2000, 2, class_separation=0.0, positive_rate=0.5, seed=5)
    train, _, test = split(ds, (0.5, 0.25, 0.25), seed=5)
    model = fit_forest(train.features, train.labels, 20, 4, seed=0)
    assert abs(auc(predict_proba(model, test.features), test.labels) - 0.5) <= 0.1
