"""A small bagged decision-tree ensemble plus ROC/AUC utilities.

The forest supplies the per-instance probabilities used by the margin term;
the ROC helpers pick the threshold pair that bounds the ambiguous region.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from gflc.errors import DegenerateLabelsError, ShapeError

logger = logging.getLogger(__name__)

LEAF = -1


@dataclass(frozen=True, eq=False)
class Tree:
    """Array-encoded binary tree; ``feature[i] == LEAF`` marks a leaf.

    Internal node ``i`` sends ``x[feature[i]] <= threshold[i]`` to ``left[i]``.
    ``value[i]`` is the positive fraction of training rows reaching node ``i``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row of ``x``."""
        node = np.zeros(len(x), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = x[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]


def _best_split(x: np.ndarray, y: np.ndarray) -> tuple[int, float, float] | None:
    """Greedy Gini split over all features: ``(feature, threshold, impurity)``.

    Thresholds are midpoints between consecutive distinct values. Returns
    ``None`` when no split lowers the weighted impurity.
    """
    n = len(y)
    total_pos = y.sum()
    parent = n * (1 - (total_pos / n) ** 2 - (1 - total_pos / n) ** 2)
    best = None
    best_imp = parent - 1e-12
    for j in range(x.shape[1]):
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        valid = xs[1:] > xs[:-1]
        if not valid.any():
            continue
        n_left = np.arange(1, n)
        pos_left = np.cumsum(ys)[:-1]
        n_right = n - n_left
        pos_right = total_pos - pos_left
        p_l = pos_left / n_left
        p_r = pos_right / n_right
        # n * gini = 2 n p (1 - p)
        imp = 2 * n_left * p_l * (1 - p_l) + 2 * n_right * p_r * (1 - p_r)
        imp = np.where(valid, imp, np.inf)
        k = int(np.argmin(imp))
        if imp[k] < best_imp:
            best_imp = imp[k]
            best = (j, 0.5 * (xs[k] + xs[k + 1]), float(imp[k]))
    return best


def fit_tree(x: np.ndarray, y: np.ndarray, max_depth: int, min_samples_split: int = 2) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[rows].mean()))
        return len(feature) - 1

    stack = [(new_node(np.arange(len(y))), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        ys = y[rows]
        if depth >= max_depth or len(rows) < min_samples_split or ys.min() == ys.max():
            continue
        found = _best_split(x[rows], ys)
        if found is None:
            continue
        j, t, _ = found
        mask = x[rows, j] <= t
        feature[node], threshold[node] = j, t
        left[node] = new_node(rows[mask])
        right[node] = new_node(rows[~mask])
        stack.append((right[node], rows[~mask], depth + 1))
        stack.append((left[node], rows[mask], depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
    )


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[Tree, ...]
    n_features: int
    max_depth: int
    seed: int
    constant: float | None = None  # set when trained on a single class

    @property
    def tree_count(self) -> int:
        return len(self.trees)

    @property
    def degenerate(self) -> bool:
        return self.constant is not None


def fit_forest(
    features,
    labels,
    tree_count: int = 50,
    max_depth: int = 6,
    seed: int = 0,
    n_jobs: int = 1,
) -> ForestModel:
    """Bootstrap-aggregated Gini trees (no feature subsampling).

    Each tree sees ``n`` rows drawn with replacement, using a child seed
    spawned from ``seed``. Single-class input yields a constant model and a
    ``RuntimeWarning``.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(labels).astype(float)
    if len(x) != len(y):
        raise ShapeError(f"features have {len(x)} rows but labels have {len(y)}")
    if len(y) < 2:
        raise ShapeError("need at least two training rows")
    if y.min() == y.max():
        warnings.warn("single-class training labels; fitting a constant model", RuntimeWarning, stacklevel=2)
        return ForestModel((), x.shape[1], max_depth, seed, constant=float(y[0]))

    children = np.random.SeedSequence(seed).spawn(tree_count)

    def grow(child):
        rows = np.random.default_rng(child).integers(0, len(y), len(y))
        return fit_tree(x[rows], y[rows], max_depth)

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            trees = tuple(pool.map(grow, children))
    else:
        trees = tuple(grow(c) for c in children)
    return ForestModel(trees, x.shape[1], max_depth, seed)


def predict_proba(model: ForestModel, features) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {x.shape[1]}")
    if model.degenerate:
        return np.full(len(x), model.constant)
    return np.mean([t.predict(x) for t in model.trees], axis=0)


# ----------------------------------------------------------------------------
# ROC analysis


def _check_binary(probabilities, labels, what: str):
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(labels).astype(np.int64)
    if p.shape != y.shape:
        raise ShapeError(f"probabilities {p.shape} and labels {y.shape} differ in shape")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise DegenerateLabelsError(f"{what} is undefined unless both labels are present")
    return p, y


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray = field(repr=False)
    tpr: np.ndarray = field(repr=False)
    fpr: np.ndarray = field(repr=False)

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.tpr.tolist(), self.fpr.tolist()))


def roc_curve(probabilities, labels) -> RocCurve:
    """ROC points for the rule ``p >= threshold``, thresholds decreasing.

    Candidate thresholds are the distinct probabilities plus one sentinel just
    above the maximum (giving the (0, 0) corner) and one just below the
    minimum (the (1, 1) corner).
    """
    p, y = _check_binary(probabilities, labels, "ROC curve")
    uniq = np.unique(p)[::-1]
    thresholds = np.r_[np.nextafter(uniq[0], np.inf), uniq, np.nextafter(uniq[-1], -np.inf)]
    # positives/negatives with p >= t, via counts at or above each distinct value
    order = np.argsort(-p, kind="stable")
    ps, ys = p[order], y[order]
    tp_cum = np.cumsum(ys)
    fp_cum = np.cumsum(1 - ys)
    last = np.searchsorted(-ps, -uniq, side="right") - 1
    tp = np.r_[0, tp_cum[last], tp_cum[-1]]
    fp = np.r_[0, fp_cum[last], fp_cum[-1]]
    return RocCurve(thresholds, tp / tp_cum[-1], fp / fp_cum[-1])


def auc(probabilities, labels) -> float:
    """Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly, ties 1/2."""
    p, y = _check_binary(probabilities, labels, "AUC")
    ranks = rankdata(p)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class ThresholdPair:
    """Ambiguous band ``[tau_minus, tau_plus]`` with ``tau_minus = 1 - tau_plus``.

    ``tau_raw`` keeps the objective's argmax before clamping into [0.5, 1].
    """

    tau_plus: float
    tau_minus: float
    tau_raw: float = float("nan")

    @classmethod
    def from_tau(cls, tau: float) -> "ThresholdPair":
        clamped = min(max(float(tau), 0.5), 1.0)
        return cls(clamped, 1.0 - clamped, float(tau))


FPR_PENALTY = 5.0


def threshold_objective(curve: RocCurve, penalty: float = FPR_PENALTY) -> np.ndarray:
    return curve.tpr - penalty * curve.fpr


def select_threshold(probabilities, labels, penalty: float = FPR_PENALTY) -> ThresholdPair:
    """Maximise ``TPR - 5 FPR`` over the ROC thresholds; ties go to the largest threshold."""
    curve = roc_curve(probabilities, labels)
    objective = threshold_objective(curve, penalty)
    # thresholds are decreasing, so the first argmax is the largest threshold
    best = int(np.argmax(objective))
    return ThresholdPair.from_tau(curve.thresholds[best])
