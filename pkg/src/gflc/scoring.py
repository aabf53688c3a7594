"""Per-instance correction score: margin, Laplacian disagreement and
demographic-parity gain, combined linearly."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from gflc.errors import ConfigError, DomainError, ShapeError
from gflc.estimator import ThresholdPair
from gflc.knn_graph import Graph


@dataclass(frozen=True)
class ScoreWeights:
    alpha: float = 0.2
    beta: float = 0.6
    gamma: float = 0.2

    def __post_init__(self):
        w = (self.alpha, self.beta, self.gamma)
        if min(w) < 0:
            raise ConfigError(f"score weights must be non-negative, got {w}")
        if max(w) == 0:
            raise ConfigError("at least one score weight must be positive")


@dataclass(frozen=True, eq=False)
class ScoreBreakdown:
    margin_term: np.ndarray
    laplacian_term: np.ndarray
    fairness_term: np.ndarray
    combined: np.ndarray

    def to_csv(self, path, ids, labels, groups, group_names=None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "margin_term", "laplacian_term", "delta_dp", "score", "label", "group"])
            for i in range(len(self.combined)):
                g = int(groups[i])
                w.writerow(
                    [
                        ids[i],
                        repr(float(self.margin_term[i])),
                        repr(float(self.laplacian_term[i])),
                        repr(float(self.fairness_term[i])),
                        repr(float(self.combined[i])),
                        int(labels[i]),
                        group_names[g] if group_names else g,
                    ]
                )


@dataclass(frozen=True, eq=False)
class GroupStats:
    """Sizes and positive counts per group code, aligned with ``codes``."""

    codes: np.ndarray
    sizes: np.ndarray
    positives: np.ndarray

    @classmethod
    def from_labels(cls, labels, groups) -> "GroupStats":
        y = np.asarray(labels).astype(np.int64)
        g = np.asarray(groups).astype(np.int64)
        if y.shape != g.shape:
            raise ShapeError("labels and groups differ in length")
        if len(g) == 0:
            raise DomainError("no instances")
        codes, inverse = np.unique(g, return_inverse=True)
        sizes = np.bincount(inverse)
        positives = np.bincount(inverse, weights=y).astype(np.int64)
        return cls(codes, sizes, positives)

    @property
    def rates(self) -> np.ndarray:
        return self.positives / self.sizes

    @property
    def n(self) -> int:
        return int(self.sizes.sum())

    def index(self, code: int) -> int:
        pos = int(np.searchsorted(self.codes, code))
        if pos >= len(self.codes) or self.codes[pos] != code:
            raise DomainError(f"group {code} has no instances")
        return pos


def margin(p, thresholds: ThresholdPair):
    """Distance of ``p`` outside the ambiguous band ``[tau_minus, tau_plus]``."""
    p = np.asarray(p, dtype=float)
    out = np.where(
        p >= thresholds.tau_plus,
        p - thresholds.tau_plus,
        np.where(p <= thresholds.tau_minus, thresholds.tau_minus - p, 0.0),
    )
    return out if out.ndim else float(out)


def margin_term(p, thresholds: ThresholdPair):
    """``1 - margin``: large for uncertain predictions."""
    return 1.0 - margin(p, thresholds)


def laplacian_term(graph: Graph, labels, i: int) -> float:
    """``sum_j w_ij (y_i - y_j)^2`` over the neighbours of ``i``.

    Summed with ``math.fsum`` so the value does not depend on neighbour order.
    """
    y = np.asarray(labels)
    nbrs = graph.neighbors(i)
    w = graph.weights[graph.incident_edges(i)]
    return math.fsum((w * (y[i] - y[nbrs]) ** 2).tolist())


def laplacian_terms(graph: Graph, labels) -> np.ndarray:
    """:func:`laplacian_term` for every node at once."""
    y = np.asarray(labels, dtype=float)
    if len(y) != graph.node_count:
        raise ShapeError(f"graph has {graph.node_count} nodes but {len(y)} labels were given")
    a, b = graph.edges[:, 0], graph.edges[:, 1]
    contrib = graph.weights * (y[a] - y[b]) ** 2
    return np.bincount(a, weights=contrib, minlength=len(y)) + np.bincount(b, weights=contrib, minlength=len(y))


def _ratio(rates: np.ndarray) -> float:
    top = rates.max()
    if top == 0:
        return 1.0
    return float(rates.min() / top)


def dp_ratio(labels, groups) -> float:
    """Min over max of per-group positive rates; 1 when nobody is positive."""
    return _ratio(GroupStats.from_labels(labels, groups).rates)


def delta_dp(stats: GroupStats, group: int, label: int) -> float:
    """Change in :func:`dp_ratio` if one instance of ``group`` with ``label`` flips."""
    g = stats.index(group)
    positives = stats.positives.copy()
    positives[g] += 1 - 2 * int(label)
    return _ratio(positives / stats.sizes) - _ratio(stats.rates)


def delta_dp_all(labels, groups) -> np.ndarray:
    """:func:`delta_dp` for every instance; one evaluation per (group, label) pair."""
    y = np.asarray(labels).astype(np.int64)
    g = np.asarray(groups).astype(np.int64)
    stats = GroupStats.from_labels(y, g)
    table = np.array([[delta_dp(stats, code, lab) for lab in (0, 1)] for code in stats.codes])
    return table[np.searchsorted(stats.codes, g), y]


def combined_scores(
    graph: Graph,
    labels,
    groups,
    probabilities,
    thresholds: ThresholdPair,
    weights: ScoreWeights | None = None,
) -> ScoreBreakdown:
    weights = weights or ScoreWeights()
    y = np.asarray(labels)
    g = np.asarray(groups)
    p = np.asarray(probabilities, dtype=float)
    n = graph.node_count
    if not (len(y) == len(g) == len(p) == n):
        raise ShapeError(
            f"length mismatch: graph={n}, labels={len(y)}, groups={len(g)}, probabilities={len(p)}"
        )
    m = np.atleast_1d(margin_term(p, thresholds))
    lap = laplacian_terms(graph, y)
    fair = delta_dp_all(y, g)
    combined = weights.alpha * m + weights.beta * lap + weights.gamma * fair
    return ScoreBreakdown(m, lap, fair, combined)
