"""Flip budgets, candidate selection and the end-to-end correction pipeline."""

from __future__ import annotations

import csv
import json
import logging
import math
import zlib
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from gflc.config import CONFIG_SCHEMA_VERSION, PipelineConfig
from gflc.dataset import Dataset, read_csv_rows
from gflc.errors import ConsistencyError, DegenerateLabelsError, DomainError, ShapeError
from gflc.estimator import ThresholdPair, fit_forest, predict_proba, select_threshold
from gflc.knn_graph import Graph, build_knn_graph
from gflc.ricci import iter_ricci_flow
from gflc.scoring import GroupStats, ScoreBreakdown, combined_scores, dp_ratio

logger = logging.getLogger(__name__)


def derive_seed(seed: int, stage: str) -> int:
    """Stable per-stage seed derived from the master seed."""
    return int(np.random.SeedSequence([int(seed), zlib.crc32(stage.encode())]).generate_state(1)[0])


@dataclass(frozen=True)
class FlipBudget:
    """Prevalence band and signed per-group quotas.

    ``quotas[g] > 0`` asks for that many negative-to-positive flips in group
    ``g``; ``quotas[g] < 0`` asks for positive-to-negative flips.
    """

    disparity_tolerance: float
    p_overall: float
    p_lower: float
    p_upper: float
    quotas: dict
    requested: dict
    k_plus: int
    k_minus: int
    warnings: tuple = ()

    @property
    def clamped_groups(self) -> tuple:
        return tuple(g for g in self.quotas if self.quotas[g] != self.requested[g])

    def to_dict(self) -> dict:
        return {
            "disparity_tolerance": self.disparity_tolerance,
            "p_overall": self.p_overall,
            "p_lower": self.p_lower,
            "p_upper": self.p_upper,
            "quotas": {str(g): q for g, q in self.quotas.items()},
            "requested": {str(g): q for g, q in self.requested.items()},
            "k_plus": self.k_plus,
            "k_minus": self.k_minus,
            "warnings": list(self.warnings),
        }


def flip_budget(labels, groups, disparity_tolerance: float = 0.05) -> FlipBudget:
    """Per-group flip quotas that pull every group's positive rate into
    ``[P (1 - D), P (1 + D)]`` where ``P`` is the overall positive rate.

    A group strictly below the band needs ``ceil(n_s (P_lower - rate_s))``
    negatives flipped up; strictly above it needs
    ``ceil(n_s (rate_s - P_upper))`` positives flipped down. The arithmetic
    is done in exact rationals (``D`` read as its decimal literal) so the
    ceilings are not perturbed by rounding.
    """
    stats = GroupStats.from_labels(labels, groups)
    d = Fraction(repr(float(disparity_tolerance)))
    p = Fraction(int(stats.positives.sum()), stats.n)
    lower, upper = p * (1 - d), p * (1 + d)

    quotas, requested, warnings = {}, {}, []
    for code, size, pos in zip(stats.codes.tolist(), stats.sizes.tolist(), stats.positives.tolist()):
        rate = Fraction(pos, size)
        if rate < lower:
            want = math.ceil(size * lower - pos)
            have = size - pos
        elif rate > upper:
            want = -math.ceil(pos - size * upper)
            have = pos
        else:
            want = have = 0
        requested[code] = want
        if abs(want) > have:
            warnings.append(f"group {code}: quota {abs(want)} exceeds {have} available candidates; clamped")
            logger.warning(warnings[-1])
        quotas[code] = int(math.copysign(min(abs(want), have), want)) if want else 0

    return FlipBudget(
        float(disparity_tolerance),
        float(p),
        float(lower),
        float(upper),
        quotas,
        requested,
        sum(q for q in quotas.values() if q > 0),
        -sum(q for q in quotas.values() if q < 0),
        tuple(warnings),
    )


@dataclass(frozen=True, eq=False)
class FlipSet:
    """Row positions to flip, split by direction."""

    to_positive: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    to_negative: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self):
        return len(self.to_positive) + len(self.to_negative)

    def indices(self) -> np.ndarray:
        return np.sort(np.r_[self.to_positive, self.to_negative]).astype(np.int64)

    def directions(self, n: int) -> list[str]:
        out = ["none"] * n
        for i in self.to_positive.tolist():
            out[i] = "neg2pos"
        for i in self.to_negative.tolist():
            out[i] = "pos2neg"
        return out


def select_flips(scores: ScoreBreakdown, labels, groups, budget: FlipBudget) -> FlipSet:
    """Top-scoring candidates of the needed polarity inside each quota group.

    Higher combined score means higher priority; equal scores go to the lower
    row position.
    """
    y = np.asarray(labels)
    g = np.asarray(groups)
    s = np.asarray(scores.combined)
    up, down = [], []
    for code, quota in budget.quotas.items():
        if quota == 0:
            continue
        polarity = 0 if quota > 0 else 1
        candidates = np.nonzero((g == code) & (y == polarity))[0]
        # lexsort: last key is primary
        ranked = candidates[np.lexsort((candidates, -s[candidates]))]
        if abs(quota) > len(ranked):
            logger.warning("group %s: quota %d exceeds %d candidates; clamped", code, abs(quota), len(ranked))
        chosen = ranked[: abs(quota)]
        (up if quota > 0 else down).append(chosen)
    as_array = lambda parts: np.sort(np.concatenate(parts)).astype(np.int64) if parts else np.zeros(0, np.int64)
    return FlipSet(as_array(up), as_array(down))


def apply_flips(labels, flips: FlipSet, check: bool = True) -> np.ndarray:
    """Return labels with ``y -> 1 - y`` on the flip set.

    With ``check`` the flip directions must agree with the current labels;
    without it the operation is a plain involution on the selected rows.
    """
    y = np.asarray(labels).astype(np.int64).copy()
    if check:
        if (y[flips.to_positive] != 0).any() or (y[flips.to_negative] != 1).any():
            raise ConsistencyError("flip direction disagrees with the current label")
    idx = flips.indices()
    y[idx] = 1 - y[idx]
    return y


@dataclass(frozen=True, eq=False)
class CorrectionResult:
    corrected_labels: np.ndarray
    flips: FlipSet
    budget: FlipBudget
    scores: ScoreBreakdown
    thresholds: ThresholdPair
    probabilities: np.ndarray
    diagnostics: dict
    graph: Graph | None = field(default=None, repr=False)
    flowed_graph: Graph | None = field(default=None, repr=False)
    curvatures: tuple = field(default=(), repr=False)

    def write_corrected_csv(self, path, source_csv) -> None:
        """Echo ``source_csv`` unchanged, adding ``corrected_label`` and ``flipped_direction``."""
        header, rows = read_csv_rows(source_csv)
        if len(rows) != len(self.corrected_labels):
            raise ShapeError("source CSV row count does not match the correction result")
        directions = self.flips.directions(len(rows))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([*header, "corrected_label", "flipped_direction"])
            for row, lab, dirn in zip(rows, self.corrected_labels.tolist(), directions):
                w.writerow([*row, lab, dirn])

    def write_diagnostics(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.diagnostics, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _group_rates(labels, groups) -> dict:
    stats = GroupStats.from_labels(labels, groups)
    return {str(c): float(r) for c, r in zip(stats.codes.tolist(), stats.rates.tolist())}


def gflc_correct(
    dataset: Dataset,
    config: PipelineConfig | None = None,
    seed: int | None = None,
    probabilities=None,
) -> CorrectionResult:
    """Correct ``dataset.labels`` towards demographic parity.

    Steps: fit the forest and choose the ambiguous band, build the k-NN
    graph, evolve its weights by Ricci flow, score every instance, size the
    per-group budget and flip the top candidates. Passing ``probabilities``
    skips the forest and uses the given scores instead.
    """
    config = config or PipelineConfig()
    if seed is not None and seed != config.seed:
        config = config.replace(seed=seed)
    y = dataset.labels
    if y.min() == y.max():
        raise DegenerateLabelsError("correction needs both labels present in the dataset")
    x = dataset.design_matrix(config.group_as_feature)

    degenerate = False
    probabilities_given = probabilities is not None
    if probabilities is None:
        model = fit_forest(
            x, y, config.tree_count, config.max_depth, derive_seed(config.seed, "forest"), n_jobs=config.threads
        )
        probabilities = predict_proba(model, x)
        degenerate = model.degenerate
    else:
        probabilities = np.asarray(probabilities, dtype=float)
        if probabilities.shape != (dataset.n,):
            raise ShapeError(f"expected {dataset.n} probabilities, got {probabilities.shape}")
        if not ((probabilities >= 0) & (probabilities <= 1)).all():
            raise DomainError("probabilities must lie in [0, 1]")
    thresholds = select_threshold(probabilities, y, config.fpr_penalty)

    graph = build_knn_graph(x, config.graph_config())
    curvatures = []
    flowed = graph
    for curvature, flowed in iter_ricci_flow(graph, config.flow_config()):
        curvatures.append(curvature)

    scores = combined_scores(flowed, y, dataset.groups, probabilities, thresholds, config.score_weights())
    budget = flip_budget(y, dataset.groups, config.disparity_tolerance)
    flips = select_flips(scores, y, dataset.groups, budget)
    corrected = apply_flips(y, flips)

    diagnostics = {
        "schema_version": CONFIG_SCHEMA_VERSION,
        "config": config.to_dict(),
        "n": dataset.n,
        "group_names": {str(c): dataset.group_names[c] for c in dataset.group_codes().tolist()},
        "dp_before": dp_ratio(y, dataset.groups),
        "dp_after": dp_ratio(corrected, dataset.groups),
        "group_rates_before": _group_rates(y, dataset.groups),
        "group_rates_after": _group_rates(corrected, dataset.groups),
        "thresholds": {"tau_plus": thresholds.tau_plus, "tau_minus": thresholds.tau_minus, "tau_raw": thresholds.tau_raw},
        "budget": budget.to_dict(),
        "flips": {"neg2pos": int(len(flips.to_positive)), "pos2neg": int(len(flips.to_negative))},
        "graph": {
            "nodes": graph.node_count,
            "edges": graph.edge_count,
            "min_degree": int(graph.degree().min()),
            "max_degree": int(graph.degree().max()),
            "weight_mean_before_flow": float(graph.weights.mean()) if graph.edge_count else None,
            "weight_mean_after_flow": float(flowed.weights.mean()) if flowed.edge_count else None,
        },
        "flow": [c.summary() for c in curvatures],
        "external_probabilities": probabilities_given,
        "model_degenerate": degenerate,
    }
    return CorrectionResult(
        corrected, flips, budget, scores, thresholds, probabilities, diagnostics, graph, flowed, tuple(curvatures)
    )
