"""Performance and fairness metrics over a decision-threshold sweep, and the
noisy-vs-corrected comparison harness."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from gflc.config import PipelineConfig
from gflc.correction import CorrectionResult, derive_seed
from gflc.dataset import Dataset, NoiseRecord
from gflc.errors import DomainError, ShapeError
from gflc.estimator import auc, fit_forest, predict_proba

REPORT_COLUMNS = ("threshold", "TPR", "TNR", "FPR", "FNR", "precision", "pprev_ratio", "eq_opp", "eq_odds")


def _safe_div(num, den):
    """``num / den`` or ``None`` when the denominator is zero."""
    return None if den == 0 else num / den


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_at_threshold(probabilities, labels, threshold: float) -> ConfusionCounts:
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(labels).astype(bool)
    if p.shape != y.shape:
        raise ShapeError("probabilities and labels differ in shape")
    pred = p >= threshold
    return ConfusionCounts(
        tp=int((pred & y).sum()),
        fp=int((pred & ~y).sum()),
        tn=int((~pred & ~y).sum()),
        fn=int((~pred & y).sum()),
        threshold=float(threshold),
    )


def performance_metrics(counts: ConfusionCounts) -> dict:
    """TPR, TNR, FPR, FNR and precision; ``None`` marks a 0/0 ratio."""
    c = counts
    return {
        "TPR": _safe_div(c.tp, c.tp + c.fn),
        "TNR": _safe_div(c.tn, c.tn + c.fp),
        "FPR": _safe_div(c.fp, c.fp + c.tn),
        "FNR": _safe_div(c.fn, c.fn + c.tp),
        "precision": _safe_div(c.tp, c.tp + c.fp),
    }


def _max_gap(values) -> float:
    defined = [v for v in values if v is not None]
    if len(defined) < 2:
        return 0.0
    return float(max(defined) - min(defined))


def fairness_metrics(probabilities, labels, groups, threshold: float) -> dict:
    """Predicted-prevalence ratio and the equal-opportunity / equalized-odds gaps.

    Gaps are the largest pairwise difference across groups; groups whose TPR
    (or FPR) is undefined are left out.
    """
    p = np.asarray(probabilities, dtype=float)
    y = np.asarray(labels).astype(np.int64)
    g = np.asarray(groups)
    if not (p.shape == y.shape == g.shape):
        raise ShapeError("probabilities, labels and groups differ in shape")
    codes = np.unique(g)
    if len(codes) == 0:
        raise DomainError("no groups to compare")
    prevalence, tprs, fprs = [], [], []
    for code in codes:
        mask = g == code
        c = confusion_at_threshold(p[mask], y[mask], threshold)
        prevalence.append((c.tp + c.fp) / c.total)
        tprs.append(_safe_div(c.tp, c.tp + c.fn))
        fprs.append(_safe_div(c.fp, c.fp + c.tn))
    top = max(prevalence)
    pprev = 1.0 if top == 0 else min(prevalence) / top
    eq_opp = _max_gap(tprs)
    return {
        "pprev_ratio": float(pprev),
        "eq_opp": eq_opp,
        "eq_odds": max(eq_opp, _max_gap(fprs)),
        "group_prevalence": {int(c): float(v) for c, v in zip(codes.tolist(), prevalence)},
    }


@dataclass(frozen=True)
class ThresholdReportRow:
    threshold: float
    TPR: float | None
    TNR: float | None
    FPR: float | None
    FNR: float | None
    precision: float | None
    pprev_ratio: float
    eq_opp: float
    eq_odds: float

    def cells(self) -> list[str]:
        return ["" if v is None else repr(float(v)) for v in (getattr(self, c) for c in REPORT_COLUMNS)]


def default_grid() -> np.ndarray:
    return PipelineConfig().threshold_grid()


def threshold_sweep(probabilities, labels, groups, grid=None) -> list[ThresholdReportRow]:
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if len(grid) == 0:
        raise DomainError("threshold grid is empty")
    if (np.diff(grid) < 0).any():
        raise DomainError("threshold grid must be sorted ascending")
    rows = []
    for t in grid.tolist():
        perf = performance_metrics(confusion_at_threshold(probabilities, labels, t))
        fair = fairness_metrics(probabilities, labels, groups, t)
        rows.append(
            ThresholdReportRow(
                threshold=t,
                **perf,
                pprev_ratio=fair["pprev_ratio"],
                eq_opp=fair["eq_opp"],
                eq_odds=fair["eq_odds"],
            )
        )
    return rows


def write_sweep_csv(path, rows: list[ThresholdReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for row in rows:
            w.writerow(row.cells())


@dataclass(frozen=True)
class ComparisonReport:
    auc_noisy: float
    auc_corrected: float
    sweep_noisy: list = field(repr=False)
    sweep_corrected: list = field(repr=False)
    restoration_accuracy: float | None
    seed: int
    flipped_in_training: int = 0
    corrections: int = 0

    def summary(self) -> dict:
        return {
            "auc_noisy": self.auc_noisy,
            "auc_corrected": self.auc_corrected,
            "restoration_accuracy": self.restoration_accuracy,
            "seed": self.seed,
            "noisy_instances": self.flipped_in_training,
            "corrections": self.corrections,
        }

    def row_at(self, which: str, threshold: float) -> ThresholdReportRow:
        rows = self.sweep_noisy if which == "noisy" else self.sweep_corrected
        return min(rows, key=lambda r: abs(r.threshold - threshold))

    def write(self, out_dir) -> None:
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(out / "sweep_noisy.csv", self.sweep_noisy)
        write_sweep_csv(out / "sweep_corrected.csv", self.sweep_corrected)
        with open(out / "summary.json", "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def fit_and_predict(train: Dataset, labels, test: Dataset, config: PipelineConfig, seed: int) -> np.ndarray:
    model = fit_forest(
        train.design_matrix(config.group_as_feature),
        labels,
        config.tree_count,
        config.max_depth,
        seed,
        n_jobs=config.threads,
    )
    return predict_proba(model, test.design_matrix(config.group_as_feature))


def evaluate_correction(
    noise_record: NoiseRecord,
    corrected,
    test: Dataset,
    config: PipelineConfig | None = None,
    seed: int | None = None,
) -> ComparisonReport:
    """Train once on the noisy labels and once on the corrected labels, then
    score both models on the clean test set.

    ``corrected`` is a :class:`CorrectionResult` or a plain label vector. Both
    models share one seed, so identical label vectors give identical models.
    """
    config = config or PipelineConfig()
    seed = config.seed if seed is None else seed
    labels = corrected.corrected_labels if isinstance(corrected, CorrectionResult) else np.asarray(corrected)
    train = noise_record.base
    if len(labels) != train.n:
        raise ShapeError("corrected labels do not match the training set")
    overlap = set(map(str, train.ids.tolist())) & set(map(str, test.ids.tolist()))
    if overlap:
        raise DomainError(f"test set shares {len(overlap)} row ids with the training set")

    model_seed = derive_seed(seed, "evaluation-model")
    p_noisy = fit_and_predict(train, train.labels, test, config, model_seed)
    p_corr = fit_and_predict(train, labels, test, config, model_seed)
    grid = config.threshold_grid()

    mask = noise_record.flip_mask
    restoration = float((labels[mask] == noise_record.clean_labels[mask]).mean()) if mask.any() else None
    return ComparisonReport(
        auc_noisy=auc(p_noisy, test.labels),
        auc_corrected=auc(p_corr, test.labels),
        sweep_noisy=threshold_sweep(p_noisy, test.labels, test.groups, grid),
        sweep_corrected=threshold_sweep(p_corr, test.labels, test.groups, grid),
        restoration_accuracy=restoration,
        seed=seed,
        flipped_in_training=int(mask.sum()),
        corrections=int((labels != train.labels).sum()),
    )


def aggregate_reports(reports: list[ComparisonReport]) -> dict:
    """Mean/median/std of the AUC pair and restoration accuracy across seeds,
    plus the per-threshold mean of every sweep metric."""
    if not reports:
        raise DomainError("nothing to aggregate")

    def stats(values):
        v = np.asarray([x for x in values if x is not None], dtype=float)
        if len(v) == 0:
            return None
        return {"mean": float(v.mean()), "median": float(np.median(v)), "std": float(v.std()), "count": int(len(v))}

    def mean_sweep(which):
        tables = [r.sweep_noisy if which == "noisy" else r.sweep_corrected for r in reports]
        out = []
        for rows in zip(*tables):
            entry = {"threshold": rows[0].threshold}
            for col in REPORT_COLUMNS[1:]:
                entry[col] = (stats(getattr(r, col) for r in rows) or {}).get("mean")
            out.append(entry)
        return out

    return {
        "seeds": [r.seed for r in reports],
        "auc_noisy": stats(r.auc_noisy for r in reports),
        "auc_corrected": stats(r.auc_corrected for r in reports),
        "auc_improvement": stats(r.auc_corrected - r.auc_noisy for r in reports),
        "restoration_accuracy": stats(r.restoration_accuracy for r in reports),
        "sweep_noisy_mean": mean_sweep("noisy"),
        "sweep_corrected_mean": mean_sweep("corrected"),
    }

