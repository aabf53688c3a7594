"""Graph-based fairness-aware label correction for tabular binary data."""

from gflc.config import PipelineConfig
from gflc.correction import CorrectionResult, gflc_correct
from gflc.dataset import Dataset, NoiseRecord, generate_synthetic, inject_group_noise, split
from gflc.evaluation import evaluate_correction, threshold_sweep

__version__ = "0.1.0"

__all__ = [
    "CorrectionResult",
    "Dataset",
    "NoiseRecord",
    "PipelineConfig",
    "evaluate_correction",
    "generate_synthetic",
    "gflc_correct",
    "inject_group_noise",
    "split",
    "threshold_sweep",
]
