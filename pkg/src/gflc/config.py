"""The single hyperparameter document shared by the library and the CLI."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from gflc.errors import ConfigError
from gflc.estimator import FPR_PENALTY
from gflc.knn_graph import EPS_FLOOR, GraphConfig
from gflc.ricci import FlowConfig
from gflc.scoring import ScoreWeights

CONFIG_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class PipelineConfig:
    k: int = 10
    alpha: float = 0.2
    beta: float = 0.6
    gamma: float = 0.2
    eta: float = 0.1
    ricci_iterations: int = 2
    disparity_tolerance: float = 0.05
    eps_floor: float = EPS_FLOOR
    tree_count: int = 50
    max_depth: int = 6
    fpr_penalty: float = FPR_PENALTY
    group_as_feature: bool = False
    symmetrize: str = "union"
    threshold_start: float = 0.0
    threshold_stop: float = 0.6
    threshold_step: float = 0.01
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        # sub-configs validate their own fields
        self.graph_config()
        self.flow_config()
        self.score_weights()
        if not 0.0 <= self.disparity_tolerance <= 1.0:
            raise ConfigError(f"disparity_tolerance must lie in [0, 1], got {self.disparity_tolerance}")
        if self.tree_count < 1:
            raise ConfigError(f"tree_count must be >= 1, got {self.tree_count}")
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if not self.threshold_step > 0 or self.threshold_stop < self.threshold_start:
            raise ConfigError("threshold grid needs step > 0 and stop >= start")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def graph_config(self) -> GraphConfig:
        return GraphConfig(k=self.k, eps_floor=self.eps_floor, symmetrize=self.symmetrize)

    def flow_config(self) -> FlowConfig:
        return FlowConfig(eta=self.eta, iterations=self.ricci_iterations, eps_floor=self.eps_floor)

    def score_weights(self) -> ScoreWeights:
        return ScoreWeights(self.alpha, self.beta, self.gamma)

    def threshold_grid(self) -> np.ndarray:
        count = int(round((self.threshold_stop - self.threshold_start) / self.threshold_step)) + 1
        return np.round(self.threshold_start + self.threshold_step * np.arange(count), 10)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        # accept a diagnostics document that embeds the resolved config
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        coerced = {}
        for name, value in data.items():
            default = known[name].default
            try:
                if isinstance(default, bool):
                    if not isinstance(value, bool):
                        raise TypeError
                    coerced[name] = value
                elif isinstance(default, int):
                    if isinstance(value, bool) or float(value) != int(value):
                        raise TypeError
                    coerced[name] = int(value)
                elif isinstance(default, float):
                    coerced[name] = float(value)
                else:
                    coerced[name] = str(value)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value for {name}: {value!r}") from None
        return cls(**coerced)

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)
