"""Forman-Ricci edge curvature and the discrete Ricci flow on edge weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from gflc.errors import ConfigError
from gflc.knn_graph import EPS_FLOOR, Graph


@dataclass(frozen=True)
class FlowConfig:
    eta: float = 0.1
    iterations: int = 2
    eps_floor: float = EPS_FLOOR

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigError(f"eta must be > 0, got {self.eta}")
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if not self.eps_floor > 0:
            raise ConfigError(f"eps_floor must be > 0, got {self.eps_floor}")


@dataclass(frozen=True, eq=False)
class CurvatureMap:
    """Curvature per edge, aligned with ``graph.edges``."""

    values: np.ndarray
    iteration: int = 0

    def summary(self) -> dict:
        v = self.values
        if len(v) == 0:
            return {"iteration": self.iteration, "edges": 0}
        return {
            "iteration": self.iteration,
            "edges": int(len(v)),
            "min": float(v.min()),
            "max": float(v.max()),
            "mean": float(v.mean()),
            "negative_fraction": float((v < 0).mean()),
            "positive_fraction": float((v > 0).mean()),
        }

    def to_text(self, graph: Graph) -> str:
        """``i j F`` per line, in the same order as the graph's edge list."""
        return "".join(f"{i} {j} {f!r}\n" for (i, j), f in zip(graph.edges.tolist(), self.values.tolist()))


def _other_incident(graph: Graph, node: int, exclude_edge: int) -> np.ndarray:
    inc = graph.incident_edges(node)
    return inc[inc != exclude_edge]


def forman_full(graph: Graph, u: int, v: int) -> float:
    """Weighted Forman curvature with vertex weights.

    ``w_uv * (w_u/w_uv + w_v/w_uv - sum_x w_u/sqrt(w_uv w_ux) - sum_x w_v/sqrt(w_uv w_vx))``
    where each sum skips the opposite endpoint.
    """
    e = graph.edge_id(u, v)
    w = graph.weights[e]
    wu, wv = graph.vertex_weights[u], graph.vertex_weights[v]
    wux = graph.weights[_other_incident(graph, u, e)]
    wvx = graph.weights[_other_incident(graph, v, e)]
    inner = wu / w + wv / w - np.sum(wu / np.sqrt(w * wux)) - np.sum(wv / np.sqrt(w * wvx))
    return float(w * inner)


def forman_simplified(graph: Graph, u: int, v: int) -> float:
    """Edge-only Forman curvature ``w_uv * (1 - (sum_u + sum_v) / 2)``.

    ``sum_u`` adds ``sqrt(w_uv / w_ux)`` over the other neighbours ``x`` of
    ``u``; ``sum_v`` likewise for ``v``. Positive when the edge is heavy
    relative to its neighbourhood, negative for bottleneck edges.
    """
    e = graph.edge_id(u, v)
    w = graph.weights[e]
    sum_u = np.sum(np.sqrt(w / graph.weights[_other_incident(graph, u, e)]))
    sum_v = np.sum(np.sqrt(w / graph.weights[_other_incident(graph, v, e)]))
    return float(w * (1.0 - 0.5 * (sum_u + sum_v)))


def _adjacent_edge_pairs(graph: Graph) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (e, f), e != f, of edges sharing an endpoint.

    Two distinct edges of a simple graph share at most one endpoint, so each
    pair appears once.
    """
    deg = graph.degree()
    node_of_slot = np.repeat(np.arange(graph.node_count), deg)
    # for every slot s (an incident edge at node u), pair it with every slot at u
    reps = deg[node_of_slot]
    left = np.repeat(np.arange(len(node_of_slot)), reps)
    offsets = np.arange(len(left)) - np.repeat(np.cumsum(reps) - reps, reps)
    right = graph.indptr[node_of_slot[left]] + offsets
    e = graph.edge_index[left]
    f = graph.edge_index[right]
    keep = e != f
    return e[keep], f[keep]


def curvature_all(graph: Graph, iteration: int = 0, _pairs=None) -> CurvatureMap:
    """Simplified curvature of every edge from one weight snapshot."""
    e, f = _pairs if _pairs is not None else _adjacent_edge_pairs(graph)
    w = graph.weights
    neighbourhood = np.bincount(e, weights=np.sqrt(w[e] / w[f]), minlength=graph.edge_count)
    return CurvatureMap(w * (1.0 - 0.5 * neighbourhood), iteration)


def ricci_flow_step(graph: Graph, config: FlowConfig, iteration: int = 0, _pairs=None) -> Graph:
    """One simultaneous update ``w <- max(w + eta * F, eps_floor)``."""
    curvature = curvature_all(graph, iteration, _pairs)
    return graph.with_weights(np.maximum(graph.weights + config.eta * curvature.values, config.eps_floor))


def iter_ricci_flow(graph: Graph, config: FlowConfig) -> Iterator[tuple[CurvatureMap, Graph]]:
    """Yield ``(curvature at step t, graph after step t)`` for each iteration."""
    pairs = _adjacent_edge_pairs(graph)  # topology never changes
    for t in range(config.iterations):
        curvature = curvature_all(graph, t, pairs)
        graph = graph.with_weights(np.maximum(graph.weights + config.eta * curvature.values, config.eps_floor))
        yield curvature, graph


def ricci_flow(graph: Graph, config: FlowConfig | None = None) -> Graph:
    config = config or FlowConfig()
    out = graph.with_weights(graph.weights.copy())
    for _, out in iter_ricci_flow(out, config):
        pass
    return out
