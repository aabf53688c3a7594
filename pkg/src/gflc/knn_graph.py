"""Undirected inverse-distance-weighted k-nearest-neighbour graphs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from gflc.errors import ConfigError, DomainError

EPS_FLOOR = 1e-8


@dataclass(frozen=True)
class GraphConfig:
    k: int = 10
    eps_floor: float = EPS_FLOOR
    symmetrize: str = "union"
    chunk_size: int = 512

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.eps_floor > 0:
            raise ConfigError(f"eps_floor must be > 0, got {self.eps_floor}")
        if self.symmetrize not in ("union", "mutual"):
            raise ConfigError(f"symmetrize must be 'union' or 'mutual', got {self.symmetrize!r}")


class Graph:
    """Weighted undirected simple graph stored as an edge list plus CSR adjacency.

    Edges are unique pairs ``(i, j)`` with ``i < j`` in lexicographic order.
    ``indptr/indices/edge_index`` give, for node ``u``, its neighbours
    ``indices[indptr[u]:indptr[u+1]]`` (ascending) and the row in ``edges`` of
    each incident edge. Instances are treated as immutable; use
    :meth:`with_weights` to derive a reweighted copy with the same topology.
    """

    def __init__(self, node_count, edges, weights, vertex_weights=None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if len(edges) != len(weights):
            raise DomainError("one weight per edge required")
        if len(edges):
            if (edges[:, 0] == edges[:, 1]).any():
                raise DomainError("self-loops are not allowed")
            if edges.min() < 0 or edges.max() >= node_count:
                raise DomainError("edge endpoint out of range")
        if not (np.isfinite(weights).all() and (weights > 0).all()):
            raise DomainError("edge weights must be finite and strictly positive")

        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        order = np.lexsort((hi, lo))
        lo, hi, weights = lo[order], hi[order], weights[order]
        if len(lo) > 1 and ((np.diff(lo) == 0) & (np.diff(hi) == 0)).any():
            raise DomainError("duplicate edge")

        if vertex_weights is None:
            vertex_weights = np.ones(node_count)
        vertex_weights = np.asarray(vertex_weights, dtype=float)
        if vertex_weights.shape != (node_count,) or not (vertex_weights > 0).all():
            raise DomainError("vertex weights must be strictly positive, one per node")

        self.node_count = int(node_count)
        self.edges = np.column_stack([lo, hi])
        self.weights = weights
        self.vertex_weights = vertex_weights

        # CSR over both directions; neighbours sorted ascending per node
        m = len(lo)
        src = np.r_[lo, hi]
        dst = np.r_[hi, lo]
        eid = np.r_[np.arange(m), np.arange(m)]
        perm = np.lexsort((dst, src))
        self.indices = dst[perm]
        self.edge_index = eid[perm]
        self.indptr = np.r_[0, np.cumsum(np.bincount(src, minlength=self.node_count))]
        self._lookup = {(int(a), int(b)): e for e, (a, b) in enumerate(self.edges)}
        for arr in (self.edges, self.weights, self.vertex_weights, self.indices, self.edge_index, self.indptr):
            arr.setflags(write=False)

    @property
    def edge_count(self) -> int:
        return len(self.weights)

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def incident_edges(self, u: int) -> np.ndarray:
        return self.edge_index[self.indptr[u] : self.indptr[u + 1]]

    def edge_id(self, u: int, v: int) -> int:
        key = (min(u, v), max(u, v))
        try:
            return self._lookup[key]
        except KeyError:
            raise KeyError(f"edge {key} not in graph") from None

    def weight(self, u: int, v: int) -> float:
        return float(self.weights[self.edge_id(u, v)])

    def with_weights(self, weights) -> "Graph":
        weights = np.asarray(weights, dtype=float)
        if weights.shape != self.weights.shape:
            raise DomainError("new weights must match the edge count")
        return Graph(self.node_count, self.edges, weights, self.vertex_weights)

    def to_edge_list(self) -> str:
        """``i j weight`` per line, ``i < j``."""
        return "".join(f"{i} {j} {w!r}\n" for (i, j), w in zip(self.edges.tolist(), self.weights.tolist()))

    def write_edge_list(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_edge_list())

    def __repr__(self):
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"


def edge_weight(distance, eps_floor: float = EPS_FLOOR):
    """Inverse-distance weight ``1 / max(distance, eps_floor)``."""
    return 1.0 / np.maximum(distance, eps_floor)


def knn_indices(features: np.ndarray, k: int, chunk_size: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbours of every row (self excluded).

    Distance ties go to the lower index. Returns ``(neighbors, distances)``,
    both ``n x k``, nearest first.
    """
    x = np.asarray(features, dtype=float)
    n = len(x)
    nbrs = np.empty((n, k), dtype=np.int64)
    dists = np.empty((n, k))
    for start in range(0, n, chunk_size):
        stop = min(start + chunk_size, n)
        block = cdist(x[start:stop], x)
        rows = np.arange(stop - start)
        block[rows, rows + start] = np.inf
        # stable sort keeps equal distances in index order
        order = np.argsort(block, axis=1, kind="stable")[:, :k]
        nbrs[start:stop] = order
        dists[start:stop] = np.take_along_axis(block, order, axis=1)
    return nbrs, dists


def build_knn_graph(features, config: GraphConfig | None = None) -> Graph:
    config = config or GraphConfig()
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if n <= config.k:
        raise ConfigError(f"need more points than neighbours: n={n}, k={config.k}")
    nbrs, dists = knn_indices(x, config.k, config.chunk_size)

    src = np.repeat(np.arange(n), config.k)
    dst = nbrs.ravel()
    dist = dists.ravel()
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    keys = lo * n + hi
    uniq, first, counts = np.unique(keys, return_index=True, return_counts=True)
    if config.symmetrize == "mutual":
        keep = counts == 2
        uniq, first = uniq[keep], first[keep]
    edges = np.column_stack([uniq // n, uniq % n])
    return Graph(n, edges, edge_weight(dist[first], config.eps_floor))
