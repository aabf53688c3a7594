import itertools

import numpy as np
import pytest
from hypothesis import settings

from gflc.knn_graph import Graph

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def path_graph(n, weights=None):
    edges = [(i, i + 1) for i in range(n - 1)]
    return Graph(n, edges, np.ones(len(edges)) if weights is None else weights)


def star_graph(leaves):
    edges = [(0, i) for i in range(1, leaves + 1)]
    return Graph(leaves + 1, edges, np.ones(leaves))


def complete_graph(n, weights=None):
    edges = list(itertools.combinations(range(n), 2))
    return Graph(n, edges, np.ones(len(edges)) if weights is None else weights)


def random_graph(rng, n_max=30, p=None, weight_range=(0.05, 5.0)):
    """Erdos-Renyi graph with log-uniform weights; may be disconnected."""
    n = int(rng.integers(2, n_max + 1))
    p = rng.uniform(0.1, 0.6) if p is None else p
    pairs = [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    if not pairs:
        pairs = [(0, 1)]
    lo, hi = np.log(weight_range[0]), np.log(weight_range[1])
    weights = np.exp(rng.uniform(lo, hi, len(pairs)))
    return Graph(n, pairs, weights)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
