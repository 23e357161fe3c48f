"""Synthetic graphs for tests, sanity checks, and demo runs."""

from __future__ import annotations

import numpy as np

from .datasets import SplitSpec, make_split
from .graph import Graph, build_graph


def two_clique_graph(per_clique: int = 20, feature_dim: int = 8,
                     separation: float = 3.0, noise: float = 0.5,
                     seed: int = 0) -> Graph:
    """Two fully connected cliques with linearly separable features.

    All nodes are placed in the training mask; validation and test are
    empty. Class 0 features cluster around +separation/2 on every axis,
    class 1 around -separation/2.
    """
    rng = np.random.default_rng(seed)
    n = 2 * per_clique
    labels = np.repeat([0, 1], per_clique)
    centers = np.where(labels[:, None] == 0, separation / 2.0, -separation / 2.0)
    features = centers + noise * rng.standard_normal((n, feature_dim))
    edges = []
    for base in (0, per_clique):
        for i in range(per_clique):
            for j in range(i + 1, per_clique):
                edges.append((base + i, base + j))
    train = np.ones(n, dtype=bool)
    empty = np.zeros(n, dtype=bool)
    return build_graph(n, edges, features, labels, masks=(train, empty, empty))


def citation_graph(num_nodes: int = 300, feature_dim: int = 48, num_classes: int = 4,
                   avg_degree: float = 4.0, homophily: float = 0.5,
                   words_per_node: int = 6, noise_words: int = 2,
                   seed: int = 0, split=(0.5, 0.2, 0.3)) -> Graph:
    """Random citation-style graph with class-dependent bag-of-words features.

    Each class owns a block of "topic" words; a node activates
    ``words_per_node`` words from its class block plus ``noise_words``
    drawn anywhere. Edges connect same-class nodes with probability
    ``homophily``, otherwise a uniformly random pair — low homophily makes
    neighbor averaging destructive while per-node features stay
    informative.

    ``split`` gives train/val/test fractions; masks are drawn with
    :func:`make_split` from the same seed.
    """
    if num_classes < 2:
        raise ValueError("need at least two classes")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, num_classes, size=num_nodes)
    block = feature_dim // num_classes
    if block < 1:
        raise ValueError("feature_dim must be at least num_classes")

    features = np.zeros((num_nodes, feature_dim))
    for i in range(num_nodes):
        lo = labels[i] * block
        hi = lo + block
        own = rng.choice(np.arange(lo, hi), size=min(words_per_node, block),
                         replace=False)
        noise = rng.integers(0, feature_dim, size=noise_words)
        features[i, own] = 1.0
        features[i, noise] = 1.0

    target_edges = int(avg_degree * num_nodes / 2)
    edges = set()
    by_class = [np.flatnonzero(labels == c) for c in range(num_classes)]
    attempts = 0
    while len(edges) < target_edges and attempts < 50 * target_edges:
        attempts += 1
        i = int(rng.integers(0, num_nodes))
        if rng.random() < homophily and by_class[labels[i]].size > 1:
            j = int(rng.choice(by_class[labels[i]]))
        else:
            j = int(rng.integers(0, num_nodes))
        if i != j:
            edges.add((min(i, j), max(i, j)))

    g = build_graph(num_nodes, sorted(edges), features, labels)
    train_n = int(split[0] * num_nodes)
    val_n = int(split[1] * num_nodes)
    test_n = min(int(split[2] * num_nodes), num_nodes - train_n - val_n)
    masks = make_split(g, SplitSpec(train_n, val_n, test_n, seed))
    return g.with_masks(*masks)


def random_graph(num_nodes: int, feature_dim: int, num_classes: int = 2,
                 edge_prob: float = 0.3, seed: int = 0) -> Graph:
    """Unstructured Erdos-Renyi graph with gaussian features; for gradchecks."""
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(num_nodes) for j in range(i + 1, num_nodes)
             if rng.random() < edge_prob]
    features = rng.standard_normal((num_nodes, feature_dim))
    labels = rng.integers(0, num_classes, size=num_nodes)
    train = np.ones(num_nodes, dtype=bool)
    empty = np.zeros(num_nodes, dtype=bool)
    return build_graph(num_nodes, edges, features, labels,
                       masks=(train, empty, empty))
