"""Fixed-bandwidth neighbor sampling and feature-map construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph
from .ops import ConvSpec, extract_patches


@dataclass(frozen=True)
class SampledNeighborhood:
    """Ordered member list for one node: position 0 is always the center.

    When the node has fewer than ``bandwidth - 1`` neighbors, the center
    index is duplicated to fill the remaining slots.
    """

    center: int
    members: np.ndarray
    bandwidth: int


@dataclass(frozen=True)
class FeatureMap:
    """D x n matrix whose columns are raw feature vectors in member order."""

    values: np.ndarray
    center: int


def node_rng(seed, node: int) -> np.random.Generator:
    """Independent per-node stream, deterministic in (seed, node)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(node,)))


def sample_neighborhood(g: Graph, i: int, n: int,
                        rng: np.random.Generator) -> SampledNeighborhood:
    """Select n member nodes for node ``i``: the center plus neighbors.

    With more than ``n - 1`` neighbors, a uniform sample of ``n - 1``
    distinct ones is drawn without replacement; otherwise all neighbors
    are kept (in index order) and the center is duplicated to size.
    """
    if n < 1:
        raise ValueError("bandwidth must be >= 1")
    neigh = g.neighbors(i)
    d = neigh.size
    if d > n - 1:
        chosen = rng.choice(neigh, size=n - 1, replace=False)
        members = np.concatenate([[i], chosen])
    else:
        members = np.concatenate([[i], neigh, np.full(n - 1 - d, i, dtype=np.int64)])
    return SampledNeighborhood(center=int(i), members=members.astype(np.int64),
                               bandwidth=n)


def build_feature_map(g: Graph, nb: SampledNeighborhood) -> FeatureMap:
    """Copy member feature vectors into a D x n matrix, center first."""
    values = np.ascontiguousarray(g.features[nb.members].T)
    return FeatureMap(values=values, center=nb.center)


class FeatureMapBatch:
    """Feature maps for every node, stored as one (N, D, n) block.

    Behaves as a sequence of :class:`FeatureMap`. Convolution patches are
    extracted lazily and memoized per :class:`ConvSpec`, since they depend
    only on the sampled maps.
    """

    def __init__(self, values: np.ndarray, members: np.ndarray, bandwidth: int):
        self.values = values
        self.members = members
        self.bandwidth = bandwidth
        self._patch_cache: dict[ConvSpec, np.ndarray] = {}

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i: int) -> FeatureMap:
        return FeatureMap(values=self.values[i], center=int(self.members[i, 0]))

    def patches(self, spec: ConvSpec) -> np.ndarray:
        cached = self._patch_cache.get(spec)
        if cached is None:
            cached = np.ascontiguousarray(extract_patches(self.values, spec))
            self._patch_cache[spec] = cached
        return cached


def sample_all(g: Graph, n: int, seed) -> FeatureMapBatch:
    """One feature map per node, using independent per-node rng streams.

    The result is byte-identical for identical (graph, n, seed) and does
    not depend on iteration order.
    """
    members = np.empty((g.num_nodes, n), dtype=np.int64)
    for i in range(g.num_nodes):
        members[i] = sample_neighborhood(g, i, n, node_rng(seed, i)).members
    values = np.ascontiguousarray(g.features[members].transpose(0, 2, 1))
    return FeatureMapBatch(values=values, members=members, bandwidth=n)
