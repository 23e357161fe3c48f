"""Graph container, degree statistics, and adjacency normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

SYM_NORM_SELF_LOOP = "sym_norm_self_loop"

UNLABELED = -1


def _neighbor_structure(num_nodes: int, edges: np.ndarray):
    """CSR-style (indptr, indices) with neighbors sorted ascending per node."""
    if edges.shape[0] == 0:
        return np.zeros(num_nodes + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    counts = np.bincount(src, minlength=num_nodes)
    indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return indptr, dst.astype(np.int64)


class Graph:
    """Undirected graph with dense node features, labels, and split masks.

    Edges are canonical: deduplicated, self-loop free, one row per
    undirected pair with ``i < j``, sorted lexicographically. A label of
    ``UNLABELED`` (-1) marks nodes excluded from every split. Instances
    are immutable by convention and safe to share across threads; use
    :func:`build_graph` to construct one from raw pieces.
    """

    def __init__(self, num_nodes, edges, features, labels,
                 train_mask, val_mask, test_mask):
        self.num_nodes = int(num_nodes)
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.features = np.asarray(features, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.train_mask = np.asarray(train_mask, dtype=bool)
        self.val_mask = np.asarray(val_mask, dtype=bool)
        self.test_mask = np.asarray(test_mask, dtype=bool)
        self._indptr, self._indices = _neighbor_structure(self.num_nodes, self.edges)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def num_classes(self) -> int:
        labeled = self.labels[self.labels >= 0]
        return int(labeled.max()) + 1 if labeled.size else 0

    def neighbors(self, i: int) -> np.ndarray:
        """Sorted neighbor indices of node ``i`` (no self-loop)."""
        return self._indices[self._indptr[i]:self._indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def adjacency_matrix(self) -> sp.csr_matrix:
        """Binary symmetric adjacency with zero diagonal."""
        n = self.num_nodes
        if self.num_edges == 0:
            return sp.csr_matrix((n, n), dtype=np.float64)
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    def with_masks(self, train_mask, val_mask, test_mask) -> "Graph":
        """New Graph sharing all arrays but with replacement split masks."""
        return build_graph(self.num_nodes, self.edges, self.features, self.labels,
                           masks=(train_mask, val_mask, test_mask))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.num_nodes == other.num_nodes
                and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.train_mask, other.train_mask)
                and np.array_equal(self.val_mask, other.val_mask)
                and np.array_equal(self.test_mask, other.test_mask))

    __hash__ = None

    def __repr__(self):
        return (f"Graph(num_nodes={self.num_nodes}, num_edges={self.num_edges}, "
                f"num_features={self.num_features}, num_classes={self.num_classes})")


def build_graph(num_nodes, edges, features, labels, masks=None) -> Graph:
    """Validate raw graph pieces and return a canonical :class:`Graph`.

    Duplicate edges, reversed duplicates, and self-loops in the input are
    tolerated and removed; the stored edge set is symmetrized. Split masks
    default to all-false.

    Raises:
        ValueError: on an out-of-range edge endpoint, overlapping split
            masks, or a masked node without a valid label.
    """
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise ValueError("num_nodes must be non-negative")
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != num_nodes:
        raise ValueError(f"features must have shape ({num_nodes}, D), got {features.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (num_nodes,):
        raise ValueError(f"labels must have shape ({num_nodes},), got {labels.shape}")

    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.shape[0]:
        bad = (edges < 0) | (edges >= num_nodes)
        if bad.any():
            i = int(np.flatnonzero(bad.any(axis=1))[0])
            raise ValueError(
                f"edge ({edges[i, 0]}, {edges[i, 1]}) references a node outside "
                f"[0, {num_nodes})")
        lo = edges.min(axis=1)
        hi = edges.max(axis=1)
        keep = lo != hi
        canon = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
    else:
        canon = np.empty((0, 2), dtype=np.int64)

    if masks is None:
        masks = tuple(np.zeros(num_nodes, dtype=bool) for _ in range(3))
    train_mask, val_mask, test_mask = (np.asarray(m, dtype=bool) for m in masks)
    for name, m in (("train", train_mask), ("val", val_mask), ("test", test_mask)):
        if m.shape != (num_nodes,):
            raise ValueError(f"{name} mask must have shape ({num_nodes},), got {m.shape}")
    overlap = (train_mask & val_mask) | (train_mask & test_mask) | (val_mask & test_mask)
    if overlap.any():
        node = int(np.flatnonzero(overlap)[0])
        raise ValueError(f"node {node} appears in more than one split mask")
    masked_unlabeled = (train_mask | val_mask | test_mask) & (labels < 0)
    if masked_unlabeled.any():
        node = int(np.flatnonzero(masked_unlabeled)[0])
        raise ValueError(f"node {node} is in a split mask but has no valid label")

    return Graph(num_nodes, canon, features, labels, train_mask, val_mask, test_mask)


@dataclass
class NormalizedAdjacency:
    """Self-loop augmented, symmetrically degree-normalized adjacency.

    Entry (i, j) is 1/sqrt(d_i * d_j) over the self-loop pattern, where
    d is the self-loop-augmented degree. Exactly symmetric with strictly
    positive diagonal.
    """

    matrix: sp.csr_matrix
    form: str = SYM_NORM_SELF_LOOP


def _self_loop_coo(g: Graph) -> sp.coo_matrix:
    a = g.adjacency_matrix()
    eye = sp.identity(g.num_nodes, format="csr", dtype=np.float64)
    return (a + eye).tocoo()


def normalize_adjacency(g: Graph) -> NormalizedAdjacency:
    """Symmetric normalization of the self-loop-augmented adjacency."""
    at = _self_loop_coo(g)
    deg = np.asarray(at.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    data = at.data * inv_sqrt[at.row] * inv_sqrt[at.col]
    mat = sp.csr_matrix((data, (at.row, at.col)), shape=at.shape)
    return NormalizedAdjacency(mat)


def mean_aggregation_matrix(g: Graph) -> sp.csr_matrix:
    """Row-stochastic operator averaging each node with its full neighborhood.

    Row i holds 1/(d_i + 1) on the self-loop-augmented adjacency pattern,
    so multiplying a feature matrix takes the element-wise mean of a node's
    own row and all neighbor rows.
    """
    at = _self_loop_coo(g)
    deg = np.asarray(at.sum(axis=1)).ravel()
    data = at.data / deg[at.row]
    return sp.csr_matrix((data, (at.row, at.col)), shape=at.shape)


@dataclass(frozen=True)
class DegreeStats:
    """Summary of node degrees, self-loops excluded."""

    highest: int
    lowest: int
    mean: float
    median: int


def degree_stats(g: Graph) -> DegreeStats:
    """Degree summary; median is the lower middle element for even counts."""
    if g.num_nodes == 0:
        raise ValueError("degree statistics are undefined for an empty graph")
    d = np.sort(g.degrees())
    return DegreeStats(
        highest=int(d[-1]),
        lowest=int(d[0]),
        mean=float(d.mean()),
        median=int(d[(d.size - 1) // 2]),
    )
