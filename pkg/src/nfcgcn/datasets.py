"""Citation-dataset parsing, canonical TSV round-tripping, and splits.

The canonical on-disk form of a dataset is a directory of UTF-8 TSV files:

    nodes.tsv   node_id <TAB> label <TAB> v1 <TAB> ... <TAB> vD
    edges.tsv   node_id <TAB> node_id
    split.tsv   node_id <TAB> {train|val|test}        (optional)
    idmap.tsv   original_id <TAB> dense_index          (optional)

Row order in nodes.tsv defines the dense node indexing. Feature values are
decimal reals with '.' separator, written so float64 round-trips exactly.
Labels are integer class indices; -1 marks an unlabeled node.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .graph import Graph, build_graph

NODES_FILE = "nodes.tsv"
EDGES_FILE = "edges.tsv"
SPLIT_FILE = "split.tsv"
IDMAP_FILE = "idmap.tsv"

# Large-training-set split sizes (train, val, test) used by the shipped presets.
SPLIT_PRESETS = {
    "cora-fastgcn": (1208, 500, 1000),
    "citeseer-fastgcn": (1827, 500, 1000),
    "pubmed-fastgcn": (18217, 500, 1000),
}

# Label-balanced preset: 20 training nodes per class, 500 val, 1000 test.
PLANETOID_STYLE = "planetoid-style"


@dataclass(frozen=True)
class SplitSpec:
    """Sizes and seed for a random train/val/test node split."""

    train_count: int
    val_count: int
    test_count: int
    seed: int


@dataclass
class ParsedDataset:
    """Result of parsing a raw text dataset."""

    graph: Graph
    id_map: dict[str, int]
    classes: list[str]
    dropped_edges: int


def parse_linqs(content_path, cites_path, classes: list[str] | None = None) -> ParsedDataset:
    """Parse LINQS-style .content/.cites text files into a Graph (no masks).

    Content lines are ``id<TAB>f_1 .. f_D<TAB>class``; cites lines are
    ``id<TAB>id``. String ids are mapped to dense indices in first-seen
    order. Citation edges with an endpoint that has no content line are
    dropped and counted in ``dropped_edges``.

    Args:
        classes: optional fixed class vocabulary; any other class string
            is rejected. Defaults to the sorted set found in the file.
    """
    content_path = Path(content_path)
    cites_path = Path(cites_path)
    ids: list[str] = []
    id_map: dict[str, int] = {}
    rows: list[np.ndarray] = []
    label_names: list[str] = []
    feature_dim = None
    with open(content_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise DataError(f"{content_path}:{lineno}: expected id, features, class")
            node_id, feats, label = parts[0], parts[1:-1], parts[-1]
            if node_id in id_map:
                raise DataError(f"{content_path}:{lineno}: duplicate node id {node_id!r}")
            if feature_dim is None:
                feature_dim = len(feats)
            elif len(feats) != feature_dim:
                raise DataError(
                    f"{content_path}:{lineno}: feature vector has {len(feats)} values, "
                    f"expected {feature_dim}")
            try:
                row = np.array([float(v) for v in feats], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{content_path}:{lineno}: {exc}") from exc
            id_map[node_id] = len(ids)
            ids.append(node_id)
            rows.append(row)
            label_names.append(label)

    if not ids:
        raise DataError(f"{content_path}: no content lines found")
    if classes is None:
        classes = sorted(set(label_names))
    class_index = {c: k for k, c in enumerate(classes)}
    labels = np.empty(len(ids), dtype=np.int64)
    for i, name in enumerate(label_names):
        if name not in class_index:
            raise DataError(f"{content_path}: unknown class {name!r} for node {ids[i]!r}")
        labels[i] = class_index[name]

    edges = []
    dropped = 0
    with open(cites_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{cites_path}:{lineno}: expected two ids per line")
            a, b = parts
            if a in id_map and b in id_map:
                edges.append((id_map[a], id_map[b]))
            else:
                dropped += 1
    if dropped:
        warnings.warn(f"dropped {dropped} citation(s) referencing unknown ids",
                      stacklevel=2)

    g = build_graph(len(ids), edges, np.vstack(rows), labels)
    return ParsedDataset(graph=g, id_map=id_map, classes=list(classes),
                         dropped_edges=dropped)


def make_split(g: Graph, spec: SplitSpec):
    """Random disjoint masks, deterministic in ``spec.seed``.

    Nodes are drawn uniformly without replacement from the labeled
    population: test first, then val, then train from the remainder.
    """
    for name, count in (("train", spec.train_count), ("val", spec.val_count),
                        ("test", spec.test_count)):
        if count < 0:
            raise ValueError(f"{name}_count must be non-negative")
    labeled = np.flatnonzero(g.labels >= 0)
    total = spec.train_count + spec.val_count + spec.test_count
    if total > labeled.size:
        raise ValueError(
            f"split sizes sum to {total} but only {labeled.size} labeled nodes exist")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(labeled)
    test = perm[:spec.test_count]
    val = perm[spec.test_count:spec.test_count + spec.val_count]
    train = perm[spec.test_count + spec.val_count:total]
    masks = []
    for chosen in (train, val, test):
        m = np.zeros(g.num_nodes, dtype=bool)
        m[chosen] = True
        masks.append(m)
    return tuple(masks)


def make_label_balanced_split(g: Graph, per_class: int, val_count: int,
                              test_count: int, seed: int):
    """Masks with a fixed number of training nodes per class.

    Test and val are drawn first (uniformly over labeled nodes); the
    training set then takes ``per_class`` nodes of each class from the
    remainder.
    """
    labeled = np.flatnonzero(g.labels >= 0)
    if val_count + test_count > labeled.size:
        raise ValueError("val + test sizes exceed the labeled population")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(labeled)
    test = perm[:test_count]
    val = perm[test_count:test_count + val_count]
    rest = perm[test_count + val_count:]
    train_parts = []
    for cls in range(g.num_classes):
        pool = rest[g.labels[rest] == cls]
        if pool.size < per_class:
            raise ValueError(f"class {cls} has only {pool.size} nodes left, "
                             f"need {per_class}")
        train_parts.append(pool[:per_class])
    train = np.concatenate(train_parts) if train_parts else np.empty(0, dtype=np.int64)
    masks = []
    for chosen in (train, val, test):
        m = np.zeros(g.num_nodes, dtype=bool)
        m[chosen] = True
        masks.append(m)
    return tuple(masks)


def split_from_preset(g: Graph, name: str, seed: int):
    """Resolve a named split preset into masks."""
    if name == PLANETOID_STYLE:
        return make_label_balanced_split(g, per_class=20, val_count=500,
                                         test_count=1000, seed=seed)
    if name in SPLIT_PRESETS:
        train, val, test = SPLIT_PRESETS[name]
        return make_split(g, SplitSpec(train, val, test, seed))
    known = ", ".join(sorted([*SPLIT_PRESETS, PLANETOID_STYLE]))
    raise ValueError(f"unknown split preset {name!r}; known presets: {known}")


def _format_real(v: float) -> str:
    # str() of a python float is the shortest digit string that round-trips.
    return str(float(v))


def save_canonical(g: Graph, out_dir, id_map: dict[str, int] | None = None):
    """Write a Graph to the canonical TSV directory (lossless round trip).

    ``id_map`` (original -> dense index) supplies node ids; otherwise the
    dense index itself is used. Existing files are overwritten.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if id_map is not None:
        if len(id_map) != g.num_nodes:
            raise ValueError("id_map size does not match the number of nodes")
        names = [None] * g.num_nodes
        for original, dense in id_map.items():
            names[dense] = str(original)
    else:
        names = [str(i) for i in range(g.num_nodes)]

    with open(out / NODES_FILE, "w", encoding="utf-8") as f:
        for i in range(g.num_nodes):
            feats = "\t".join(_format_real(v) for v in g.features[i])
            tail = f"\t{feats}" if g.num_features else ""
            f.write(f"{names[i]}\t{int(g.labels[i])}{tail}\n")
    with open(out / EDGES_FILE, "w", encoding="utf-8") as f:
        for a, b in g.edges:
            f.write(f"{names[a]}\t{names[b]}\n")
    with open(out / SPLIT_FILE, "w", encoding="utf-8") as f:
        for kind, mask in (("train", g.train_mask), ("val", g.val_mask),
                           ("test", g.test_mask)):
            for i in np.flatnonzero(mask):
                f.write(f"{names[i]}\t{kind}\n")
    with open(out / IDMAP_FILE, "w", encoding="utf-8") as f:
        for i, name in enumerate(names):
            f.write(f"{name}\t{i}\n")


def load_canonical(dataset_dir) -> Graph:
    """Load a Graph from a canonical TSV directory.

    split.tsv is optional (masks default to all-false). Malformed content
    is rejected with the offending file and line number.
    """
    d = Path(dataset_dir)
    nodes_path = d / NODES_FILE
    edges_path = d / EDGES_FILE
    for p in (nodes_path, edges_path):
        if not p.exists():
            raise DataError(f"missing dataset file: {p}")

    names: list[str] = []
    index: dict[str, int] = {}
    labels: list[int] = []
    rows: list[np.ndarray] = []
    feature_dim = None
    with open(nodes_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise DataError(f"{nodes_path}:{lineno}: expected id, label, features")
            node_id, label, feats = parts[0], parts[1], parts[2:]
            if node_id in index:
                raise DataError(f"{nodes_path}:{lineno}: duplicate node id {node_id!r}")
            if feature_dim is None:
                feature_dim = len(feats)
            elif len(feats) != feature_dim:
                raise DataError(
                    f"{nodes_path}:{lineno}: feature vector has {len(feats)} values, "
                    f"expected {feature_dim}")
            try:
                labels.append(int(label))
                rows.append(np.array([float(v) for v in feats], dtype=np.float64))
            except ValueError as exc:
                raise DataError(f"{nodes_path}:{lineno}: {exc}") from exc
            index[node_id] = len(names)
            names.append(node_id)

    if not names:
        raise DataError(f"{nodes_path}: no node lines found")
    num_nodes = len(names)

    edges = []
    with open(edges_path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{edges_path}:{lineno}: expected two ids per line")
            try:
                edges.append((index[parts[0]], index[parts[1]]))
            except KeyError as exc:
                raise DataError(
                    f"{edges_path}:{lineno}: unknown node id {exc.args[0]!r}") from exc

    masks = {k: np.zeros(num_nodes, dtype=bool) for k in ("train", "val", "test")}
    split_path = d / SPLIT_FILE
    if split_path.exists():
        with open(split_path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or parts[1] not in masks:
                    raise DataError(
                        f"{split_path}:{lineno}: expected 'id<TAB>train|val|test'")
                if parts[0] not in index:
                    raise DataError(
                        f"{split_path}:{lineno}: unknown node id {parts[0]!r}")
                masks[parts[1]][index[parts[0]]] = True

    features = np.vstack(rows) if feature_dim else np.zeros((num_nodes, 0))
    try:
        return build_graph(num_nodes, edges, features,
                           np.array(labels, dtype=np.int64),
                           masks=(masks["train"], masks["val"], masks["test"]))
    except ValueError as exc:
        raise DataError(f"{d}: {exc}") from exc


def load_id_map(dataset_dir) -> dict[str, int]:
    """Read idmap.tsv (original id -> dense index)."""
    p = Path(dataset_dir) / IDMAP_FILE
    if not p.exists():
        raise DataError(f"missing dataset file: {p}")
    id_map: dict[str, int] = {}
    with open(p, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{p}:{lineno}: expected 'original_id<TAB>index'")
            try:
                id_map[parts[0]] = int(parts[1])
            except ValueError as exc:
                raise DataError(f"{p}:{lineno}: {exc}") from exc
    return id_map
