#!/usr/bin/env python3
"""One-shot converter from legacy Planetoid pickle bundles to canonical TSV.

Input: a directory with the standard eight-file bundle

    ind.<name>.x       pickled sparse matrix, labeled-training features
    ind.<name>.tx      pickled sparse matrix, test features
    ind.<name>.allx    pickled sparse matrix, all non-test features
    ind.<name>.y/.ty/.ally   pickled one-hot label arrays for the above
    ind.<name>.graph   pickled {node: [neighbor, ...]} adjacency dict
    ind.<name>.test.index    text file of test-row positions, one per line

Output: nodes.tsv / edges.tsv / idmap.tsv in the plain TSV layout the
training toolkit loads (node per row: id, integer label, feature reals).
Test rows are scattered from their on-disk order into the listed
positions; gaps in the test-index range (isolated nodes in some bundles)
get zero features and the -1 unlabeled sentinel. No split file is
written: split generation belongs to the training toolkit so a single
code path owns the randomness.

Usage: convert_planetoid.py --input <dir> --name {cora|citeseer|pubmed} --out <dir>
Exit codes: 0 success, 1 on any error.
"""

from __future__ import annotations

import argparse
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

PARTS = ("x", "y", "tx", "ty", "allx", "ally", "graph")

# Published node/edge/feature/class counts used for the consistency warning.
EXPECTED_COUNTS = {
    "cora": (2708, 5429, 1433, 7),
    "citeseer": (3327, 4732, 3703, 6),
    "pubmed": (19717, 44338, 500, 3),
}


def load_pickle(path: Path):
    with open(path, "rb") as f:
        # Bundles in the wild are Python 2 pickles; latin1 keeps byte parity.
        return pickle.load(f, encoding="latin1")


def parse_index_file(path: Path) -> list[int]:
    indices = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                indices.append(int(line))
    return indices


def to_dense(matrix) -> np.ndarray:
    if sp.issparse(matrix):
        return np.asarray(matrix.todense(), dtype=np.float64)
    return np.asarray(matrix, dtype=np.float64)


def assemble(bundle_dir: Path, name: str):
    """Rebuild (features, labels, edges) in dense node order.

    Returns features (N, D) float64, labels (N,) int64 with -1 for
    unlabeled rows, and a sorted list of undirected index pairs.
    """
    data = {}
    for part in PARTS:
        path = bundle_dir / f"ind.{name}.{part}"
        if not path.exists():
            raise FileNotFoundError(f"missing bundle file: {path}")
        data[part] = load_pickle(path)
    index_path = bundle_dir / f"ind.{name}.test.index"
    if not index_path.exists():
        raise FileNotFoundError(f"missing bundle file: {index_path}")
    test_idx = parse_index_file(index_path)

    allx = to_dense(data["allx"])
    tx = to_dense(data["tx"])
    ally = np.asarray(data["ally"], dtype=np.float64)
    ty = np.asarray(data["ty"], dtype=np.float64)

    lo, hi = min(test_idx), max(test_idx)
    if lo != allx.shape[0]:
        raise ValueError(
            f"test index range starts at {lo} but allx holds {allx.shape[0]} "
            f"rows; bundle layout not understood")
    span = hi - lo + 1
    if span != len(test_idx):
        # Gaps in the test range: those nodes exist in the graph but have
        # no feature row; give them zeros and no label.
        tx_full = np.zeros((span, tx.shape[1]))
        ty_full = np.zeros((span, ty.shape[1]))
        present = np.array(sorted(test_idx)) - lo
        tx_full[present] = tx
        ty_full[present] = ty
        tx, ty = tx_full, ty_full

    features = np.vstack([allx, tx])
    onehot = np.vstack([ally, ty])

    # Test rows are stored sorted by position; scatter them to the listed
    # (unsorted) node indices.
    order = np.array(test_idx)
    sorted_order = np.sort(order)
    features[order] = features[sorted_order]
    onehot[order] = onehot[sorted_order]

    graph = data["graph"]
    num_nodes = features.shape[0]
    max_ref = max([max(graph.keys(), default=-1)]
                  + [max(vs, default=-1) for vs in graph.values()])
    if max_ref >= num_nodes:
        raise ValueError(
            f"graph references node {max_ref} but only {num_nodes} feature "
            f"rows exist")

    labels = np.full(num_nodes, -1, dtype=np.int64)
    has_label = onehot.sum(axis=1) > 0
    labels[has_label] = onehot[has_label].argmax(axis=1)

    edges = set()
    for node, neighbors in graph.items():
        for other in neighbors:
            if node != other:
                edges.add((min(node, other), max(node, other)))
    return features, labels, sorted(edges)


def format_real(v: float) -> str:
    # Shortest digit string that round-trips a float64; matches the
    # training toolkit's writer byte for byte.
    return str(float(v))


def write_canonical(out_dir: Path, features: np.ndarray, labels: np.ndarray,
                    edges):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "nodes.tsv", "w", encoding="utf-8") as f:
        for i in range(features.shape[0]):
            feats = "\t".join(format_real(v) for v in features[i])
            tail = f"\t{feats}" if features.shape[1] else ""
            f.write(f"{i}\t{int(labels[i])}{tail}\n")
    with open(out_dir / "edges.tsv", "w", encoding="utf-8") as f:
        for a, b in edges:
            f.write(f"{a}\t{b}\n")
    with open(out_dir / "idmap.tsv", "w", encoding="utf-8") as f:
        for i in range(features.shape[0]):
            f.write(f"{i}\t{i}\n")


def check_counts(name: str, features, labels, edges):
    expected = EXPECTED_COUNTS.get(name)
    if expected is None:
        return
    classes = int(labels.max()) + 1 if (labels >= 0).any() else 0
    got = (features.shape[0], len(edges), features.shape[1], classes)
    if got != expected:
        print(f"warning: {name} counts {got} differ from the published "
              f"(nodes, edges, features, classes) = {expected}",
              file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Convert a Planetoid pickle bundle to canonical TSV.")
    parser.add_argument("--input", required=True, help="bundle directory")
    parser.add_argument("--name", required=True,
                        choices=sorted(EXPECTED_COUNTS),
                        help="dataset name used in the bundle file names")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    try:
        features, labels, edges = assemble(Path(args.input), args.name)
        check_counts(args.name, features, labels, edges)
        write_canonical(Path(args.out), features, labels, edges)
    except Exception as exc:  # single error surface: message + exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1

    classes = int(labels.max()) + 1 if (labels >= 0).any() else 0
    print(f"{features.shape[0]} nodes, {len(edges)} edges, "
          f"{features.shape[1]} features, {classes} classes, "
          f"{int((labels < 0).sum())} unlabeled")
    return 0


if __name__ == "__main__":
    sys.exit(main())
