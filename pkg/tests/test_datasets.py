"""Parsing, canonical round trips, and split generation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfcgcn.datasets import (
    PLANETOID_STYLE,
    SPLIT_PRESETS,
    SplitSpec,
    load_canonical,
    load_id_map,
    make_label_balanced_split,
    make_split,
    parse_linqs,
    save_canonical,
    split_from_preset,
)
from nfcgcn.errors import DataError
from nfcgcn.graph import build_graph


def write_linqs(tmp_path, content_lines, cites_lines):
    content = tmp_path / "toy.content"
    cites = tmp_path / "toy.cites"
    content.write_text("\n".join(content_lines) + "\n")
    cites.write_text("\n".join(cites_lines) + "\n" if cites_lines else "")
    return content, cites


class TestParseLinqs:
    def test_two_nodes_one_cite(self, tmp_path):
        content, cites = write_linqs(
            tmp_path,
            ["a\t1\t0\tml", "b\t0\t1\tdb"],
            ["a\tb"])
        parsed = parse_linqs(content, cites)
        g = parsed.graph
        assert g.num_nodes == 2
        assert g.num_edges == 1
        assert parsed.id_map == {"a": 0, "b": 1}
        assert parsed.classes == ["db", "ml"]
        assert g.labels.tolist() == [1, 0]
        assert parsed.dropped_edges == 0

    def test_unknown_endpoint_dropped_with_count(self, tmp_path):
        content, cites = write_linqs(
            tmp_path,
            ["a\t1\tml", "b\t0\tml"],
            ["a\tb", "a\tmissing"])
        with pytest.warns(UserWarning, match="dropped 1"):
            parsed = parse_linqs(content, cites)
        assert parsed.dropped_edges == 1
        assert parsed.graph.num_edges == 1

    def test_inconsistent_feature_length_names_line(self, tmp_path):
        content, cites = write_linqs(
            tmp_path,
            ["a\t1\t0\tml", "b\t1\tml"],
            [])
        with pytest.raises(DataError, match=r":2"):
            parse_linqs(content, cites)

    def test_unknown_class_rejected(self, tmp_path):
        content, cites = write_linqs(tmp_path, ["a\t1\tml"], [])
        with pytest.raises(DataError, match="unknown class"):
            parse_linqs(content, cites, classes=["db"])

    def test_duplicate_id_rejected(self, tmp_path):
        content, cites = write_linqs(tmp_path, ["a\t1\tml", "a\t0\tml"], [])
        with pytest.raises(DataError, match="duplicate"):
            parse_linqs(content, cites)


def random_masked_graph(rng):
    n = int(rng.integers(1, 12))
    d = int(rng.integers(1, 5))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = [p for p in pairs if rng.random() < 0.4]
    features = np.round(rng.standard_normal((n, d)) * rng.uniform(0.1, 100), 6)
    labels = rng.integers(-1, 3, size=n)
    kinds = rng.integers(0, 4, size=n)
    kinds[labels < 0] = 3
    masks = tuple(kinds == k for k in range(3))
    return build_graph(n, edges, features, labels, masks=masks)


class TestCanonicalRoundTrip:
    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_round_trip_identity(self, tmp_path_factory, seed):
        g = random_masked_graph(np.random.default_rng(seed))
        out = tmp_path_factory.mktemp("canon")
        save_canonical(g, out)
        assert load_canonical(out) == g

    def test_round_trip_awkward_floats(self, tmp_path):
        features = np.array([[0.1, 1e-300], [1.0 / 3.0, -2.5e17]])
        g = build_graph(2, [(0, 1)], features, [0, 1])
        save_canonical(g, tmp_path)
        assert np.array_equal(load_canonical(tmp_path).features, features)

    def test_round_trip_with_id_map(self, tmp_path):
        g = build_graph(2, [(0, 1)], np.eye(2), [0, 1])
        save_canonical(g, tmp_path, id_map={"paper-x": 0, "paper-y": 1})
        assert load_canonical(tmp_path) == g
        assert load_id_map(tmp_path) == {"paper-x": 0, "paper-y": 1}

    def test_missing_edges_file_named(self, tmp_path):
        g = build_graph(2, [(0, 1)], np.eye(2), [0, 1])
        save_canonical(g, tmp_path)
        (tmp_path / "edges.tsv").unlink()
        with pytest.raises(DataError, match="edges.tsv"):
            load_canonical(tmp_path)

    def test_malformed_node_line_number(self, tmp_path):
        g = build_graph(2, [(0, 1)], np.eye(2), [0, 1])
        save_canonical(g, tmp_path)
        nodes = tmp_path / "nodes.tsv"
        lines = nodes.read_text().splitlines()
        lines[1] = "1\tnot-an-int\t0.0\t1.0"
        nodes.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match=r"nodes.tsv:2"):
            load_canonical(tmp_path)

    def test_unknown_split_kind_rejected(self, tmp_path):
        g = build_graph(2, [(0, 1)], np.eye(2), [0, 1])
        save_canonical(g, tmp_path)
        (tmp_path / "split.tsv").write_text("0\tvalidation\n")
        with pytest.raises(DataError, match=r"split.tsv:1"):
            load_canonical(tmp_path)

    def test_split_file_optional(self, tmp_path):
        g = build_graph(2, [(0, 1)], np.eye(2), [0, 1])
        save_canonical(g, tmp_path)
        (tmp_path / "split.tsv").unlink()
        loaded = load_canonical(tmp_path)
        assert not loaded.train_mask.any()


class TestMakeSplit:
    @pytest.fixture
    def g30(self):
        rng = np.random.default_rng(0)
        return build_graph(30, [(i, i + 1) for i in range(29)],
                           rng.standard_normal((30, 3)),
                           rng.integers(0, 3, size=30))

    def test_sizes(self, g30):
        train, val, test = make_split(g30, SplitSpec(15, 6, 9, seed=4))
        assert (train.sum(), val.sum(), test.sum()) == (15, 6, 9)

    def test_all_train(self, g30):
        train, val, test = make_split(g30, SplitSpec(30, 0, 0, seed=1))
        assert train.all() and not val.any() and not test.any()

    def test_deterministic_in_seed(self, g30):
        a = make_split(g30, SplitSpec(10, 5, 5, seed=7))
        b = make_split(g30, SplitSpec(10, 5, 5, seed=7))
        c = make_split(g30, SplitSpec(10, 5, 5, seed=8))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        assert any(not np.array_equal(x, y) for x, y in zip(a, c))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_disjoint_random_specs(self, seed):
        rng = np.random.default_rng(seed)
        g = random_masked_graph(rng)
        labeled = int((g.labels >= 0).sum())
        counts = rng.multinomial(labeled, [0.3, 0.3, 0.3, 0.1])[:3]
        train, val, test = make_split(
            g, SplitSpec(int(counts[0]), int(counts[1]), int(counts[2]),
                         seed=int(rng.integers(2**31))))
        assert not (train & val).any()
        assert not (train & test).any()
        assert not (val & test).any()

    def test_counts_exceeding_population_rejected(self, g30):
        with pytest.raises(ValueError, match="sum to 31"):
            make_split(g30, SplitSpec(16, 6, 9, seed=0))

    def test_unlabeled_nodes_never_selected(self):
        labels = np.array([0, -1, 1, -1, 2, 0])
        g = build_graph(6, [(0, 1)], np.zeros((6, 1)), labels)
        train, val, test = make_split(g, SplitSpec(4, 0, 0, seed=0))
        assert not train[labels < 0].any()

    def test_label_balanced(self):
        rng = np.random.default_rng(3)
        labels = np.repeat([0, 1, 2], 40)
        g = build_graph(120, [(0, 1)], rng.standard_normal((120, 2)), labels)
        train, val, test = make_label_balanced_split(g, per_class=5, val_count=20,
                                                     test_count=30, seed=5)
        assert train.sum() == 15
        for cls in range(3):
            assert (g.labels[train] == cls).sum() == 5
        assert val.sum() == 20 and test.sum() == 30

    def test_preset_table_and_unknown_name(self):
        assert SPLIT_PRESETS["cora-fastgcn"] == (1208, 500, 1000)
        assert SPLIT_PRESETS["citeseer-fastgcn"] == (1827, 500, 1000)
        assert SPLIT_PRESETS["pubmed-fastgcn"] == (18217, 500, 1000)
        g = build_graph(2, [(0, 1)], np.eye(2), [0, 1])
        with pytest.raises(ValueError, match=PLANETOID_STYLE):
            split_from_preset(g, "nope", seed=0)
