"""Shipped preset files: loading, override mechanics, and arithmetic."""

import pytest

from nfcgcn.datasets import PLANETOID_STYLE, SPLIT_PRESETS
from nfcgcn.presets import (
    apply_overrides,
    available_presets,
    load_preset,
    run_config_from_preset,
)

EXPECTED_PRESETS = {
    "cora-1d", "cora-2d", "cora-gcn",
    "citeseer-1d", "citeseer-2d", "citeseer-gcn",
    "pubmed-1d", "pubmed-2d", "pubmed-gcn",
}

# (feature_dim, classes, conv out_len, flattened width) per dataset family.
DATASET_DIMS = {
    "cora": (1433, 7, 88, 5632),
    "citeseer": (3703, 6, 114, 7296),
    "pubmed": (500, 3, 28, 896),
}


class TestPresetFiles:
    def test_catalogue(self):
        assert set(available_presets()) == EXPECTED_PRESETS

    @pytest.mark.parametrize("name", sorted(EXPECTED_PRESETS))
    def test_builds_valid_config(self, name):
        preset = load_preset(name)
        cfg = run_config_from_preset(preset, seed=1)
        assert cfg.seed == 1
        assert cfg.model.num_classes == DATASET_DIMS[preset["dataset"]][1]
        assert preset["split"] in SPLIT_PRESETS or preset["split"] == PLANETOID_STYLE
        assert 0 < preset["reference_accuracy"] < 100

    @pytest.mark.parametrize("family", sorted(DATASET_DIMS))
    def test_conv_arithmetic_1d(self, family):
        feature_dim, classes, out_len, flat = DATASET_DIMS[family]
        cfg = run_config_from_preset(load_preset(f"{family}-1d"))
        conv = cfg.model.conv
        assert conv.out_len(feature_dim) == out_len
        assert conv.flat_dim(feature_dim, cfg.model.bandwidth) == flat
        assert cfg.model.gcn_dims[-1] == classes

    @pytest.mark.parametrize("family", sorted(DATASET_DIMS))
    def test_2d_presets_use_width_three(self, family):
        cfg = run_config_from_preset(load_preset(f"{family}-2d"))
        assert cfg.model.conv.mode == "conv2d"
        assert cfg.model.conv.width == 3
        assert cfg.model.conv.stride_node == 1

    def test_baseline_presets_symmetric_propagation(self):
        for family in DATASET_DIMS:
            cfg = run_config_from_preset(load_preset(f"{family}-gcn"))
            assert cfg.model.variant == "gcn"
            assert cfg.model.resolved_aggregation == "symmetric"
            assert cfg.patience == 10
            assert cfg.max_epochs == 400

    def test_unknown_preset_lists_names(self):
        with pytest.raises(ValueError, match="cora-1d"):
            load_preset("missing")


class TestOverrides:
    def test_dotted_paths_and_json_values(self):
        preset = load_preset("cora-1d")
        out = apply_overrides(preset, ["train.lr=0.5", "model.gcn_dims=[4,7]",
                                       "model.conv.filter_len=8"])
        assert out["train"]["lr"] == 0.5
        assert out["model"]["gcn_dims"] == [4, 7]
        assert out["model"]["conv"]["filter_len"] == 8
        assert preset["train"]["lr"] == 0.002  # original untouched

    def test_depth_convenience_key(self):
        out = apply_overrides(load_preset("cora-1d"), ["model.gcn_layers=4"])
        assert out["model"]["gcn_dims"] == [16, 16, 16, 7]
        baseline = apply_overrides(load_preset("cora-gcn"),
                                   ["model.gcn_layers=4"])
        assert baseline["model"]["gcn_dims"] == [16, 16, 16]

    def test_conflicting_keys_rejected(self):
        with pytest.raises(ValueError, match="conflicting"):
            apply_overrides(load_preset("cora-1d"),
                            ["train.lr=0.1", "train.lr=0.2"])

    def test_malformed_override_rejected(self):
        with pytest.raises(ValueError, match="key=value"):
            apply_overrides(load_preset("cora-1d"), ["train.lr"])
