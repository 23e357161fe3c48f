"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion. Criteria exercising the real Cora dataset (marked
``cora``) locate it via ./data or NFCGCN_DATA_DIR and fail with
preparation instructions when it is absent; everything else runs on
synthetic or hand-built inputs.
"""

import time

import numpy as np
import pytest

from conftest import records_equal, require_cora
from nfcgcn.experiments import (
    run_ablation_no_gcn,
    run_bandwidth_sweep,
    run_curves,
    run_depth_sweep,
    run_main,
)
from nfcgcn.gradcheck import check_model
from nfcgcn.graph import build_graph, normalize_adjacency
from nfcgcn.model import ModelSpec, build_inputs, init_params, model_forward
from nfcgcn.ops import ConvSpec
from nfcgcn.presets import load_preset, run_config_from_preset
from nfcgcn.synthetic import citation_graph, random_graph, two_clique_graph
from nfcgcn.training import RunConfig, train

GRAD_TOLERANCE = 1e-4
GRAD_EPS = 1e-5


def _pass(name: str):
    print(f"[ACCEPTANCE] {name}: PASS")


def _preset_cfg(name: str, seed: int = 0, **train_kw) -> RunConfig:
    from dataclasses import replace
    cfg = run_config_from_preset(load_preset(name), seed=seed)
    return replace(cfg, **train_kw) if train_kw else cfg


class TestGradientOracle:
    def test_all_variants_within_tolerance(self):
        """Analytic gradients match central differences for every variant."""
        conv = ConvSpec(mode="conv1d", filter_len=3, num_filters=2, stride_feat=2)
        specs = {
            "nfc-gcn": ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=3,
                                 conv=conv, gcn_dims=(5, 4), dropout=0.0),
            "gcn": ModelSpec(variant="gcn", num_classes=3, gcn_dims=(5,),
                             dropout=0.0),
            "nfc-only": ModelSpec(variant="nfc-only", num_classes=3, bandwidth=3,
                                  conv=conv, dropout=0.0),
            "mean-only": ModelSpec(variant="mean-only", num_classes=3,
                                   bandwidth=3, dropout=0.0),
        }
        graph = random_graph(num_nodes=12, feature_dim=9, num_classes=3,
                             edge_prob=0.35, seed=0)
        started = time.perf_counter()
        for name, spec in specs.items():
            report = check_model(spec, graph, seed=0, tolerance=GRAD_TOLERANCE,
                                 eps=GRAD_EPS)
            assert report.passed, f"{name}:\n{report.format_table()}"
        elapsed = time.perf_counter() - started
        assert elapsed < 120.0, f"gradient oracle took {elapsed:.1f}s"
        _pass(f"gradient oracle, 4 variants in {elapsed:.1f}s")


class TestNormalizationIdentities:
    def test_hand_cases_to_1e12(self):
        isolated = build_graph(1, [], np.zeros((1, 1)), [0])
        a = normalize_adjacency(isolated).matrix.toarray()
        assert abs(a[0, 0] - 1.0) < 1e-12

        clique = build_graph(2, [(0, 1)], np.zeros((2, 1)), [0, 1])
        b = normalize_adjacency(clique).matrix.toarray()
        assert np.abs(b - 0.5).max() < 1e-12

        path = build_graph(3, [(0, 1), (1, 2)], np.zeros((3, 1)), [0, 1, 0])
        c = normalize_adjacency(path).matrix.toarray()
        assert abs(c[0, 1] - 1.0 / np.sqrt(6.0)) < 1e-12
        _pass("normalization identities at 1e-12")


class TestShapeContract:
    def test_cora_preset_widths_exact(self):
        """The cora-1d preset on 1433-dimensional features: 88x64 -> 5632,
        then 16 -> 7."""
        cfg = _preset_cfg("cora-1d")
        spec = cfg.model
        assert spec.conv.out_len(1433) == 88
        assert spec.conv.flat_dim(1433, spec.bandwidth) == 5632

        g = random_graph(num_nodes=16, feature_dim=1433, num_classes=7,
                         edge_prob=0.3, seed=0)
        inputs, agg = build_inputs(g, spec, sampling_seed=0)
        params = init_params(spec, g.num_features, np.random.default_rng(0))
        cache = model_forward(spec, params, agg, inputs)
        assert cache.first_level.shape[1] == 5632
        assert params.layer_weights[0].shape == (5632, 16)
        assert params.layer_weights[1].shape == (16, 7)
        assert cache.logits.shape[1] == 7
        _pass("shape contract 5632 / 16 -> 7")


class TestOptimizerSanity:
    def test_separable_cliques_full_train_accuracy(self):
        g = two_clique_graph(per_clique=20, feature_dim=8, seed=0)
        conv = ConvSpec(mode="conv1d", filter_len=3, num_filters=4, stride_feat=2)
        spec = ModelSpec(variant="nfc-gcn", num_classes=2, bandwidth=3,
                         conv=conv, gcn_dims=(8, 2), dropout=0.5)
        cfg = RunConfig(model=spec, lr=0.01, max_epochs=200, patience=30,
                        seed=0, early_stopping=False)
        result = train(g, cfg)
        assert max(r.train_acc for r in result.curves) == 1.0

    def test_lr_zero_leaves_parameters_bit_identical(self):
        g = citation_graph(num_nodes=120, feature_dim=24, num_classes=3, seed=1)
        conv = ConvSpec(mode="conv1d", filter_len=4, num_filters=4, stride_feat=2)
        spec = ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=4,
                         conv=conv, gcn_dims=(8, 3), dropout=0.5)
        cfg = RunConfig(model=spec, lr=0.0, max_epochs=5, patience=5, seed=2,
                        early_stopping=False)
        result = train(g, cfg)
        reference = init_params(
            spec, g.num_features,
            np.random.default_rng(np.random.SeedSequence(entropy=2,
                                                         spawn_key=(101,))))
        for got, want in zip(result.params.all_params(), reference.all_params()):
            assert np.array_equal(got.value, want.value)

    def test_identical_seeds_bit_identical_curves(self):
        g = citation_graph(num_nodes=120, feature_dim=24, num_classes=3, seed=1)
        conv = ConvSpec(mode="conv1d", filter_len=4, num_filters=4, stride_feat=2)
        spec = ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=4,
                         conv=conv, gcn_dims=(8, 3), dropout=0.5)
        cfg = RunConfig(model=spec, lr=0.01, max_epochs=30, patience=10, seed=7)
        assert records_equal(train(g, cfg).curves, train(g, cfg).curves)
        _pass("optimizer sanity (separable data, lr=0, determinism)")


@pytest.mark.cora
class TestCoraAblation:
    def test_first_level_gap_at_least_ten_points(self, cora_graph):
        """Convolution vs mean pooling of identical sampled maps, 10 seeds."""
        cora_graph = require_cora(cora_graph)
        cfg = _preset_cfg("cora-1d")
        assert cfg.model.bandwidth == 6
        started = time.perf_counter()
        summary = run_ablation_no_gcn(cora_graph, cfg, repeats=10)
        elapsed = time.perf_counter() - started
        gap = summary["gap_points"]
        assert gap >= 10.0, f"gap {gap:.2f} points"
        assert elapsed < 1800.0, f"ablation took {elapsed:.0f}s"
        _pass(f"first-level ablation gap {gap:.1f} points in {elapsed:.0f}s")


@pytest.mark.cora
class TestCoraMainResult:
    def test_mean_accuracies_within_three_points(self, cora_graph):
        cora_graph = require_cora(cora_graph)
        started = time.perf_counter()
        nfc = run_main(cora_graph, _preset_cfg("cora-1d"), repeats=10)
        gcn = run_main(cora_graph, _preset_cfg("cora-gcn"), repeats=10)
        elapsed = time.perf_counter() - started
        nfc_mean = 100.0 * nfc["mean_test_acc"]
        gcn_mean = 100.0 * gcn["mean_test_acc"]
        assert abs(nfc_mean - 88.3) <= 3.0, f"nfc-gcn mean {nfc_mean:.2f}%"
        assert abs(gcn_mean - 86.3) <= 3.0, f"gcn mean {gcn_mean:.2f}%"
        assert nfc_mean >= gcn_mean
        assert elapsed < 3600.0, f"main result took {elapsed:.0f}s"
        _pass(f"main result nfc {nfc_mean:.2f}% vs gcn {gcn_mean:.2f}% "
              f"in {elapsed:.0f}s")


@pytest.mark.cora
class TestCoraBandwidthTrend:
    def test_wide_bandwidth_not_worse_than_narrow(self, cora_graph):
        cora_graph = require_cora(cora_graph)
        summary = run_bandwidth_sweep(cora_graph, _preset_cfg("cora-1d"),
                                      n_values=(2, 6), seeds_per_point=5)
        by_n = {p["bandwidth"]: 100.0 * p["mean_test_acc"]
                for p in summary["points"]}
        assert by_n[6] >= by_n[2] - 0.5, f"n=6 {by_n[6]:.2f}% vs n=2 {by_n[2]:.2f}%"
        _pass(f"bandwidth trend n=2 {by_n[2]:.2f}% -> n=6 {by_n[6]:.2f}%")


@pytest.mark.cora
class TestCoraDepthStability:
    def test_spread_across_depths_bounded(self, cora_graph):
        cora_graph = require_cora(cora_graph)
        summary = run_depth_sweep(cora_graph, _preset_cfg("cora-1d"),
                                  depths=(1, 2, 3, 4, 5), seeds_per_point=5)
        spread = summary["spread_points"]
        assert spread <= 5.0, f"spread {spread:.2f} points"
        _pass(f"depth stability spread {spread:.2f} points")


@pytest.mark.cora
class TestCoraConvergenceSpeed:
    def test_best_val_reached_by_epoch_fifty(self, cora_graph):
        cora_graph = require_cora(cora_graph)
        summary = run_curves(cora_graph, _preset_cfg("cora-1d"), repeats=10,
                             epochs=200)
        fast = sum(1 for row in summary["per_seed"]
                   if row["epoch_within_half_point"] <= 50)
        assert fast >= 7, f"only {fast}/10 seeds converged by epoch 50"
        _pass(f"convergence speed {fast}/10 seeds by epoch 50")
