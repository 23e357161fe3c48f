"""The finite-difference oracle itself and the full-model checks."""

import numpy as np
import pytest

from nfcgcn.gradcheck import (
    check_model,
    compare_grads,
    finite_diff_grad,
    relative_errors,
)
from nfcgcn.model import ModelSpec
from nfcgcn.ops import ConvSpec, ParamTensor, relu_forward
from nfcgcn.synthetic import random_graph


@pytest.fixture(scope="module")
def tiny_graph():
    return random_graph(num_nodes=12, feature_dim=9, num_classes=3,
                        edge_prob=0.35, seed=0)


CONV = ConvSpec(mode="conv1d", filter_len=3, num_filters=2, stride_feat=2)
CONV2D = ConvSpec(mode="conv2d", filter_len=3, num_filters=2, stride_feat=2,
                  width=2, stride_node=1)

VARIANT_SPECS = {
    "nfc-gcn": ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=3,
                         conv=CONV, gcn_dims=(5, 4), dropout=0.0),
    "nfc-gcn-2d": ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=3,
                            conv=CONV2D, gcn_dims=(5, 4), dropout=0.0),
    "gcn": ModelSpec(variant="gcn", num_classes=3, gcn_dims=(5,), dropout=0.0),
    "nfc-only": ModelSpec(variant="nfc-only", num_classes=3, bandwidth=3,
                          conv=CONV, dropout=0.0),
    "mean-only": ModelSpec(variant="mean-only", num_classes=3, bandwidth=3,
                           dropout=0.0),
    # Degenerate bandwidth: every map is the center column alone.
    "bandwidth-1": ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=1,
                             conv=CONV, gcn_dims=(4,), dropout=0.0),
}


class TestFiniteDiff:
    def test_quadratic_exact(self):
        p = ParamTensor("theta", np.array([3.0]))
        grad = finite_diff_grad(
            lambda ps: float((ps[0].value ** 2).sum()), [p], eps=1e-5)[0]
        assert grad[0] == pytest.approx(6.0, abs=1e-9)

    def test_relu_away_from_kink(self):
        p = ParamTensor("theta", np.array([1.0]))
        grad = finite_diff_grad(
            lambda ps: float(relu_forward(ps[0].value).sum()), [p], eps=1e-5)[0]
        assert grad[0] == pytest.approx(1.0, abs=1e-9)

    def test_values_restored_after_perturbation(self):
        p = ParamTensor("theta", np.array([1.0, -2.0, 0.5]))
        before = p.value.copy()
        finite_diff_grad(lambda ps: float(ps[0].value.sum()), [p])
        assert np.array_equal(p.value, before)

    def test_invalid_eps(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda ps: 0.0, [], eps=0.0)


class TestCheckModel:
    @pytest.mark.parametrize("name", sorted(VARIANT_SPECS))
    def test_variant_passes(self, name, tiny_graph):
        report = check_model(VARIANT_SPECS[name], tiny_graph, seed=0)
        assert report.passed, report.format_table()
        assert report.max_rel_error < 1e-4

    def test_spec_example_sizes(self):
        # 12 nodes, D=9, bandwidth 3, filter 3/stride 2/2 filters, two layers.
        g = random_graph(12, 9, num_classes=3, edge_prob=0.3, seed=4)
        spec = ModelSpec(variant="nfc-gcn", num_classes=3, bandwidth=3,
                         conv=CONV, gcn_dims=(5, 4), dropout=0.0)
        report = check_model(spec, g, seed=1)
        assert report.passed

    def test_dropout_rejected(self, tiny_graph):
        spec = ModelSpec(variant="mean-only", num_classes=3, bandwidth=3,
                         dropout=0.5)
        with pytest.raises(ValueError, match="dropout"):
            check_model(spec, tiny_graph)

    def test_corrupted_gradient_fails_with_worst_index(self):
        rng = np.random.default_rng(0)
        analytic = [rng.standard_normal((3, 2))]
        numeric = [a.copy() for a in analytic]
        analytic[0][1, 1] = -analytic[0][1, 1]  # sign flip
        report = compare_grads(["w"], analytic, numeric, tolerance=1e-4)
        assert not report.passed
        assert report.checks[0].worst_index == (1, 1)
        assert "FAIL" in report.format_table()

    def test_report_serialization(self, tiny_graph):
        report = check_model(VARIANT_SPECS["mean-only"], tiny_graph, seed=0)
        d = report.to_dict()
        assert d["passed"] is True
        assert {t["name"] for t in d["tensors"]} == {"classifier_w", "classifier_b"}
        assert "PASS" in report.format_table()

    def test_subsampling_deterministic(self, tiny_graph):
        spec = VARIANT_SPECS["nfc-gcn"]
        a = check_model(spec, tiny_graph, seed=3, max_coords_per_tensor=10)
        b = check_model(spec, tiny_graph, seed=3, max_coords_per_tensor=10)
        assert [c.max_rel_error for c in a.checks] == \
            [c.max_rel_error for c in b.checks]
        assert all(c.coords_checked <= 10 for c in a.checks)


class TestRelativeErrors:
    def test_floor_avoids_zero_division(self):
        rel = relative_errors(np.zeros(3), np.zeros(3))
        assert np.array_equal(rel, np.zeros(3))

    def test_scale_invariant(self):
        a = np.array([1.0])
        n = np.array([1.0 + 1e-6])
        assert relative_errors(a, n)[0] == pytest.approx(1e-6, rel=1e-3)
