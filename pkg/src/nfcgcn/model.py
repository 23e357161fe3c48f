"""Model variants assembled from the differentiable primitives.

Four variants share one forward/backward pipeline:

* ``nfc-gcn``: sampled feature maps -> convolution -> flatten -> mean-
  aggregation GCN layers -> dense classifier head.
* ``gcn``: plain GCN on raw features with symmetric normalized
  propagation; the final propagation layer produces the logits.
* ``nfc-only``: convolution output straight into the classifier head.
* ``mean-only``: column mean of each sampled feature map into the head.

Propagation layers aggregate over the *full* neighborhood of every node
(the sampling bandwidth only shapes the convolution input). Aggregation
then affine map then ReLU; the affine map is applied before the sparse
multiply, which is the same linear operator evaluated cheaper.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .graph import Graph, mean_aggregation_matrix, normalize_adjacency
from .ops import (
    ConvSpec,
    ParamTensor,
    affine_backward,
    affine_forward,
    dropout_backward,
    dropout_forward,
    glorot_uniform,
    l2_penalty,
    nfc_batch_backward,
    nfc_batch_forward,
    relu_backward,
    relu_forward,
    softmax_cross_entropy,
    zeros_param,
)
from .sampling import FeatureMapBatch, sample_all

VARIANT_NFC_GCN = "nfc-gcn"
VARIANT_GCN_BASELINE = "gcn"
VARIANT_NFC_ONLY = "nfc-only"
VARIANT_MEAN_ONLY = "mean-only"
VARIANTS = (VARIANT_NFC_GCN, VARIANT_GCN_BASELINE, VARIANT_NFC_ONLY, VARIANT_MEAN_ONLY)

AGG_MEAN = "mean"
AGG_SYMMETRIC = "symmetric"

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description.

    ``gcn_dims`` lists the output width of each propagation layer. For the
    ``gcn`` baseline these are the hidden widths only: a final propagation
    layer to ``num_classes`` is implicit, so a classic two-layer baseline
    has ``gcn_dims=(16,)``. With ``classifier_affine`` false, the last
    propagation layer's pre-activation is used directly as the logits
    instead of adding a dense head.
    """

    variant: str
    num_classes: int
    bandwidth: int = 6
    conv: ConvSpec | None = None
    gcn_dims: tuple[int, ...] = ()
    dropout: float = 0.5
    classifier_affine: bool = True
    aggregation: str | None = None
    nfc_bias: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.uses_feature_maps and self.bandwidth < 1:
            raise ValueError("bandwidth must be >= 1")
        if self.uses_convolution and self.conv is None:
            raise ValueError(f"variant {self.variant!r} requires a ConvSpec")
        if self.variant in (VARIANT_NFC_ONLY, VARIANT_MEAN_ONLY):
            if self.gcn_dims:
                raise ValueError(f"variant {self.variant!r} takes no propagation layers")
            if not self.classifier_affine:
                raise ValueError(f"variant {self.variant!r} requires the classifier head")
        if (self.variant == VARIANT_NFC_GCN and not self.classifier_affine
                and not self.gcn_dims):
            raise ValueError("dropping the classifier head needs at least one "
                             "propagation layer to produce logits")
        if self.aggregation not in (None, AGG_MEAN, AGG_SYMMETRIC):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        object.__setattr__(self, "gcn_dims", tuple(int(d) for d in self.gcn_dims))

    @property
    def uses_convolution(self) -> bool:
        return self.variant in (VARIANT_NFC_GCN, VARIANT_NFC_ONLY)

    @property
    def uses_feature_maps(self) -> bool:
        return self.variant in (VARIANT_NFC_GCN, VARIANT_NFC_ONLY, VARIANT_MEAN_ONLY)

    @property
    def resolved_aggregation(self) -> str:
        if self.aggregation is not None:
            return self.aggregation
        return AGG_SYMMETRIC if self.variant == VARIANT_GCN_BASELINE else AGG_MEAN

    def first_level_dim(self, feature_dim: int) -> int:
        """Width of the representation entering the propagation stack."""
        if self.uses_convolution:
            return self.conv.flat_dim(feature_dim, self.bandwidth)
        return feature_dim

    def to_dict(self) -> dict:
        d = {
            "variant": self.variant,
            "num_classes": self.num_classes,
            "bandwidth": self.bandwidth,
            "conv": None,
            "gcn_dims": list(self.gcn_dims),
            "dropout": self.dropout,
            "classifier_affine": self.classifier_affine,
            "aggregation": self.aggregation,
            "nfc_bias": self.nfc_bias,
        }
        if self.conv is not None:
            d["conv"] = {
                "mode": self.conv.mode,
                "filter_len": self.conv.filter_len,
                "num_filters": self.conv.num_filters,
                "stride_feat": self.conv.stride_feat,
                "width": self.conv.width,
                "stride_node": self.conv.stride_node,
            }
        return d

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        conv = None
        if d.get("conv"):
            c = d["conv"]
            conv = ConvSpec(mode=c["mode"], filter_len=c["filter_len"],
                            num_filters=c["num_filters"],
                            stride_feat=c.get("stride_feat", 1),
                            width=c.get("width"), stride_node=c.get("stride_node", 1))
        return ModelSpec(
            variant=d["variant"], num_classes=d["num_classes"],
            bandwidth=d.get("bandwidth", 6), conv=conv,
            gcn_dims=tuple(d.get("gcn_dims", ())), dropout=d.get("dropout", 0.5),
            classifier_affine=d.get("classifier_affine", True),
            aggregation=d.get("aggregation"), nfc_bias=d.get("nfc_bias", True),
        )


class ModelParams:
    """Parameter set for one model instance.

    Tensors appear in a fixed order (filters, filter bias, propagation
    weights, classifier weight/bias) so optimizer updates and gradient
    checks are deterministic.
    """

    def __init__(self, filters=None, filter_bias=None, layer_weights=(),
                 classifier_weight=None, classifier_bias=None):
        self.filters: ParamTensor | None = filters
        self.filter_bias: ParamTensor | None = filter_bias
        self.layer_weights: list[ParamTensor] = list(layer_weights)
        self.classifier_weight: ParamTensor | None = classifier_weight
        self.classifier_bias: ParamTensor | None = classifier_bias

    def all_params(self) -> list[ParamTensor]:
        out = []
        if self.filters is not None:
            out.append(self.filters)
        if self.filter_bias is not None:
            out.append(self.filter_bias)
        out.extend(self.layer_weights)
        if self.classifier_weight is not None:
            out.append(self.classifier_weight)
        if self.classifier_bias is not None:
            out.append(self.classifier_bias)
        return out

    def weight_tensors(self) -> list[ParamTensor]:
        """Weight matrices subject to the L2 penalty (biases excluded)."""
        out = []
        if self.filters is not None:
            out.append(self.filters)
        out.extend(self.layer_weights)
        if self.classifier_weight is not None:
            out.append(self.classifier_weight)
        return out

    def zero_grads(self):
        for p in self.all_params():
            p.zero_grad()

    def snapshot(self) -> dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.all_params()}

    def restore(self, snapshot: dict[str, np.ndarray]):
        for p in self.all_params():
            p.value[...] = snapshot[p.name]


def init_params(spec: ModelSpec, feature_dim: int,
                rng: np.random.Generator) -> ModelParams:
    """Glorot-uniform weights and zero biases, drawn in a fixed order."""
    params = ModelParams()
    if spec.uses_convolution:
        spec.conv.validate_input(feature_dim, spec.bandwidth)
        shape = spec.conv.filter_shape(spec.bandwidth)
        fan_in = spec.conv.patch_size(spec.bandwidth)
        params.filters = glorot_uniform(rng, shape, fan_in, spec.conv.num_filters,
                                        name="filters")
        if spec.nfc_bias:
            params.filter_bias = zeros_param((spec.conv.num_filters,), name="filter_bias")

    width = spec.first_level_dim(feature_dim)
    for k, dim in enumerate(spec.gcn_dims, start=1):
        params.layer_weights.append(
            glorot_uniform(rng, (width, dim), width, dim, name=f"gcn_{k}"))
        width = dim

    if spec.variant == VARIANT_GCN_BASELINE:
        params.classifier_weight = glorot_uniform(
            rng, (width, spec.num_classes), width, spec.num_classes, name="classifier_w")
    elif spec.classifier_affine:
        params.classifier_weight = glorot_uniform(
            rng, (width, spec.num_classes), width, spec.num_classes, name="classifier_w")
        params.classifier_bias = zeros_param((spec.num_classes,), name="classifier_b")
    return params


def build_aggregation(g: Graph, spec: ModelSpec):
    """Sparse propagation operator for the variant, or None if unused."""
    if spec.variant in (VARIANT_NFC_ONLY, VARIANT_MEAN_ONLY):
        return None
    if spec.resolved_aggregation == AGG_SYMMETRIC:
        return normalize_adjacency(g).matrix
    return mean_aggregation_matrix(g)


def build_inputs(g: Graph, spec: ModelSpec, sampling_seed):
    """Model inputs for a graph: sampled feature maps or raw features."""
    if spec.uses_feature_maps:
        inputs = sample_all(g, spec.bandwidth, sampling_seed)
    else:
        inputs = g.features
    return inputs, build_aggregation(g, spec)


@dataclass
class ForwardCache:
    """Intermediate activations kept for the backward pass."""

    training: bool
    first_level: np.ndarray
    layer_inputs: list[np.ndarray] = field(default_factory=list)
    layer_preacts: list[np.ndarray] = field(default_factory=list)
    layer_masks: list = field(default_factory=list)
    head_input: np.ndarray | None = None
    head_mask: object = None
    logits: np.ndarray | None = None


def _first_level(spec: ModelSpec, params: ModelParams, inputs) -> np.ndarray:
    if spec.uses_convolution:
        if not isinstance(inputs, FeatureMapBatch):
            raise ValueError(f"variant {spec.variant!r} expects sampled feature maps")
        patches = inputs.patches(spec.conv)
        flat = nfc_batch_forward(patches, params.filters, params.filter_bias)
        return flat.reshape(len(inputs), -1)
    if spec.variant == VARIANT_MEAN_ONLY:
        if not isinstance(inputs, FeatureMapBatch):
            raise ValueError("variant 'mean-only' expects sampled feature maps")
        return inputs.values.mean(axis=2)
    return np.asarray(inputs, dtype=np.float64)


def model_forward(spec: ModelSpec, params: ModelParams, agg, inputs,
                  training: bool = False,
                  rng: np.random.Generator | None = None) -> ForwardCache:
    """Run the full pipeline; returns a cache ending in logits."""
    cache = ForwardCache(training=training, first_level=_first_level(spec, params, inputs))
    h = cache.first_level
    n_layers = len(params.layer_weights)
    baseline = spec.variant == VARIANT_GCN_BASELINE
    for k, w in enumerate(params.layer_weights):
        if h.shape[1] != w.value.shape[0]:
            raise ValueError(
                f"propagation layer {k + 1}: input width {h.shape[1]} does not match "
                f"weight shape {w.value.shape}")
        hd, mask = dropout_forward(h, spec.dropout, training, rng)
        preact = agg @ (hd @ w.value)
        last = k == n_layers - 1
        if last and not baseline and not spec.classifier_affine:
            # Headless configuration: final pre-activation serves as logits.
            cache.layer_inputs.append(hd)
            cache.layer_preacts.append(preact)
            cache.layer_masks.append(mask)
            cache.logits = preact
            return cache
        h = relu_forward(preact)
        cache.layer_inputs.append(hd)
        cache.layer_preacts.append(preact)
        cache.layer_masks.append(mask)

    hd, mask = dropout_forward(h, spec.dropout, training, rng)
    cache.head_input = hd
    cache.head_mask = mask
    if baseline:
        w = params.classifier_weight
        if hd.shape[1] != w.value.shape[0]:
            raise ValueError(
                f"output layer: input width {hd.shape[1]} does not match "
                f"weight shape {w.value.shape}")
        cache.logits = agg @ (hd @ w.value)
    else:
        cache.logits = affine_forward(hd, params.classifier_weight,
                                      params.classifier_bias)
    return cache


def model_backward(spec: ModelSpec, params: ModelParams, cache: ForwardCache,
                   labels: np.ndarray, train_mask: np.ndarray, agg=None,
                   inputs=None, l2: float = 0.0) -> float:
    """Accumulate gradients of mean cross-entropy (+ L2) over masked rows.

    Only rows selected by ``train_mask`` contribute to the data term.
    Returns the data loss.
    """
    if cache.logits is None:
        raise ValueError("cache does not hold a completed forward pass")
    idx = np.flatnonzero(train_mask)
    dlogits = np.zeros_like(cache.logits)
    if idx.size:
        data_loss, g = softmax_cross_entropy(cache.logits[idx], labels[idx])
        dlogits[idx] = g
    else:
        data_loss = 0.0

    baseline = spec.variant == VARIANT_GCN_BASELINE
    headless = (not baseline and not spec.classifier_affine and params.layer_weights)

    if headless:
        # Logits were the last layer's pre-activation; start there.
        d = dlogits
        start = len(params.layer_weights) - 1
        du = agg.T @ d
        w = params.layer_weights[start]
        w.grad += cache.layer_inputs[start].T @ du
        d = dropout_backward(du @ w.value.T, cache.layer_masks[start])
        remaining = range(start - 1, -1, -1)
    else:
        if baseline:
            du = agg.T @ dlogits
            w = params.classifier_weight
            w.grad += cache.head_input.T @ du
            d = dropout_backward(du @ w.value.T, cache.head_mask)
        else:
            d = affine_backward(cache.head_input, params.classifier_weight, dlogits,
                                params.classifier_bias)
            d = dropout_backward(d, cache.head_mask)
        remaining = range(len(params.layer_weights) - 1, -1, -1)

    for k in remaining:
        d = relu_backward(cache.layer_preacts[k], d)
        du = agg.T @ d
        w = params.layer_weights[k]
        w.grad += cache.layer_inputs[k].T @ du
        d = dropout_backward(du @ w.value.T, cache.layer_masks[k])

    if spec.uses_convolution:
        if not isinstance(inputs, FeatureMapBatch):
            raise ValueError("backward for convolution variants needs the feature maps")
        patches = inputs.patches(spec.conv)
        grad_flat = d.reshape(patches.shape[0], patches.shape[1], spec.conv.num_filters)
        nfc_batch_backward(patches, params.filters, grad_flat, params.filter_bias)

    if l2:
        l2_penalty(params.weight_tensors(), l2)
    return data_loss


def model_loss(spec: ModelSpec, params: ModelParams, agg, inputs,
               labels: np.ndarray, train_mask: np.ndarray, l2: float = 0.0) -> float:
    """Deterministic scalar loss (dropout off) used by gradient checks."""
    cache = model_forward(spec, params, agg, inputs, training=False)
    idx = np.flatnonzero(train_mask)
    loss = 0.0
    if idx.size:
        loss, _ = softmax_cross_entropy(cache.logits[idx], labels[idx])
    if l2:
        loss += l2_penalty(params.weight_tensors(), l2, accumulate=False)
    return loss


def predict(spec: ModelSpec, params: ModelParams, agg, inputs) -> np.ndarray:
    """Per-node class prediction; argmax with ties to the lowest index."""
    cache = model_forward(spec, params, agg, inputs, training=False)
    return np.argmax(cache.logits, axis=1)


def save_checkpoint(path, spec: ModelSpec, params: ModelParams, feature_dim: int,
                    sampling_seed: int = 0):
    """Write parameters plus the spec needed to rebuild and validate them."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "spec": spec.to_dict(),
        "feature_dim": int(feature_dim),
        "sampling_seed": int(sampling_seed),
    }
    arrays = {f"param/{p.name}": p.value for p in params.all_params()}
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_checkpoint(path):
    """Load a checkpoint; validates the parameter shape chain.

    Returns (spec, params, feature_dim, sampling_seed).
    """
    with np.load(path, allow_pickle=False) as data:
        try:
            meta = json.loads(str(data["meta"]))
        except KeyError as exc:
            raise DataError(f"{path}: not a model checkpoint (missing meta)") from exc
        if meta.get("version") != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        spec = ModelSpec.from_dict(meta["spec"])
        feature_dim = int(meta["feature_dim"])
        reference = init_params(spec, feature_dim, np.random.default_rng(0))
        params = ModelParams()
        loaded = {}
        for key in data.files:
            if key.startswith("param/"):
                loaded[key[len("param/"):]] = np.array(data[key], dtype=np.float64)
    for p in reference.all_params():
        if p.name not in loaded:
            raise DataError(f"{path}: checkpoint is missing tensor {p.name!r}")
        if loaded[p.name].shape != p.value.shape:
            raise DataError(
                f"{path}: tensor {p.name!r} has shape {loaded[p.name].shape}, "
                f"expected {p.value.shape}")
    params.filters = _tensor_or_none(reference.filters, loaded)
    params.filter_bias = _tensor_or_none(reference.filter_bias, loaded)
    params.layer_weights = [ParamTensor(p.name, loaded[p.name])
                            for p in reference.layer_weights]
    params.classifier_weight = _tensor_or_none(reference.classifier_weight, loaded)
    params.classifier_bias = _tensor_or_none(reference.classifier_bias, loaded)
    return spec, params, feature_dim, int(meta["sampling_seed"])


def _tensor_or_none(ref: ParamTensor | None, loaded: dict):
    if ref is None:
        return None
    return ParamTensor(ref.name, loaded[ref.name])
