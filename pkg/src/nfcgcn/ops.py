"""Differentiable primitives with hand-derived backward passes.

Everything operates on float64 numpy arrays. Parameters are
:class:`ParamTensor` objects carrying a gradient slot; backward passes
accumulate into those slots and return the gradient with respect to
their input where one exists.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NumericError

MODE_1D = "conv1d"
MODE_2D = "conv2d"


@dataclass(frozen=True)
class ConvSpec:
    """Geometry of the node-feature convolution.

    ``conv1d`` slides a length-``filter_len`` window along the feature
    axis only, treating all ``bandwidth`` map columns as input channels.
    ``conv2d`` slides a ``filter_len x width`` window over the single-channel
    map, stepping ``stride_node`` along the column axis.
    """

    mode: str
    filter_len: int
    num_filters: int
    stride_feat: int = 1
    width: int | None = None
    stride_node: int = 1

    def __post_init__(self):
        if self.mode not in (MODE_1D, MODE_2D):
            raise ValueError(f"unknown convolution mode {self.mode!r}")
        if self.filter_len < 1:
            raise ValueError("filter_len must be >= 1")
        if self.num_filters < 1:
            raise ValueError("num_filters must be >= 1")
        if self.stride_feat < 1:
            raise ValueError("stride_feat must be >= 1")
        if self.mode == MODE_2D:
            if self.width is None or self.width < 1:
                raise ValueError("conv2d requires width >= 1")
            if self.stride_node < 1:
                raise ValueError("stride_node must be >= 1")

    def validate_input(self, feature_dim: int, bandwidth: int):
        if self.filter_len > feature_dim:
            raise ValueError(
                f"filter_len {self.filter_len} exceeds feature dimension {feature_dim}")
        if self.mode == MODE_2D and self.width > bandwidth:
            raise ValueError(f"width {self.width} exceeds bandwidth {bandwidth}")

    def out_len(self, feature_dim: int) -> int:
        """Output positions along the feature axis (valid padding)."""
        return (feature_dim - self.filter_len) // self.stride_feat + 1

    def out_width(self, bandwidth: int) -> int:
        """Output positions along the node axis (1 for conv1d)."""
        if self.mode == MODE_1D:
            return 1
        return (bandwidth - self.width) // self.stride_node + 1

    def num_positions(self, feature_dim: int, bandwidth: int) -> int:
        return self.out_len(feature_dim) * self.out_width(bandwidth)

    def patch_size(self, bandwidth: int) -> int:
        """Entries gathered per output position."""
        if self.mode == MODE_1D:
            return self.filter_len * bandwidth
        return self.filter_len * self.width

    def flat_dim(self, feature_dim: int, bandwidth: int) -> int:
        """Length of the flattened per-node output vector."""
        return self.num_positions(feature_dim, bandwidth) * self.num_filters

    def filter_shape(self, bandwidth: int) -> tuple[int, int, int]:
        if self.mode == MODE_1D:
            return (self.num_filters, self.filter_len, bandwidth)
        return (self.num_filters, self.filter_len, self.width)

    def out_shape(self, feature_dim: int, bandwidth: int) -> tuple[int, ...]:
        if self.mode == MODE_1D:
            return (self.out_len(feature_dim), self.num_filters)
        return (self.out_len(feature_dim), self.out_width(bandwidth), self.num_filters)


class ParamTensor:
    """Trainable tensor with a same-shape gradient slot."""

    def __init__(self, name: str, value, init: str = "explicit"):
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.init = init

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"ParamTensor({self.name!r}, shape={self.value.shape})"


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int,
                   name: str) -> ParamTensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    t = ParamTensor(name, rng.uniform(-limit, limit, size=shape), init="glorot_uniform")
    return t


def zeros_param(shape, name: str) -> ParamTensor:
    return ParamTensor(name, np.zeros(shape), init="zeros")


def _map_values(fm) -> np.ndarray:
    # Accepts a FeatureMap-like object (has .values) or a raw (D, n) array.
    return np.asarray(getattr(fm, "values", fm), dtype=np.float64)


def extract_patches(values: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Gather convolution windows from a batch of feature maps.

    Args:
        values: (N, D, n) batch of per-node maps.
        spec: convolution geometry; validated against D and n.

    Returns:
        (N, P, K) array where P = out_len * out_width positions and
        K = patch_size entries per position, laid out to match a
        row-major flattening of the filter tensor.
    """
    n_nodes, feature_dim, bandwidth = values.shape
    spec.validate_input(feature_dim, bandwidth)
    if spec.mode == MODE_1D:
        win = sliding_window_view(values, spec.filter_len, axis=1)  # (N, D-k+1, n, k)
        win = win[:, ::spec.stride_feat]
        win = win.transpose(0, 1, 3, 2)  # (N, P, k, n)
        return win.reshape(n_nodes, spec.out_len(feature_dim), -1)
    win = sliding_window_view(values, (spec.filter_len, spec.width), axis=(1, 2))
    win = win[:, ::spec.stride_feat, ::spec.stride_node]  # (N, D', n', k, w)
    return win.reshape(n_nodes, spec.num_positions(feature_dim, bandwidth), -1)


def nfc_forward(fm, filters: ParamTensor, spec: ConvSpec, bias: ParamTensor | None = None):
    """Convolve one D x n feature map with the filter bank.

    Returns (out_len, num_filters) for conv1d or
    (out_len, out_width, num_filters) for conv2d, valid padding.
    """
    values = _map_values(fm)
    feature_dim, bandwidth = values.shape
    patches = extract_patches(values[None], spec)  # (1, P, K)
    flat = nfc_batch_forward(patches, filters, bias)  # (1, P, c)
    return flat[0].reshape(spec.out_shape(feature_dim, bandwidth))


def nfc_batch_forward(patches: np.ndarray, filters: ParamTensor,
                      bias: ParamTensor | None = None) -> np.ndarray:
    """Batched convolution on pre-extracted patches; returns (N, P, c)."""
    n_nodes, positions, patch = patches.shape
    w = filters.value.reshape(filters.value.shape[0], -1)  # (c, K)
    if w.shape[1] != patch:
        raise ValueError(f"filter patch size {w.shape[1]} does not match input {patch}")
    out = patches.reshape(-1, patch) @ w.T
    if bias is not None:
        out += bias.value
    return out.reshape(n_nodes, positions, -1)


def nfc_backward(fm, filters: ParamTensor, spec: ConvSpec, grad_out,
                 bias: ParamTensor | None = None) -> np.ndarray:
    """Backward of :func:`nfc_forward`; accumulates filter/bias gradients.

    Returns the gradient with respect to the feature map.
    """
    values = _map_values(fm)
    feature_dim, bandwidth = values.shape
    grad_out = np.asarray(grad_out, dtype=np.float64)
    expected = spec.out_shape(feature_dim, bandwidth)
    if grad_out.shape != expected:
        raise ValueError(f"grad shape {grad_out.shape} does not match output {expected}")
    patches = extract_patches(values[None], spec)
    g = grad_out.reshape(1, spec.num_positions(feature_dim, bandwidth), spec.num_filters)
    nfc_batch_backward(patches, filters, g, bias)

    # Scatter patch gradients back onto the map.
    gp = (g.reshape(-1, spec.num_filters)
          @ filters.value.reshape(spec.num_filters, -1))  # (P, K)
    grad_map = np.zeros_like(values)
    out_len = spec.out_len(feature_dim)
    if spec.mode == MODE_1D:
        gp = gp.reshape(out_len, spec.filter_len, bandwidth)
        for p in range(out_len):
            grad_map[p * spec.stride_feat:p * spec.stride_feat + spec.filter_len] += gp[p]
    else:
        out_w = spec.out_width(bandwidth)
        gp = gp.reshape(out_len, out_w, spec.filter_len, spec.width)
        for p in range(out_len):
            r = p * spec.stride_feat
            for q in range(out_w):
                c = q * spec.stride_node
                grad_map[r:r + spec.filter_len, c:c + spec.width] += gp[p, q]
    return grad_map


def nfc_batch_backward(patches: np.ndarray, filters: ParamTensor, grad_flat: np.ndarray,
                       bias: ParamTensor | None = None):
    """Accumulate filter/bias gradients from batched output gradients.

    ``grad_flat`` is (N, P, c), matching :func:`nfc_batch_forward` output.
    Input gradients are not produced; feature maps are model inputs.
    """
    n_nodes, positions, c = grad_flat.shape
    g = grad_flat.reshape(-1, c)
    p = patches.reshape(n_nodes * positions, -1)
    filters.grad += (g.T @ p).reshape(filters.value.shape)
    if bias is not None:
        bias.grad += g.sum(axis=0)


def nfc_flatten(t: np.ndarray) -> np.ndarray:
    """Row-major flattening of a rank-2 or rank-3 convolution output."""
    t = np.asarray(t)
    if t.ndim not in (2, 3):
        raise ValueError(f"expected rank-2 or rank-3 input, got rank {t.ndim}")
    return t.reshape(-1)


def affine_forward(x: np.ndarray, w: ParamTensor, b: ParamTensor | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != w.value.shape[0]:
        raise ValueError(
            f"input width {x.shape[-1]} does not match weight rows {w.value.shape[0]}")
    out = x @ w.value
    if b is not None:
        out += b.value
    return out


def affine_backward(x: np.ndarray, w: ParamTensor, grad_out: np.ndarray,
                    b: ParamTensor | None = None) -> np.ndarray:
    """Accumulates weight/bias gradients; returns the input gradient."""
    x2 = x.reshape(-1, x.shape[-1])
    g2 = grad_out.reshape(-1, grad_out.shape[-1])
    w.grad += x2.T @ g2
    if b is not None:
        b.grad += g2.sum(axis=0)
    return grad_out @ w.value.T


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return grad_out * (x > 0)


def dropout_forward(x: np.ndarray, rate: float, training: bool,
                    rng: np.random.Generator | None = None):
    """Inverted dropout. Returns (output, mask); mask is None when inactive.

    Kept entries are scaled by 1/(1 - rate) so eval mode is the identity.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout requires an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(grad_out: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return grad_out
    return grad_out * mask


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray,
                          reduction: str = "mean"):
    """Cross-entropy of row-wise softmax against integer labels.

    Returns (loss, grad_logits). With ``reduction="mean"`` both the loss
    and the gradient are divided by the row count; ``"sum"`` leaves the
    plain per-row sum.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ValueError("logits must be (M, F) with labels of shape (M,)")
    if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
        bad = labels[(labels < 0) | (labels >= logits.shape[1])][0]
        raise ValueError(f"label {bad} outside [0, {logits.shape[1]})")
    if not np.isfinite(logits).all():
        raise NumericError("non-finite logits passed to softmax_cross_entropy")
    if reduction not in ("mean", "sum"):
        raise ValueError(f"unknown reduction {reduction!r}")

    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(logits.shape[0])
    nll = log_norm - z[rows, labels]
    grad = np.exp(z - log_norm[:, None])
    grad[rows, labels] -= 1.0
    if reduction == "mean" and logits.shape[0] > 0:
        return float(nll.mean()), grad / logits.shape[0]
    return float(nll.sum()), grad


def l2_penalty(weights, lam: float, accumulate: bool = True) -> float:
    """lam * sum of squared entries over the given weight tensors.

    Biases are excluded by convention: callers pass weight matrices only.
    When ``accumulate`` is set, adds 2 * lam * W to each gradient slot.
    """
    value = 0.0
    for w in weights:
        value += float((w.value ** 2).sum())
        if accumulate:
            w.grad += (2.0 * lam) * w.value
    return lam * value
