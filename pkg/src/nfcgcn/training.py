"""Adam optimization, the training loop, and evaluation."""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericError
from .model import (
    ModelParams,
    ModelSpec,
    build_inputs,
    init_params,
    model_backward,
    model_forward,
    sample_all,
)
from .ops import softmax_cross_entropy

# Spawn keys deriving independent rng streams from one run seed.
_INIT_STREAM = 101
_DROPOUT_STREAM = 102
_EPOCH_RESAMPLE_STREAM = 103


@dataclass(frozen=True)
class RunConfig:
    """All knobs for one training run.

    The dropout rate lives on ``model``; it is exposed here read-only for
    config echoes. ``resample_per_epoch`` redraws the neighbor sample
    before every training step; evaluation always uses the base sample so
    per-epoch metrics stay comparable.
    """

    model: ModelSpec
    lr: float = 0.002
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    l2: float = 1e-4
    max_epochs: int = 200
    patience: int = 30
    seed: int = 0
    resample_per_epoch: bool = False
    early_stopping: bool = True

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be non-negative")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0 <= self.patience <= self.max_epochs:
            raise ValueError("patience must be in [0, max_epochs]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def dropout(self) -> float:
        return self.model.dropout

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "l2": self.l2,
            "dropout": self.dropout,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
            "resample_per_epoch": self.resample_per_epoch,
            "early_stopping": self.early_stopping,
        }

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        return RunConfig(
            model=ModelSpec.from_dict(d["model"]),
            lr=d["lr"], beta1=d.get("beta1", 0.9), beta2=d.get("beta2", 0.999),
            eps=d.get("eps", 1e-8), l2=d["l2"], max_epochs=d["max_epochs"],
            patience=d["patience"], seed=d["seed"],
            resample_per_epoch=d.get("resample_per_epoch", False),
            early_stopping=d.get("early_stopping", True),
        )


@dataclass(frozen=True)
class EpochRecord:
    """Metrics after one optimizer step, measured with dropout off."""

    epoch: int
    train_loss: float
    val_loss: float
    train_acc: float
    val_acc: float


@dataclass
class RunResult:
    """Outcome of one training run.

    ``best_epoch`` maximizes validation accuracy over the curves (earliest
    on ties); ``params`` holds that epoch's weights and ``test_acc`` is
    their accuracy on the test mask.
    """

    best_epoch: int
    test_acc: float
    curves: list[EpochRecord]
    params: ModelParams
    config: RunConfig
    seconds: float = 0.0
    checkpoint_path: str | None = None


class AdamState:
    """First/second moment buffers keyed by parameter name."""

    def __init__(self, params: ModelParams):
        self.t = 0
        self.m = {p.name: np.zeros_like(p.value) for p in params.all_params()}
        self.v = {p.name: np.zeros_like(p.value) for p in params.all_params()}


def adam_step(params: ModelParams, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update, applied in fixed parameter order."""
    state.t += 1
    t = state.t
    for p in params.all_params():
        m = state.m[p.name]
        v = state.v[p.name]
        m *= beta1
        m += (1 - beta1) * p.grad
        v *= beta2
        v += (1 - beta2) * (p.grad ** 2)
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _masked_metrics(logits: np.ndarray, labels: np.ndarray, mask: np.ndarray):
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return float("nan"), float("nan")
    loss, _ = softmax_cross_entropy(logits[idx], labels[idx])
    acc = float((np.argmax(logits[idx], axis=1) == labels[idx]).mean())
    return loss, acc


def train(g, cfg: RunConfig) -> RunResult:
    """Full-batch training with early stopping on validation accuracy.

    Deterministic in ``cfg.seed``: initialization, dropout, and neighbor
    sampling all derive from it. Aborts with :class:`NumericError` if the
    loss or the logits stop being finite.
    """
    spec = cfg.model
    if not g.train_mask.any():
        raise ValueError("training requires a non-empty train mask")
    has_val = bool(g.val_mask.any())
    start = time.perf_counter()

    inputs, agg = build_inputs(g, spec, sampling_seed=cfg.seed)
    init_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_INIT_STREAM,)))
    dropout_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=cfg.seed, spawn_key=(_DROPOUT_STREAM,)))
    params = init_params(spec, g.num_features, init_rng)
    state = AdamState(params)

    records: list[EpochRecord] = []
    best_epoch = 0
    best_val = -np.inf
    best_snapshot = None
    stale = 0

    for epoch in range(1, cfg.max_epochs + 1):
        train_inputs = inputs
        if cfg.resample_per_epoch and epoch > 1 and spec.uses_feature_maps:
            train_inputs = sample_all(
                g, spec.bandwidth,
                seed=(cfg.seed, _EPOCH_RESAMPLE_STREAM, epoch))

        params.zero_grads()
        fcache = model_forward(spec, params, agg, train_inputs,
                               training=True, rng=dropout_rng)
        step_loss = model_backward(spec, params, fcache, g.labels, g.train_mask,
                                   agg=agg, inputs=train_inputs, l2=cfg.l2)
        if not np.isfinite(step_loss):
            raise NumericError(f"non-finite training loss at epoch {epoch}")
        adam_step(params, state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)

        del fcache  # free training activations before the metrics pass
        ecache = model_forward(spec, params, agg, inputs, training=False)
        if not np.isfinite(ecache.logits).all():
            raise NumericError(f"non-finite logits at epoch {epoch}")
        train_loss, train_acc = _masked_metrics(ecache.logits, g.labels, g.train_mask)
        val_loss, val_acc = _masked_metrics(ecache.logits, g.labels, g.val_mask)
        records.append(EpochRecord(epoch, train_loss, val_loss, train_acc, val_acc))

        if has_val:
            if val_acc > best_val:
                best_val = val_acc
                best_epoch = epoch
                best_snapshot = params.snapshot()
                stale = 0
            else:
                stale += 1
                if cfg.early_stopping and stale >= max(cfg.patience, 1):
                    break
        else:
            best_epoch = epoch

    if best_snapshot is not None:
        params.restore(best_snapshot)

    if g.test_mask.any():
        final = model_forward(spec, params, agg, inputs, training=False)
        _, test_acc = _masked_metrics(final.logits, g.labels, g.test_mask)
    else:
        test_acc = float("nan")

    return RunResult(best_epoch=best_epoch, test_acc=test_acc, curves=records,
                     params=params, config=cfg,
                     seconds=time.perf_counter() - start)


def evaluate(g, params: ModelParams, spec: ModelSpec, mask: np.ndarray,
             inputs=None, agg=None, sampling_seed: int = 0) -> float:
    """Fraction of masked nodes whose prediction matches the label.

    Pass ``inputs`` and ``agg`` together to reuse prepared state;
    otherwise both are rebuilt from ``sampling_seed``.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("evaluation mask selects no nodes")
    if inputs is None:
        inputs, agg = build_inputs(g, spec, sampling_seed=sampling_seed)
    cache = model_forward(spec, params, agg, inputs, training=False)
    preds = np.argmax(cache.logits, axis=1)
    return float((preds[mask] == g.labels[mask]).mean())
