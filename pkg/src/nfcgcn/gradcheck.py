"""Finite-difference oracle for every analytic gradient.

Central differences over individual parameter coordinates, compared
against the backward pass with the relative error
|a - n| / max(|a|, |n|, 1e-8). Intended for desk-scale instances; large
tensors are subsampled deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .model import ModelSpec, build_inputs, init_params, model_backward, \
    model_forward, model_loss

_REL_FLOOR = 1e-8
_KINK_MARGIN = 1e-6
_COORD_STREAM = 202


@dataclass(frozen=True)
class TensorCheck:
    """Comparison result for one parameter tensor."""

    name: str
    max_rel_error: float
    mean_rel_error: float
    worst_index: tuple
    coords_checked: int


@dataclass
class GradCheckReport:
    """Aggregate of per-tensor comparisons against the numeric oracle."""

    tolerance: float
    checks: list[TensorCheck]

    @property
    def max_rel_error(self) -> float:
        return max((c.max_rel_error for c in self.checks), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def format_table(self) -> str:
        rows = [("tensor", "coords", "max rel err", "mean rel err", "worst index")]
        for c in self.checks:
            rows.append((c.name, str(c.coords_checked), f"{c.max_rel_error:.3e}",
                         f"{c.mean_rel_error:.3e}", str(c.worst_index)))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)) for r in rows]
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict} (max rel err {self.max_rel_error:.3e}, "
                     f"tolerance {self.tolerance:.1e})")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_rel_error": self.max_rel_error,
            "tensors": [
                {
                    "name": c.name,
                    "max_rel_error": c.max_rel_error,
                    "mean_rel_error": c.mean_rel_error,
                    "worst_index": list(c.worst_index),
                    "coords_checked": c.coords_checked,
                }
                for c in self.checks
            ],
        }


def finite_diff_grad(loss_fn, params, eps: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of ``loss_fn(params)`` per coordinate.

    ``params`` is a sequence of ParamTensors whose values are perturbed in
    place and restored. Non-finite losses are rejected.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    grads = []
    for p in params:
        flat = p.value.ravel()
        g = np.zeros(flat.size)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            up = loss_fn(params)
            flat[j] = orig - eps
            down = loss_fn(params)
            flat[j] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NumericError(f"non-finite loss while perturbing {p.name}[{j}]")
            g[j] = (up - down) / (2.0 * eps)
        grads.append(g.reshape(p.value.shape))
    return grads


def relative_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), _REL_FLOOR)
    return np.abs(analytic - numeric) / denom


def compare_grads(names, analytic, numeric, tolerance: float) -> GradCheckReport:
    """Assemble a report from per-tensor analytic/numeric gradient pairs."""
    checks = []
    for name, a, n in zip(names, analytic, numeric):
        rel = relative_errors(np.asarray(a, dtype=float), np.asarray(n, dtype=float))
        worst_flat = int(np.argmax(rel))
        checks.append(TensorCheck(
            name=name,
            max_rel_error=float(rel.ravel()[worst_flat]) if rel.size else 0.0,
            mean_rel_error=float(rel.mean()) if rel.size else 0.0,
            worst_index=tuple(int(v) for v in np.unravel_index(worst_flat, rel.shape))
            if rel.size else (),
            coords_checked=int(rel.size),
        ))
    return GradCheckReport(tolerance=tolerance, checks=checks)


def _min_kink_distance(spec, cache) -> float:
    """Smallest |pre-activation| feeding a ReLU; large means kink-free."""
    dists = [np.abs(a).min() for a in cache.layer_preacts if a.size]
    # The last pre-activation is not rectified in headless configurations.
    if not spec.classifier_affine and spec.variant != "gcn" and dists:
        dists = dists[:-1] or [np.inf]
    return float(min(dists)) if dists else np.inf


def check_model(spec: ModelSpec, graph, seed: int = 0, tolerance: float = 1e-4,
                eps: float = 1e-5, max_coords_per_tensor: int = 500,
                l2: float = 1e-4, max_reseeds: int = 64) -> GradCheckReport:
    """Compare the model's analytic gradients against central differences.

    The instance is re-seeded until no ReLU pre-activation sits within
    1e-6 of zero, avoiding false failures at the kink. Dropout must be
    disabled so the loss is a deterministic function of the parameters.
    Tensors larger than ``max_coords_per_tensor`` are subsampled with a
    deterministic coordinate choice.
    """
    if spec.dropout != 0.0:
        raise ValueError("gradient checking requires a spec with dropout 0")
    train_mask = graph.train_mask if graph.train_mask.any() else graph.labels >= 0
    if not train_mask.any():
        raise ValueError("gradient checking needs at least one labeled node")

    for attempt in range(max_reseeds):
        instance_seed = seed + attempt
        inputs, agg = build_inputs(graph, spec, sampling_seed=instance_seed)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=instance_seed, spawn_key=(_COORD_STREAM - 1,)))
        params = init_params(spec, graph.num_features, rng)
        cache = model_forward(spec, params, agg, inputs, training=False)
        if _min_kink_distance(spec, cache) > _KINK_MARGIN:
            break
    else:
        raise NumericError("could not find a kink-free instance to check")

    params.zero_grads()
    model_backward(spec, params, cache, graph.labels, train_mask,
                   agg=agg, inputs=inputs, l2=l2)
    tensors = params.all_params()
    analytic = [p.grad.copy() for p in tensors]

    coord_rng = np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(_COORD_STREAM,)))
    checks = []
    for p, a in zip(tensors, analytic):
        size = p.value.size
        if size > max_coords_per_tensor:
            coords = np.sort(coord_rng.choice(size, max_coords_per_tensor,
                                              replace=False))
        else:
            coords = np.arange(size)
        flat = p.value.ravel()
        numeric = np.zeros(coords.size)
        for out_i, j in enumerate(coords):
            orig = flat[j]
            flat[j] = orig + eps
            up = model_loss(spec, params, agg, inputs, graph.labels, train_mask, l2=l2)
            flat[j] = orig - eps
            down = model_loss(spec, params, agg, inputs, graph.labels, train_mask, l2=l2)
            flat[j] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NumericError(f"non-finite loss while perturbing {p.name}[{j}]")
            numeric[out_i] = (up - down) / (2.0 * eps)
        rel = relative_errors(a.ravel()[coords], numeric)
        worst = int(np.argmax(rel)) if rel.size else 0
        worst_coord = int(coords[worst]) if rel.size else 0
        checks.append(TensorCheck(
            name=p.name,
            max_rel_error=float(rel[worst]) if rel.size else 0.0,
            mean_rel_error=float(rel.mean()) if rel.size else 0.0,
            worst_index=tuple(int(v) for v in
                              np.unravel_index(worst_coord, p.value.shape)),
            coords_checked=int(rel.size),
        ))
    return GradCheckReport(tolerance=tolerance, checks=checks)
