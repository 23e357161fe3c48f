"""Scripted studies: repeated runs, ablations, sweeps, and curve exports.

Every experiment writes a self-contained results directory

    <out>/<experiment>/<dataset>/<timestamp>/
        config.json     complete echo; replaying it reproduces the numbers
        curves.csv      per-epoch metrics of the first seed
        summary.json    aggregate and per-seed results
        *.png           rendered figures

The swept variable is the only thing that changes across a sweep's grid;
splits and all other settings are shared.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime
from pathlib import Path

import numpy as np

from . import plots
from .model import (
    VARIANT_GCN_BASELINE,
    VARIANT_MEAN_ONLY,
    VARIANT_NFC_ONLY,
    ModelSpec,
)
from .training import RunConfig, RunResult, train

CURVES_HEADER = "epoch,train_loss,val_loss,train_acc,val_acc"


def worker_count() -> int:
    """Concurrent training runs, capped by the NFCGCN_THREADS env var."""
    raw = os.environ.get("NFCGCN_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_seeds(g, cfg: RunConfig, seeds) -> list[RunResult]:
    """Train one run per seed; results ordered like ``seeds``."""
    workers = worker_count()
    if workers == 1 or len(seeds) == 1:
        return [train(g, cfg.with_seed(s)) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(train, g, cfg.with_seed(s)) for s in seeds]
        return [f.result() for f in futures]


def _acc_stats(results) -> tuple[float, float]:
    accs = np.array([r.test_acc for r in results])
    return float(accs.mean()), float(accs.std())


def _per_seed(results) -> list[dict]:
    return [
        {
            "seed": r.config.seed,
            "test_acc": r.test_acc,
            "best_epoch": r.best_epoch,
            "epochs_run": len(r.curves),
            "seconds": round(r.seconds, 3),
        }
        for r in results
    ]


def _result_dir(out, experiment: str, dataset: str) -> Path:
    stamp = datetime.now().strftime("%Y%m%dT%H%M%S.%f")
    d = Path(out) / experiment / dataset / stamp
    d.mkdir(parents=True, exist_ok=True)
    return d


def export_curves(run: RunResult, path):
    """Per-epoch CSV with the exact header ``epoch,train_loss,...``."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(CURVES_HEADER.split(","))
        for r in run.curves:
            writer.writerow([r.epoch, r.train_loss, r.val_loss, r.train_acc, r.val_acc])


def _write_artifacts(out_dir: Path | None, config_echo: dict, summary: dict,
                     first_run: RunResult | None):
    if out_dir is None:
        return
    with open(out_dir / "config.json", "w", encoding="utf-8") as f:
        json.dump(config_echo, f, indent=2, sort_keys=True)
    with open(out_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    if first_run is not None:
        export_curves(first_run, out_dir / "curves.csv")
        plots.save_curve_figure(first_run.curves, out_dir / "curves.png",
                                title=f"{summary['experiment']} seed "
                                      f"{first_run.config.seed}")


def run_main(g, cfg: RunConfig, repeats: int = 10, base_seed: int = 0,
             out=None, dataset: str = "dataset") -> dict:
    """Repeat one configuration over consecutive seeds; report mean/std."""
    seeds = [base_seed + i for i in range(repeats)]
    results = _run_seeds(g, cfg, seeds)
    mean, std = _acc_stats(results)
    summary = {
        "experiment": "main",
        "dataset": dataset,
        "variant": cfg.model.variant,
        "seeds": seeds,
        "mean_test_acc": mean,
        "std_test_acc": std,
        "per_seed": _per_seed(results),
    }
    echo = {"experiment": "main", "dataset": dataset, "config": cfg.to_dict(),
            "repeats": repeats, "base_seed": base_seed}
    out_dir = _result_dir(out, "main", dataset) if out else None
    _write_artifacts(out_dir, echo, summary, results[0])
    if out_dir:
        summary["results_dir"] = str(out_dir)
    return summary


def ablation_specs(base: ModelSpec) -> dict[str, ModelSpec]:
    """First-level-only variants sharing the base convolution geometry."""
    nfc_only = replace(base, variant=VARIANT_NFC_ONLY, gcn_dims=(),
                       classifier_affine=True, aggregation=None)
    mean_only = replace(base, variant=VARIANT_MEAN_ONLY, gcn_dims=(), conv=None,
                        classifier_affine=True, aggregation=None)
    return {VARIANT_NFC_ONLY: nfc_only, VARIANT_MEAN_ONLY: mean_only}


def run_ablation_no_gcn(g, cfg: RunConfig, repeats: int = 10, base_seed: int = 0,
                        out=None, dataset: str = "dataset") -> dict:
    """Classifier directly on the first-level representation.

    Compares the convolution path against plain mean pooling of the same
    sampled feature maps.
    """
    seeds = [base_seed + i for i in range(repeats)]
    variants = {}
    first_run = None
    for name, spec in ablation_specs(cfg.model).items():
        results = _run_seeds(g, replace(cfg, model=spec), seeds)
        mean, std = _acc_stats(results)
        variants[name] = {"mean_test_acc": mean, "std_test_acc": std,
                          "per_seed": _per_seed(results)}
        if first_run is None:
            first_run = results[0]
    gap = (variants[VARIANT_NFC_ONLY]["mean_test_acc"]
           - variants[VARIANT_MEAN_ONLY]["mean_test_acc"])
    summary = {
        "experiment": "no-gcn",
        "dataset": dataset,
        "bandwidth": cfg.model.bandwidth,
        "seeds": seeds,
        "variants": variants,
        "gap_points": 100.0 * gap,
    }
    echo = {"experiment": "no-gcn", "dataset": dataset, "config": cfg.to_dict(),
            "repeats": repeats, "base_seed": base_seed}
    out_dir = _result_dir(out, "no-gcn", dataset) if out else None
    _write_artifacts(out_dir, echo, summary, first_run)
    if out_dir:
        plots.save_bar_figure(
            list(variants), [v["mean_test_acc"] for v in variants.values()],
            out_dir / "ablation.png", title=f"no-gcn ablation ({dataset})")
        summary["results_dir"] = str(out_dir)
    return summary


def run_bandwidth_sweep(g, cfg: RunConfig, n_values=(2, 3, 4, 5, 6),
                        seeds_per_point: int = 5, base_seed: int = 0,
                        out=None, dataset: str = "dataset") -> dict:
    """Vary the sampling bandwidth with the architecture held fixed."""
    seeds = [base_seed + i for i in range(seeds_per_point)]
    points = []
    first_run = None
    for n in n_values:
        spec = replace(cfg.model, bandwidth=int(n))
        results = _run_seeds(g, replace(cfg, model=spec), seeds)
        mean, std = _acc_stats(results)
        points.append({"bandwidth": int(n), "mean_test_acc": mean,
                       "std_test_acc": std, "per_seed": _per_seed(results)})
        if first_run is None:
            first_run = results[0]
    summary = {
        "experiment": "bandwidth",
        "dataset": dataset,
        "seeds": seeds,
        "points": points,
    }
    echo = {"experiment": "bandwidth", "dataset": dataset, "config": cfg.to_dict(),
            "n_values": [int(n) for n in n_values],
            "seeds_per_point": seeds_per_point, "base_seed": base_seed}
    out_dir = _result_dir(out, "bandwidth", dataset) if out else None
    _write_artifacts(out_dir, echo, summary, first_run)
    if out_dir:
        plots.save_sweep_figure(
            [p["bandwidth"] for p in points], [p["mean_test_acc"] for p in points],
            [p["std_test_acc"] for p in points], "bandwidth",
            out_dir / "bandwidth.png", title=f"bandwidth sweep ({dataset})")
        summary["results_dir"] = str(out_dir)
    return summary


def depth_dims(base: ModelSpec, depth: int) -> tuple[int, ...]:
    """Propagation widths for a model ``depth`` layers deep.

    Hidden layers reuse the base architecture's first width; the last
    propagation layer matches the class count, mirroring the shipped
    presets. The ``gcn`` baseline's implicit output layer counts toward
    the depth, so it gets one fewer explicit width.
    """
    hidden = base.gcn_dims[0] if base.gcn_dims else 16
    if base.variant == VARIANT_GCN_BASELINE:
        return (hidden,) * (depth - 1)
    return (hidden,) * (depth - 1) + (base.num_classes,)


def run_depth_sweep(g, cfg: RunConfig, depths=(1, 2, 3, 4, 5),
                    seeds_per_point: int = 5, base_seed: int = 0,
                    baseline_cfg: RunConfig | None = None,
                    out=None, dataset: str = "dataset") -> dict:
    """Vary the number of propagation layers; optionally track the baseline."""
    seeds = [base_seed + i for i in range(seeds_per_point)]
    points = []
    baseline_points = []
    first_run = None
    for depth in depths:
        spec = replace(cfg.model, gcn_dims=depth_dims(cfg.model, depth))
        results = _run_seeds(g, replace(cfg, model=spec), seeds)
        mean, std = _acc_stats(results)
        points.append({"depth": int(depth), "mean_test_acc": mean,
                       "std_test_acc": std, "per_seed": _per_seed(results)})
        if first_run is None:
            first_run = results[0]
        if baseline_cfg is not None:
            bspec = replace(baseline_cfg.model,
                            gcn_dims=depth_dims(baseline_cfg.model, depth))
            bresults = _run_seeds(g, replace(baseline_cfg, model=bspec), seeds)
            bmean, bstd = _acc_stats(bresults)
            baseline_points.append({"depth": int(depth), "mean_test_acc": bmean,
                                    "std_test_acc": bstd,
                                    "per_seed": _per_seed(bresults)})
    means = [p["mean_test_acc"] for p in points]
    summary = {
        "experiment": "depth",
        "dataset": dataset,
        "seeds": seeds,
        "points": points,
        "spread_points": 100.0 * (max(means) - min(means)),
    }
    if baseline_points:
        summary["baseline_points"] = baseline_points
    echo = {"experiment": "depth", "dataset": dataset, "config": cfg.to_dict(),
            "depths": [int(d) for d in depths], "seeds_per_point": seeds_per_point,
            "base_seed": base_seed,
            "baseline_config": baseline_cfg.to_dict() if baseline_cfg else None}
    out_dir = _result_dir(out, "depth", dataset) if out else None
    _write_artifacts(out_dir, echo, summary, first_run)
    if out_dir:
        series = {cfg.model.variant: means}
        if baseline_points:
            series["gcn"] = [p["mean_test_acc"] for p in baseline_points]
        plots.save_series_figure(list(depths), series, "propagation layers",
                                 out_dir / "depth.png",
                                 title=f"depth sweep ({dataset})")
        summary["results_dir"] = str(out_dir)
    return summary


def best_epoch_within(curves, tolerance_points: float = 0.5) -> tuple[int, float]:
    """Earliest epoch whose val accuracy is within tolerance of the best."""
    accs = np.array([r.val_acc for r in curves])
    best = float(np.nanmax(accs))
    threshold = best - tolerance_points / 100.0
    hit = int(np.flatnonzero(accs >= threshold)[0])
    return curves[hit].epoch, best


def run_curves(g, cfg: RunConfig, repeats: int = 10, base_seed: int = 0,
               epochs: int = 200, out=None, dataset: str = "dataset") -> dict:
    """Fixed-length runs with early stopping disabled, for convergence study."""
    fixed = replace(cfg, early_stopping=False, max_epochs=epochs,
                    patience=min(cfg.patience, epochs))
    seeds = [base_seed + i for i in range(repeats)]
    results = _run_seeds(g, fixed, seeds)
    per_seed = []
    for r in results:
        attained, best = best_epoch_within(r.curves)
        per_seed.append({"seed": r.config.seed, "best_val_acc": best,
                         "best_epoch": r.best_epoch,
                         "epoch_within_half_point": attained,
                         "test_acc": r.test_acc})
    summary = {
        "experiment": "curves",
        "dataset": dataset,
        "epochs": epochs,
        "seeds": seeds,
        "per_seed": per_seed,
    }
    echo = {"experiment": "curves", "dataset": dataset, "config": fixed.to_dict(),
            "repeats": repeats, "base_seed": base_seed, "epochs": epochs}
    out_dir = _result_dir(out, "curves", dataset) if out else None
    _write_artifacts(out_dir, echo, summary, results[0])
    if out_dir:
        summary["results_dir"] = str(out_dir)
    return summary


def replay(g, config_path) -> dict:
    """Re-run an experiment from its config echo; returns a fresh summary.

    Replayed summaries match the original numbers exactly (same seeds,
    same deterministic pipeline); only artifact paths differ.
    """
    with open(config_path, encoding="utf-8") as f:
        echo = json.load(f)
    cfg = RunConfig.from_dict(echo["config"])
    name = echo["experiment"]
    dataset = echo.get("dataset", "dataset")
    if name == "main":
        return run_main(g, cfg, repeats=echo["repeats"],
                        base_seed=echo["base_seed"], dataset=dataset)
    if name == "no-gcn":
        return run_ablation_no_gcn(g, cfg, repeats=echo["repeats"],
                                   base_seed=echo["base_seed"], dataset=dataset)
    if name == "bandwidth":
        return run_bandwidth_sweep(g, cfg, n_values=echo["n_values"],
                                   seeds_per_point=echo["seeds_per_point"],
                                   base_seed=echo["base_seed"], dataset=dataset)
    if name == "depth":
        baseline = (RunConfig.from_dict(echo["baseline_config"])
                    if echo.get("baseline_config") else None)
        return run_depth_sweep(g, cfg, depths=echo["depths"],
                               seeds_per_point=echo["seeds_per_point"],
                               base_seed=echo["base_seed"],
                               baseline_cfg=baseline, dataset=dataset)
    if name == "curves":
        return run_curves(g, cfg, repeats=echo["repeats"],
                          base_seed=echo["base_seed"], epochs=echo["epochs"],
                          dataset=dataset)
    raise ValueError(f"unknown experiment {name!r} in {config_path}")
