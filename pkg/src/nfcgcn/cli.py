"""Command-line entry point.

Subcommands: prepare, train, eval, gradcheck, experiment. Exit codes:
0 success, 1 data error, 2 usage error, 3 numeric failure. Paths are
resolved against --workdir. NFCGCN_THREADS caps concurrent runs inside
experiment sweeps.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime
from pathlib import Path

from . import experiments
from .datasets import (
    PLANETOID_STYLE,
    SPLIT_PRESETS,
    SplitSpec,
    load_canonical,
    load_id_map,
    make_split,
    parse_linqs,
    save_canonical,
    split_from_preset,
)
from .errors import DataError, NumericError
from .gradcheck import check_model
from .model import (
    VARIANTS,
    ModelSpec,
    load_checkpoint,
    save_checkpoint,
)
from .ops import ConvSpec
from .plots import save_curve_figure
from .presets import apply_overrides, available_presets, load_preset, \
    run_config_from_preset
from .synthetic import random_graph
from .training import evaluate, train


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfcgcn",
        description="Node classification with node-feature convolution GCNs.")
    parser.add_argument("--workdir", default=".",
                        help="base directory for relative paths (default: .)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="convert a raw dataset to canonical TSV")
    p.add_argument("--input", required=True, help="raw dataset directory")
    p.add_argument("--format", required=True, choices=["linqs", "canonical"])
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--split", default=None,
                   help="split preset name or 'train,val,test' counts")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train one model from a preset")
    p.add_argument("--data", required=True, help="canonical dataset directory")
    p.add_argument("--preset", required=True)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")
    p.add_argument("--resample-per-epoch", action="store_true")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset mask")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mask", default="test", choices=["train", "val", "test"])
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("gradcheck", help="finite-difference check of all gradients")
    p.add_argument("--variant", action="append", default=[], choices=list(VARIANTS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("experiment", help="run a scripted study")
    p.add_argument("kind", choices=["main", "no-gcn", "bandwidth", "depth", "curves"])
    p.add_argument("--data", required=True)
    p.add_argument("--preset", required=True)
    p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--repeats", type=int, default=10,
                   help="seeds for main/no-gcn/curves (default 10)")
    p.add_argument("--seeds", type=int, default=5,
                   help="seeds per grid point for sweeps (default 5)")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--epochs", type=int, default=200, help="epochs for curves")
    p.add_argument("--out", default="results")
    p.add_argument("--json", action="store_true")
    return parser


def _resolve(workdir: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else workdir / path


def _emit(payload: dict, as_json: bool, text: str):
    if as_json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _load_graph(data_dir: Path):
    g = load_canonical(data_dir)
    return g


def _apply_split(g, split_arg: str, seed: int):
    names = sorted([*SPLIT_PRESETS, PLANETOID_STYLE])
    if split_arg in names:
        return g.with_masks(*split_from_preset(g, split_arg, seed))
    parts = split_arg.split(",")
    if len(parts) != 3:
        raise ValueError(
            f"--split must be one of {names} or 'train,val,test' counts")
    try:
        train_n, val_n, test_n = (int(v) for v in parts)
    except ValueError as exc:
        raise ValueError(f"--split counts must be integers: {split_arg!r}") from exc
    return g.with_masks(*make_split(g, SplitSpec(train_n, val_n, test_n, seed)))


def _cmd_prepare(args, workdir: Path) -> int:
    input_dir = _resolve(workdir, args.input)
    out_dir = _resolve(workdir, args.out)
    if args.format == "linqs":
        content = sorted(input_dir.glob("*.content"))
        cites = sorted(input_dir.glob("*.cites"))
        if len(content) != 1 or len(cites) != 1:
            raise DataError(
                f"{input_dir}: expected exactly one .content and one .cites file")
        parsed = parse_linqs(content[0], cites[0])
        g, id_map = parsed.graph, parsed.id_map
    else:
        g = load_canonical(input_dir)
        try:
            id_map = load_id_map(input_dir)
        except DataError:
            id_map = None
    if args.split:
        g = _apply_split(g, args.split, args.seed)
    save_canonical(g, out_dir, id_map=id_map)
    sizes = (int(g.train_mask.sum()), int(g.val_mask.sum()), int(g.test_mask.sum()))
    print(f"{g.num_nodes} nodes, {g.num_edges} edges, {g.num_features} features, "
          f"{g.num_classes} classes; split train/val/test = "
          f"{sizes[0]}/{sizes[1]}/{sizes[2]}")
    return 0


def _prepare_run(args, workdir: Path):
    """Shared train/experiment setup: graph, config, and output naming."""
    data_dir = _resolve(workdir, args.data)
    g = _load_graph(data_dir)
    preset = apply_overrides(load_preset(args.preset), args.override)
    cfg = run_config_from_preset(preset, seed=args.seed)
    if getattr(args, "resample_per_epoch", False):
        from dataclasses import replace
        cfg = replace(cfg, resample_per_epoch=True)
    if cfg.model.num_classes != g.num_classes:
        raise DataError(
            f"preset expects {cfg.model.num_classes} classes but {data_dir} "
            f"has {g.num_classes}")
    if not (g.train_mask.any() or g.val_mask.any() or g.test_mask.any()):
        split = preset.get("split")
        if not split:
            raise DataError(f"{data_dir} has no split and the preset names none")
        g = _apply_split(g, split, args.seed)
    return g, cfg, data_dir


def _cmd_train(args, workdir: Path) -> int:
    g, cfg, data_dir = _prepare_run(args, workdir)
    result = train(g, cfg)
    out_root = _resolve(workdir, args.out)
    run_dir = out_root / "train" / data_dir.name / \
        datetime.now().strftime("%Y%m%dT%H%M%S.%f")
    run_dir.mkdir(parents=True, exist_ok=True)
    ckpt = run_dir / "checkpoint.npz"
    save_checkpoint(ckpt, cfg.model, result.params, g.num_features,
                    sampling_seed=cfg.seed)
    experiments.export_curves(result, run_dir / "curves.csv")
    save_curve_figure(result.curves, run_dir / "curves.png",
                      title=f"{args.preset} seed {cfg.seed}")
    summary = {
        "command": "train",
        "preset": args.preset,
        "dataset": data_dir.name,
        "best_epoch": result.best_epoch,
        "epochs_run": len(result.curves),
        "test_acc": result.test_acc,
        "seconds": round(result.seconds, 3),
        "checkpoint": str(ckpt),
        "results_dir": str(run_dir),
        "config": cfg.to_dict(),
    }
    with open(run_dir / "config.json", "w", encoding="utf-8") as f:
        json.dump({"command": "train", "preset": args.preset,
                   "dataset": data_dir.name, "config": cfg.to_dict()},
                  f, indent=2, sort_keys=True)
    with open(run_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
    _emit(summary, args.json,
          f"test accuracy {result.test_acc:.4f} (best epoch {result.best_epoch}, "
          f"{len(result.curves)} epochs run)\nresults: {run_dir}")
    return 0


def _cmd_eval(args, workdir: Path) -> int:
    ckpt_path = _resolve(workdir, args.checkpoint)
    if not ckpt_path.exists():
        raise DataError(f"checkpoint not found: {ckpt_path}")
    spec, params, feature_dim, sampling_seed = load_checkpoint(ckpt_path)
    g = _load_graph(_resolve(workdir, args.data))
    if g.num_features != feature_dim:
        raise DataError(
            f"checkpoint was trained on {feature_dim} features but the dataset "
            f"has {g.num_features}")
    mask = {"train": g.train_mask, "val": g.val_mask, "test": g.test_mask}[args.mask]
    acc = evaluate(g, params, spec, mask, sampling_seed=sampling_seed)
    payload = {"command": "eval", "mask": args.mask, "accuracy": acc,
               "checkpoint": str(ckpt_path)}
    _emit(payload, args.json, f"{args.mask} accuracy {acc:.4f}")
    return 0


def _gradcheck_spec(variant: str) -> ModelSpec:
    conv = ConvSpec(mode="conv1d", filter_len=3, num_filters=2, stride_feat=2)
    if variant == "nfc-gcn":
        return ModelSpec(variant=variant, num_classes=3, bandwidth=3, conv=conv,
                         gcn_dims=(5, 4), dropout=0.0)
    if variant == "nfc-only":
        return ModelSpec(variant=variant, num_classes=3, bandwidth=3, conv=conv,
                         dropout=0.0)
    if variant == "mean-only":
        return ModelSpec(variant=variant, num_classes=3, bandwidth=3, dropout=0.0)
    return ModelSpec(variant="gcn", num_classes=3, gcn_dims=(5,), dropout=0.0)


def _cmd_gradcheck(args, workdir: Path) -> int:
    variants = args.variant or list(VARIANTS)
    graph = random_graph(num_nodes=12, feature_dim=9, num_classes=3,
                         edge_prob=0.35, seed=args.seed)
    reports = {}
    all_passed = True
    for variant in variants:
        report = check_model(_gradcheck_spec(variant), graph, seed=args.seed,
                             tolerance=args.tolerance)
        reports[variant] = report
        all_passed &= report.passed
    if args.json:
        print(json.dumps({"command": "gradcheck",
                          "passed": all_passed,
                          "variants": {v: r.to_dict() for v, r in reports.items()}},
                         sort_keys=True))
    else:
        for variant, report in reports.items():
            print(f"== {variant} ==")
            print(report.format_table())
    return 0 if all_passed else 3


def _cmd_experiment(args, workdir: Path) -> int:
    g, cfg, data_dir = _prepare_run(args, workdir)
    out_root = _resolve(workdir, args.out)
    dataset = data_dir.name
    if args.kind == "main":
        summary = experiments.run_main(g, cfg, repeats=args.repeats,
                                       base_seed=args.seed, out=out_root,
                                       dataset=dataset)
        text = (f"{summary['variant']}: mean test accuracy "
                f"{summary['mean_test_acc']:.4f} +/- {summary['std_test_acc']:.4f} "
                f"over {args.repeats} seeds")
    elif args.kind == "no-gcn":
        summary = experiments.run_ablation_no_gcn(g, cfg, repeats=args.repeats,
                                                  base_seed=args.seed, out=out_root,
                                                  dataset=dataset)
        lines = [f"{name}: {v['mean_test_acc']:.4f} +/- {v['std_test_acc']:.4f}"
                 for name, v in summary["variants"].items()]
        lines.append(f"gap: {summary['gap_points']:.2f} points")
        text = "\n".join(lines)
    elif args.kind == "bandwidth":
        summary = experiments.run_bandwidth_sweep(
            g, cfg, seeds_per_point=args.seeds, base_seed=args.seed,
            out=out_root, dataset=dataset)
        text = "\n".join(
            f"n={p['bandwidth']}: {p['mean_test_acc']:.4f} +/- "
            f"{p['std_test_acc']:.4f}" for p in summary["points"])
    elif args.kind == "depth":
        baseline_cfg = None
        baseline_name = f"{load_preset(args.preset).get('dataset', dataset)}-gcn"
        if baseline_name in available_presets():
            baseline_cfg = run_config_from_preset(load_preset(baseline_name),
                                                  seed=args.seed)
            if baseline_cfg.model.num_classes != g.num_classes:
                baseline_cfg = None
        summary = experiments.run_depth_sweep(
            g, cfg, seeds_per_point=args.seeds, base_seed=args.seed,
            baseline_cfg=baseline_cfg, out=out_root, dataset=dataset)
        text = "\n".join(
            f"depth={p['depth']}: {p['mean_test_acc']:.4f} +/- "
            f"{p['std_test_acc']:.4f}" for p in summary["points"])
        text += f"\nspread: {summary['spread_points']:.2f} points"
    else:
        summary = experiments.run_curves(g, cfg, repeats=args.repeats,
                                         base_seed=args.seed, epochs=args.epochs,
                                         out=out_root, dataset=dataset)
        text = "\n".join(
            f"seed {p['seed']}: best val {p['best_val_acc']:.4f} at epoch "
            f"{p['best_epoch']}, within half a point by epoch "
            f"{p['epoch_within_half_point']}" for p in summary["per_seed"])
    _emit(summary, args.json, text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    workdir = Path(args.workdir)
    handlers = {
        "prepare": _cmd_prepare,
        "train": _cmd_train,
        "eval": _cmd_eval,
        "gradcheck": _cmd_gradcheck,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args, workdir)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
