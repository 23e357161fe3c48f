"""Named hyperparameter presets shipped as JSON data files.

Keeping presets as data (src/nfcgcn/presets/*.json) makes every shipped
number auditable in one place. A preset bundles the model architecture,
the trainer settings, and the named split it expects.
"""

from __future__ import annotations

import copy
import json
from importlib import resources

from .model import ModelSpec
from .training import RunConfig


def _preset_root():
    return resources.files("nfcgcn").joinpath("presets")


def available_presets() -> list[str]:
    out = []
    for entry in _preset_root().iterdir():
        if entry.name.endswith(".json"):
            out.append(entry.name[:-len(".json")])
    return sorted(out)


def load_preset(name: str) -> dict:
    """Raw preset dictionary; raises ValueError listing known names."""
    path = _preset_root() / f"{name}.json"
    if not path.is_file():
        known = ", ".join(available_presets())
        raise ValueError(f"unknown preset {name!r}; available presets: {known}")
    with path.open(encoding="utf-8") as f:
        return json.load(f)


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(preset: dict, overrides) -> dict:
    """Apply ``key=value`` overrides with dotted paths into the preset.

    Values parse as JSON when possible (so lists and numbers work),
    falling back to plain strings. The convenience key
    ``model.gcn_layers=K`` rewrites ``model.gcn_dims`` to a depth-K stack:
    the preset's hidden width repeated, ending at the class count.
    Overriding the same key twice is rejected as a conflict.
    """
    result = copy.deepcopy(preset)
    seen = set()
    for item in overrides or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key in seen:
            raise ValueError(f"conflicting overrides for {key!r}")
        seen.add(key)
        value = _parse_value(raw.strip())

        if key == "model.gcn_layers":
            depth = int(value)
            if depth < 1:
                raise ValueError("model.gcn_layers must be >= 1")
            model = result.setdefault("model", {})
            dims = model.get("gcn_dims") or [16]
            hidden = int(dims[0])
            classes = int(model["num_classes"])
            if model.get("variant") == "gcn":
                model["gcn_dims"] = [hidden] * (depth - 1)
            else:
                model["gcn_dims"] = [hidden] * (depth - 1) + [classes]
            continue

        node = result
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if not isinstance(nxt, dict):
                nxt = {}
                node[part] = nxt
            node = nxt
        node[parts[-1]] = value
    return result


def run_config_from_preset(preset: dict, seed: int = 0) -> RunConfig:
    """Construct the RunConfig a preset dictionary describes."""
    model = ModelSpec.from_dict(preset["model"])
    t = preset.get("train", {})
    max_epochs = t.get("max_epochs", 200)
    return RunConfig(
        model=model,
        lr=t.get("lr", 0.002),
        l2=t.get("l2", 1e-4),
        max_epochs=max_epochs,
        patience=min(t.get("patience", 30), max_epochs),
        seed=seed,
        resample_per_epoch=t.get("resample_per_epoch", False),
        early_stopping=t.get("early_stopping", True),
    )
