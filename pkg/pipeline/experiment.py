"""
pipeline/experiment.py
One experiment: load (or generate) the dataset, fine-tune once per seed, and
write per-seed metrics, a mean-accuracy summary, the cost report for the
chosen strategy and the trained parameters.

Outputs (under out_dir):
  config.json, metrics_seed<N>.csv, params_seed<N>.stagw,
  summary.csv / summary.parquet, cost.csv / cost.txt
"""

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from accounting.costs import CostConfig, count_tunable_params
from accounting.report import cost_table, render_text
from backbone.transformer import BackboneConfig
from config import EXPERIMENT_DEFAULTS, STRATEGY_VARIANT
from errors import ConfigError, ContractError, ParamFileError
from generator.synthetic_generator import generate_synthetic
from geometry.pointcloud import CloudDataset
from stag.config import StagConfig
from storage.local_storage import load_json, load_params, load_splits, save_json, save_params, save_table, save_text
from training.finetune import TrainConfig, TrainResult, evaluate, finetune
from training.model import StagClassifier

logger = logging.getLogger(__name__)

ConfigLike = Union[dict, str, Path, None]


# ---------------------------------------------------------------------------
# Experiment config
# ---------------------------------------------------------------------------

def effective_config(overrides: Optional[dict] = None) -> dict:
    """Defaults with the given keys applied; unknown keys are rejected."""
    overrides = dict(overrides or {})
    unknown = sorted(set(overrides) - set(EXPERIMENT_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {unknown}")
    cfg = copy.deepcopy(EXPERIMENT_DEFAULTS)
    cfg.update(copy.deepcopy(overrides))
    if not cfg["seeds"]:
        raise ConfigError("config key 'seeds' must list at least one seed")
    return cfg


def load_config(source: ConfigLike = None) -> dict:
    if source is None:
        return effective_config()
    if isinstance(source, dict):
        return effective_config(source)
    try:
        raw = load_json(Path(source))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: expected a flat JSON object")
    return effective_config(raw)


def save_config(cfg: dict, path: Path) -> Path:
    return save_json(cfg, path)


def resolve_variant(cfg: dict) -> Optional[str]:
    strategy = cfg["strategy"]
    if not strategy.startswith("stag_"):
        return None
    return cfg["variant"] or STRATEGY_VARIANT.get(strategy)


def build_backbone_config(cfg: dict) -> BackboneConfig:
    try:
        return BackboneConfig(
            d=cfg["d"], L=cfg["L"], n=cfg["n"], heads=cfg["heads"],
            mlp_ratio=cfg["mlp_ratio"], group_size=cfg["group_size"],
        )
    except ConfigError as exc:
        raise ConfigError(f"config keys d/L/n/heads/mlp_ratio/group_size: {exc}") from exc


def build_stag_config(cfg: dict) -> Optional[StagConfig]:
    variant = resolve_variant(cfg)
    if variant is None:
        return None
    try:
        return StagConfig.build(
            cfg["d"], cfg["L"], cfg["k"], variant=variant, refine_fn=cfg["refine_fn"],
            A=cfg["A"], d_prime=cfg["d_prime"], sharing=cfg["sharing"], n=cfg["n"],
        )
    except ConfigError as exc:
        raise ConfigError(f"config keys variant/A/k/refine_fn/d_prime/sharing: {exc}") from exc


def build_cost_config(cfg: dict, num_classes: int) -> CostConfig:
    return CostConfig(
        backbone=build_backbone_config(cfg),
        num_classes=num_classes,
        batch_size=cfg["batch_size"],
        precision=cfg["precision"],
        k=cfg["k"],
        d_prime=cfg["d_prime"],
        refine_fn=cfg["refine_fn"],
        stag=build_stag_config(cfg),
    )


def build_model(cfg: dict, num_classes: int, seed: int) -> StagClassifier:
    return StagClassifier(
        build_backbone_config(cfg),
        num_classes,
        cfg["strategy"],
        build_stag_config(cfg),
        seed=seed,
        precision=cfg["precision"],
        backbone_seed=cfg["backbone_seed"],
        backbone_weights=cfg["backbone_weights"],
        dropout=cfg["dropout"],
    )


def train_config(cfg: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        strategy=cfg["strategy"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        lr_max=cfg["lr_max"],
        lr_min=cfg["lr_min"],
        weight_decay=cfg["weight_decay"],
        seed=seed,
        num_points=cfg["num_points"],
        deterministic=cfg["deterministic"],
    )


def prepare_data(cfg: dict) -> tuple[CloudDataset, CloudDataset]:
    train_manifest, test_manifest = cfg["train_manifest"], cfg["test_manifest"]
    if (train_manifest is None) != (test_manifest is None):
        raise ConfigError("set both train_manifest and test_manifest, or neither")
    if train_manifest is None:
        manifests = generate_synthetic(
            Path(cfg["out_dir"]) / "data",
            classes=cfg["synthetic_classes"],
            per_class=cfg["per_class"],
            points=cfg["points"],
            noise_sigma=cfg["noise_sigma"],
            seed=cfg["data_seed"],
            test_per_class=cfg["test_per_class"],
        )
        train_manifest, test_manifest = manifests["train"], manifests["test"]
    return load_splits(Path(train_manifest), Path(test_manifest))


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    config: dict
    summary: pd.DataFrame
    cost: pd.DataFrame
    runs: dict[int, TrainResult] = field(default_factory=dict)


def params_path(out_dir: Path, seed: int) -> Path:
    return Path(out_dir) / f"params_seed{seed}.stagw"


def summarize(cfg: dict, runs: dict[int, TrainResult]) -> pd.DataFrame:
    accs = [runs[s].final_test_acc for s in cfg["seeds"]]
    stag = build_stag_config(cfg)
    row = {
        "strategy": cfg["strategy"],
        "variant": resolve_variant(cfg) or "",
        "A": stag.A if stag is not None else -1,
        "k": cfg["k"],
        "refine_fn": cfg["refine_fn"] if stag is not None else "",
        "epochs": cfg["epochs"],
        "tunable_params": runs[cfg["seeds"][0]].tunable_count,
        "mean_test_acc": float(np.mean(accs)),
        "std_test_acc": float(np.std(accs)),
    }
    row.update({f"acc_seed{s}": a for s, a in zip(cfg["seeds"], accs)})
    return pd.DataFrame([row])


def run_experiment(config: ConfigLike = None, out_dir: Optional[Path] = None) -> ExperimentResult:
    cfg = load_config(config)
    if out_dir is not None:
        cfg["out_dir"] = str(out_dir)
    out = Path(cfg["out_dir"])
    save_config(cfg, out / "config.json")
    logger.info("[EXPERIMENT] strategy=%s seeds=%s epochs=%d → %s",
                cfg["strategy"], cfg["seeds"], cfg["epochs"], out)

    train, test = prepare_data(cfg)
    cost_cfg = build_cost_config(cfg, train.num_classes)
    cost = cost_table(cost_cfg, [cfg["strategy"]])
    save_table(cost, out / "cost.csv")
    save_text(render_text(cost), out / "cost.txt")

    runs: dict[int, TrainResult] = {}
    for seed in cfg["seeds"]:
        model = build_model(cfg, train.num_classes, seed)
        expected = count_tunable_params(cost_cfg, cfg["strategy"])
        if model.tunable_count() != expected:
            raise ContractError(f"model has {model.tunable_count()} tunable parameters, accounting says {expected}")
        result = finetune(train, test, model, train_config(cfg, seed))
        runs[seed] = result
        save_table(result.metrics, out / f"metrics_seed{seed}.csv")
        save_params(params_path(out, seed), model.state_dict(tunable_only=True), cfg["precision"])

    summary = summarize(cfg, runs)
    save_table(summary, out / "summary.csv", parquet=True)
    logger.info("[EXPERIMENT] mean test accuracy %.4f over %d seed(s)",
                summary.loc[0, "mean_test_acc"], len(cfg["seeds"]))
    return ExperimentResult(config=cfg, summary=summary, cost=cost, runs=runs)


def evaluate_saved(config: ConfigLike = None, seed: Optional[int] = None) -> float:
    """Rebuild the model of a finished run, load its saved tunables and report test accuracy."""
    cfg = load_config(config)
    seed = cfg["seeds"][0] if seed is None else seed
    path = params_path(Path(cfg["out_dir"]), seed)
    if not path.exists():
        raise ParamFileError(f"no saved parameters for seed {seed} at {path}")
    train, test = prepare_data(cfg)
    model = build_model(cfg, train.num_classes, seed)
    model.load_state(load_params(path))
    acc = evaluate(model, test, cfg["batch_size"], cfg["num_points"])
    logger.info("[EVAL] seed=%d test accuracy %.4f (%s)", seed, acc, path)
    return acc


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s  %(message)s")
    run_experiment()
