"""
pipeline/sweep.py
Ablation sweeps: one experiment per value of a single config axis, collated
into one table of accuracy and cost.

Axes:
  A          number of accumulation blocks (std-style sharing at every A)
  k          neighborhood size of the kNN graph
  refine_fn  token refinement function
  variant    parameter-sharing scheme (std, sl, unshared)
  batch_size clouds per step; with cost_only it traces estimated memory against batch size

A value that breaks a config invariant (say k > n−1) fails its own row; the
sweep logs it and moves on.
"""

import logging
from pathlib import Path
from typing import Optional

import pandas as pd

from accounting.report import COST_COLUMNS, cost_table
from config import SWEEP_AXES
from errors import ConfigError, StagError
from pipeline.experiment import ConfigLike, build_cost_config, load_config, run_experiment
from storage.local_storage import label_map_for, read_manifest, save_table

logger = logging.getLogger(__name__)

VARIANT_STRATEGY = {"std": "stag_std", "sl": "stag_sl", "unshared": "stag_custom", "custom": "stag_custom"}


def parse_values(axis: str, values: list) -> list:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    if axis in ("A", "k", "batch_size"):
        try:
            return [int(v) for v in values]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sweep axis {axis} takes integers: {exc}") from exc
    return [str(v) for v in values]


def _apply(cfg: dict, axis: str, value) -> dict:
    """Config of one sweep row."""
    row = dict(cfg)
    if axis == "A":
        # std/sl pin A, so an A sweep keeps std-style sharing through the custom variant
        row["A"] = value
        if row["strategy"] in ("stag_std", "stag_sl", "stag_custom"):
            row["strategy"], row["variant"], row["sharing"] = "stag_custom", "custom", None
    elif axis == "variant":
        row["variant"] = value
        row["strategy"] = VARIANT_STRATEGY.get(value, row["strategy"])
        row["A"], row["sharing"] = None, None
    else:
        row[axis] = value
    if axis != "batch_size" and not row["strategy"].startswith("stag_"):
        raise ConfigError(f"axis {axis} needs a stag_* strategy, got {row['strategy']}")
    return row


def _cost_row(cfg: dict) -> dict:
    if cfg["train_manifest"] is None:
        classes = len(cfg["synthetic_classes"])
    else:
        classes = len(label_map_for(read_manifest(Path(cfg["train_manifest"])),
                                    read_manifest(Path(cfg["test_manifest"]))))
    return cost_table(build_cost_config(cfg, classes), [cfg["strategy"]]).iloc[0].to_dict()


def sweep(
    config: ConfigLike,
    axis: str,
    values: list,
    out_dir: Optional[Path] = None,
    cost_only: bool = False,
) -> pd.DataFrame:
    """
    Run one experiment per value (or only the cost model with cost_only) and
    write sweep_<axis>.csv / .parquet under the output directory.
    """
    base = load_config(config)
    out = Path(out_dir or base["out_dir"])
    values = parse_values(axis, values)
    logger.info("[SWEEP] axis=%s values=%s%s", axis, values, " (cost only)" if cost_only else "")

    rows = []
    for value in values:
        record = {"axis": axis, "value": value, "error": ""}
        try:
            cfg = _apply(base, axis, value)
            cfg["out_dir"] = str(out / f"sweep_{axis}" / f"{axis}={value}")
            record.update(_cost_row(cfg))
            if not cost_only:
                result = run_experiment(cfg)
                summary = result.summary.iloc[0]
                record["mean_test_acc"] = float(summary["mean_test_acc"])
                record["std_test_acc"] = float(summary["std_test_acc"])
        except StagError as exc:
            logger.warning("[SWEEP] %s=%s failed: %s: %s", axis, value, type(exc).__name__, exc)
            record["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(record)

    columns = ["axis", "value"] + COST_COLUMNS
    if not cost_only:
        columns += ["mean_test_acc", "std_test_acc"]
    df = pd.DataFrame(rows, columns=columns + ["error"])
    # mixed int/str values would not survive the parquet snapshot
    df["value"] = df["value"].astype(str)
    save_table(df, out / f"sweep_{axis}.csv", parquet=True)
    failed = int((df["error"] != "").sum())
    logger.info("[SWEEP] %d row(s), %d failed", len(df), failed)
    return df
