"""
accounting/report.py
Per-strategy efficiency comparison: tunable parameters, forward and backward
FLOPs and estimated training memory, one row per strategy.
"""

import logging
from dataclasses import dataclass, field

import pandas as pd

from accounting.costs import CostConfig, count_flops, count_tunable_params, estimate_memory

logger = logging.getLogger(__name__)

COST_COLUMNS = ["strategy", "tunable_params", "forward_flops", "backward_flops", "est_memory_bytes"]


@dataclass
class CostReport:
    strategy: str
    tunable_params: int
    forward_flops: int
    backward_flops: int
    est_memory_bytes: int
    backward_flops_by_block: dict[int, int] = field(default_factory=dict)

    def row(self) -> dict:
        return {column: getattr(self, column) for column in COST_COLUMNS}


def cost_report(cfg: CostConfig, strategy: str) -> CostReport:
    flops = count_flops(cfg, strategy)
    return CostReport(
        strategy=strategy,
        tunable_params=count_tunable_params(cfg, strategy),
        forward_flops=flops.forward,
        backward_flops=flops.backward,
        est_memory_bytes=estimate_memory(cfg, strategy),
        backward_flops_by_block=flops.by_block,
    )


def cost_table(cfg: CostConfig, strategies: list[str]) -> pd.DataFrame:
    rows = [cost_report(cfg, strategy).row() for strategy in strategies]
    df = pd.DataFrame(rows, columns=COST_COLUMNS)
    logger.info("[COST] %d strateg%s at d=%d L=%d batch=%d",
                len(df), "y" if len(df) == 1 else "ies", cfg.backbone.d, cfg.backbone.L, cfg.batch_size)
    return df


def render_text(df: pd.DataFrame) -> str:
    """Aligned text with millions of parameters and GFLOPs alongside the exact counts."""
    if df.empty:
        return "(no strategies)"
    view = df.copy()
    view["params_M"] = (view["tunable_params"] / 1e6).round(2)
    view["fwd_GFLOPs"] = (view["forward_flops"] / 1e9).round(3)
    view["bwd_GFLOPs"] = (view["backward_flops"] / 1e9).round(3)
    view["mem_MB"] = (view["est_memory_bytes"] / 2**20).round(1)
    return view.to_string(index=False)
