from accounting.costs import CostConfig, count_tunable_params
from accounting.report import COST_COLUMNS, cost_report, cost_table, render_text
from backbone.transformer import BackboneConfig

BACKBONE = BackboneConfig(d=32, L=4, n=16, heads=4, mlp_ratio=4, group_size=16)


def test_cost_table_rows_follow_request_order():
    cfg = CostConfig(BACKBONE, 4, k=4)
    df = cost_table(cfg, ["full", "head_only", "stag_std"])
    assert list(df.columns) == COST_COLUMNS
    assert df["strategy"].tolist() == ["full", "head_only", "stag_std"]
    assert df.loc[1, "tunable_params"] == count_tunable_params(cfg, "head_only")


def test_report_carries_per_block_backward():
    report = cost_report(CostConfig(BACKBONE, 4, k=4), "stag_std")
    assert set(report.backward_flops_by_block) == {1, 2, 3, 4}
    assert report.backward_flops_by_block[1] == 0
    assert list(report.row()) == COST_COLUMNS


def test_render_text():
    cfg = CostConfig(BACKBONE, 4, k=4)
    assert render_text(cost_table(cfg, [])) == "(no strategies)"
    text = render_text(cost_table(cfg, ["head_only", "full"]))
    assert "head_only" in text and "params_M" in text
