import pytest

from accounting.costs import (
    CostConfig,
    MatmulSpec,
    count_flops,
    count_tunable_params,
    edgeconv_transform_flops,
    estimate_memory,
)
from backbone.transformer import BackboneConfig
from errors import ConfigError
from stag.config import StagConfig

REFERENCE = BackboneConfig(d=384, L=12, n=128, heads=6, mlp_ratio=4, group_size=32)
ORDER = ["head_only", "stag_std", "stag_sl", "full"]


@pytest.fixture
def reference_cost() -> CostConfig:
    return CostConfig(REFERENCE, 15, batch_size=32, k=8)


def test_reference_scale_tunable_counts(reference_cost):
    assert count_tunable_params(reference_cost, "head_only") == 266_511
    assert count_tunable_params(reference_cost, "stag_std") == 266_511 + 258_816
    assert count_tunable_params(reference_cost, "stag_sl") == 266_511 + 850_368


def test_strategy_ordering(reference_cost):
    params = [count_tunable_params(reference_cost, s) for s in ORDER]
    backward = [count_flops(reference_cost, s).backward for s in ORDER]
    memory = [estimate_memory(reference_cost, s) for s in ORDER]
    assert params == sorted(params) and len(set(params)) == 4
    assert backward == sorted(backward) and len(set(backward)) == 4
    assert memory[0] < memory[-1]


def test_forward_flops_of_stag_exceed_backbone_only(reference_cost):
    assert count_flops(reference_cost, "stag_std").forward > count_flops(reference_cost, "head_only").forward


def test_head_only_backward_stays_in_head(reference_cost):
    flops = count_flops(reference_cost, "head_only")
    assert {s for s, v in flops.backward_by_scope.items() if v} == {"head"}
    assert all(v == 0 for v in flops.by_block.values())


@pytest.mark.parametrize("k", [2, 4, 8, 16])
def test_edgeconv_transform_ratio_is_k(k):
    efficient = edgeconv_transform_flops("efficient_edgeconv", 64, 192, k)
    assert edgeconv_transform_flops("original_edgeconv", 64, 192, k) == k * efficient
    with pytest.raises(ConfigError):
        edgeconv_transform_flops("max_pool", 64, 192, k)


def test_backward_and_memory_decrease_with_accumulation_blocks():
    backbone = BackboneConfig(d=32, L=6, n=16, heads=4, mlp_ratio=4, group_size=16)
    backward, memory = [], []
    for A in range(backbone.L):
        side = StagConfig.build(32, 6, 8, variant="custom", A=A, n=16)
        cfg = CostConfig(backbone, 4, batch_size=4, stag=side)
        flops = count_flops(cfg, "stag_custom")
        backward.append(flops.backward)
        memory.append(estimate_memory(cfg, "stag_custom"))
        assert all(flops.by_block[l] == 0 for l in range(1, A + 2))
        assert all(flops.by_block[l] > 0 for l in range(A + 2, backbone.L + 1))
    assert all(b < a for a, b in zip(backward, backward[1:]))
    assert all(b < a for a, b in zip(memory, memory[1:]))


def test_matmul_spec_costs():
    spec = MatmulSpec("s", "w", 2, 3, 4, 5, lhs_grad=True, rhs_grad=True)
    assert spec.forward_flops == 240
    assert spec.backward_flops == 480
    # a parameter operand is never stored, the input is
    assert spec.saved_elements == 2 * 3 * 4
    product = MatmulSpec("s", "scores", 2, 3, 4, 5, lhs_grad=True, rhs_grad=True, rhs_is_param=False)
    assert product.saved_elements == 2 * 3 * 4 + 2 * 4 * 5
    assert MatmulSpec("s", "w", 1, 3, 4, 5, False, False).backward_flops == 0


def test_precision_doubles_memory(reference_cost):
    double = CostConfig(REFERENCE, 15, batch_size=32, k=8, precision="double")
    assert estimate_memory(double, "stag_std") == 2 * estimate_memory(reference_cost, "stag_std")


def test_unshared_row_and_config_errors(reference_cost):
    assert count_tunable_params(reference_cost, "stag_unshared") > count_tunable_params(reference_cost, "stag_sl")
    with pytest.raises(ConfigError):
        count_tunable_params(reference_cost, "stag_custom")
    with pytest.raises(ConfigError):
        count_tunable_params(reference_cost, "prompt")
    with pytest.raises(ConfigError):
        CostConfig(REFERENCE, 15, precision="half")
