"""
accounting/costs.py
Analytic cost model of one training step, derived from the configs alone.

The model lists every matrix product executed for a batch (the layer
inventory) together with which of its two operands require a gradient under
the chosen strategy. From that list:

  forward FLOPs    2 · batch · rows · inner · cols per product (1 MAC = 2 FLOPs)
  backward FLOPs   one forward-equivalent per operand that receives a gradient
                   (2× tunable layer on the gradient path, 1× frozen layer on the
                   path or tunable layer fed by constants, 0× elided)
  memory           precision bytes × (all params + 3 × tunable + saved activations)

Norms, softmax, activations, pooling and the kNN search are not counted.
Scopes match the autodiff tape's scope labels, so the analytic counts can be
checked against a measured backward pass exactly.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from backbone.transformer import BackboneConfig
from config import HEAD_HIDDEN, STRATEGIES, STRATEGY_VARIANT
from errors import ConfigError
from stag.config import StagConfig, count_side_params
from training.head import head_param_count

logger = logging.getLogger(__name__)

PRECISION_BYTES = {"single": 4, "double": 8}

# cost-only rows for the sharing ablation
ABLATION_VARIANTS = {"stag_unshared": "unshared"}
COST_STRATEGIES = STRATEGIES + list(ABLATION_VARIANTS)


@dataclass(frozen=True)
class CostConfig:
    backbone: BackboneConfig
    num_classes: int
    batch_size: int = 1
    precision: str = "single"
    k: int = 8
    d_prime: Optional[int] = None
    refine_fn: str = "efficient_edgeconv"
    stag: Optional[StagConfig] = None       # explicit side config; required for stag_custom

    def __post_init__(self):
        if self.precision not in PRECISION_BYTES:
            raise ConfigError(f"unknown precision {self.precision!r}")
        if self.batch_size < 1 or self.num_classes < 1:
            raise ConfigError("batch_size and num_classes must be positive")

    def side_config(self, strategy: str) -> Optional[StagConfig]:
        """The side-network config a strategy implies (None for full / head_only)."""
        if strategy not in COST_STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; choose from {COST_STRATEGIES}")
        if not strategy.startswith("stag_"):
            return None
        variant = ABLATION_VARIANTS.get(strategy) or STRATEGY_VARIANT[strategy]
        if self.stag is not None and (strategy == "stag_custom" or self.stag.variant == variant):
            return self.stag
        if variant == "custom":
            raise ConfigError("stag_custom needs an explicit side configuration")
        b = self.backbone
        return StagConfig.build(
            b.d, b.L, self.k, variant=variant, refine_fn=self.refine_fn, d_prime=self.d_prime, n=b.n,
        )


@dataclass(frozen=True)
class MatmulSpec:
    """One matrix product: `batch` independent (rows × inner) @ (inner × cols) products."""
    scope: str
    name: str
    batch: int
    rows: int
    inner: int
    cols: int
    lhs_grad: bool
    rhs_grad: bool
    rhs_is_param: bool = True

    @property
    def forward_flops(self) -> int:
        return 2 * self.batch * self.rows * self.inner * self.cols

    @property
    def backward_flops(self) -> int:
        return self.forward_flops * (int(self.lhs_grad) + int(self.rhs_grad))

    @property
    def saved_elements(self) -> int:
        """Activations kept for backward: an operand is saved when its partner needs a gradient."""
        saved = 0
        if self.rhs_grad:
            saved += self.batch * self.rows * self.inner
        if self.lhs_grad and not self.rhs_is_param:
            saved += self.batch * self.inner * self.cols
        return saved


@dataclass(frozen=True)
class FlopCounts:
    forward: int
    backward: int
    by_block: dict[int, int]                # backbone block l → backward FLOPs
    forward_by_scope: dict[str, int]
    backward_by_scope: dict[str, int]


# ---------------------------------------------------------------------------
# Parameter counts
# ---------------------------------------------------------------------------

def backbone_param_count(cfg: BackboneConfig) -> int:
    d, half, hidden = cfg.d, cfg.d // 2, cfg.mlp_ratio * cfg.d
    tokenizer = (3 * half + half) + (half * d + d)
    posemb = (3 * d + d) + (d * d + d)
    block = 2 * (2 * d) + 4 * (d * d + d) + (d * hidden + hidden) + (hidden * d + d)
    return tokenizer + posemb + cfg.L * block + 2 * d


def count_tunable_params(cfg: CostConfig, strategy: str) -> int:
    side = cfg.side_config(strategy)
    head = head_param_count(cfg.backbone.d, cfg.num_classes)
    if strategy == "full":
        return backbone_param_count(cfg.backbone) + head
    if strategy == "head_only":
        return head
    # with no modulation block the side network stays out of the trained set
    return (count_side_params(side) if side.m_blocks else 0) + head


def count_all_params(cfg: CostConfig, strategy: str) -> int:
    side = cfg.side_config(strategy)
    total = backbone_param_count(cfg.backbone) + head_param_count(cfg.backbone.d, cfg.num_classes)
    return total + (count_side_params(side) if side is not None else 0)


# ---------------------------------------------------------------------------
# Layer inventory
# ---------------------------------------------------------------------------

def edgeconv_transform_flops(refine_fn: str, n: int, d_prime: int, k: int, batch: int = 1) -> int:
    """FLOPs of the edge-transform stage alone (the part the two EdgeConv forms differ in)."""
    if refine_fn == "efficient_edgeconv":
        return 2 * (2 * batch * n * d_prime * d_prime)
    if refine_fn == "original_edgeconv":
        return 2 * batch * n * k * (2 * d_prime) * d_prime
    raise ConfigError(f"{refine_fn} has no EdgeConv transform stage")


def _refine_inventory(side: StagConfig, scope: str, tokens: int) -> list[MatmulSpec]:
    dp = side.d_prime
    fn = side.refine_fn
    if fn == "max_pool":
        return []
    if fn == "efficient_edgeconv":
        specs = [
            MatmulSpec(scope, "w_prime", 1, tokens, dp, dp, True, True),
            MatmulSpec(scope, "w2", 1, tokens, dp, dp, True, True),
        ]
    elif fn == "original_edgeconv":
        specs = [MatmulSpec(scope, "w", 1, tokens * side.k, 2 * dp, dp, True, True)]
    else:
        specs = [MatmulSpec(scope, "w", 1, tokens, dp, dp, True, True)]
    specs.append(MatmulSpec(scope, "phi", 1, tokens, dp, dp, True, True))
    return specs


def layer_inventory(cfg: CostConfig, strategy: str) -> list[MatmulSpec]:
    side = cfg.side_config(strategy)
    b = cfg.backbone
    B, n, d = cfg.batch_size, b.n, b.d
    tokens = B * n
    hidden = b.mlp_ratio * d
    dh = d // b.heads
    full = strategy == "full"
    side_active = side is not None and side.m_blocks > 0

    def in_grad(l: int) -> bool:
        """Whether T^{l-1} requires a gradient; modulation after block A+1 is the first grad source."""
        if full:
            return True
        return side_active and l >= side.A + 2

    specs = [
        MatmulSpec("tokenizer", "fc1", 1, tokens * b.group_size, 3, d // 2, False, full),
        MatmulSpec("tokenizer", "fc2", 1, tokens * b.group_size, d // 2, d, full, full),
        MatmulSpec("posemb", "fc1", 1, tokens, 3, d, False, full),
        MatmulSpec("posemb", "fc2", 1, tokens, d, d, full, full),
    ]
    for l in range(1, b.L + 1):
        scope = f"backbone.block{l}"
        act = in_grad(l)
        specs += [MatmulSpec(scope, f"attn/{p}", 1, tokens, d, d, act, full) for p in ("q", "k", "v")]
        specs += [
            MatmulSpec(scope, "attn/scores", B * b.heads, n, dh, n, act, act, rhs_is_param=False),
            MatmulSpec(scope, "attn/mix", B * b.heads, n, n, dh, act, act, rhs_is_param=False),
            MatmulSpec(scope, "attn/proj", 1, tokens, d, d, act, full),
            MatmulSpec(scope, "mlp/fc1", 1, tokens, d, hidden, act, full),
            MatmulSpec(scope, "mlp/fc2", 1, tokens, hidden, d, act, full),
        ]
        if side is None:
            continue
        side_scope = f"side.block{l}"
        specs.append(MatmulSpec(side_scope, "D", 1, tokens, d, side.d_prime, in_grad(l), side_active))
        if l > side.A:
            specs += _refine_inventory(side, side_scope, tokens)
            specs.append(MatmulSpec(side_scope, "U", 1, tokens, side.d_prime, d, True, True))

    head_in = full or side_active
    specs += [
        MatmulSpec("head", "fc1", 1, B, 2 * d, HEAD_HIDDEN, head_in, True),
        MatmulSpec("head", "fc2", 1, B, HEAD_HIDDEN, HEAD_HIDDEN, True, True),
        MatmulSpec("head", "fc3", 1, B, HEAD_HIDDEN, cfg.num_classes, True, True),
    ]
    return specs


# ---------------------------------------------------------------------------
# FLOPs and memory
# ---------------------------------------------------------------------------

def count_flops(cfg: CostConfig, strategy: str) -> FlopCounts:
    specs = layer_inventory(cfg, strategy)
    forward_by_scope: dict[str, int] = {}
    backward_by_scope: dict[str, int] = {}
    for spec in specs:
        forward_by_scope[spec.scope] = forward_by_scope.get(spec.scope, 0) + spec.forward_flops
        backward_by_scope[spec.scope] = backward_by_scope.get(spec.scope, 0) + spec.backward_flops
    by_block = {l: backward_by_scope.get(f"backbone.block{l}", 0) for l in range(1, cfg.backbone.L + 1)}
    return FlopCounts(
        forward=sum(forward_by_scope.values()),
        backward=sum(backward_by_scope.values()),
        by_block=by_block,
        forward_by_scope=forward_by_scope,
        backward_by_scope=backward_by_scope,
    )


def saved_activations(cfg: CostConfig, strategy: str) -> int:
    return sum(spec.saved_elements for spec in layer_inventory(cfg, strategy))


def estimate_memory(cfg: CostConfig, strategy: str) -> int:
    """Bytes for parameters, Adam moments, gradients and saved activations of one step."""
    tunable = count_tunable_params(cfg, strategy)
    elements = count_all_params(cfg, strategy) + 3 * tunable + saved_activations(cfg, strategy)
    return PRECISION_BYTES[cfg.precision] * elements
