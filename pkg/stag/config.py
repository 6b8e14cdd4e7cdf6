"""
stag/config.py
Side-network configuration: block split (A accumulation blocks, L−A
modulation blocks), widths, neighborhood size, refinement function and the
parameter-sharing map.

A sharing map lists, per layer type, groups of 1-based block indices that
share one parameter set:

    D  down-projection   instances at blocks 1..L
    G  graph refinement  instances at blocks A+1..L (none for max_pool)
    U  up-projection     instances at blocks A+1..L
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

from config import REFINE_FNS, VARIANTS
from errors import ConfigError
from geometry.neighbors import max_neighbors

logger = logging.getLogger(__name__)

LAYER_TYPES = ("D", "G", "U")
SL_RUN = 3      # STAG-sl shares parameters across runs of three adjacent instances


def _chunks(blocks: list[int], size: int) -> list[list[int]]:
    return [blocks[i:i + size] for i in range(0, len(blocks), size)]


def default_a(variant: str, L: int) -> int:
    if variant == "std":
        return L // 2
    if variant == "sl":
        return L // 4
    # unshared / custom fall back to the standard split
    return L // 2


def instances(layer: str, L: int, A: int, refine_fn: str) -> list[int]:
    if layer == "D":
        return list(range(1, L + 1))
    if layer == "G" and refine_fn == "max_pool":
        return []
    return list(range(A + 1, L + 1))


def generate_sharing(variant: str, L: int, A: int, refine_fn: str) -> dict[str, list[list[int]]]:
    sharing: dict[str, list[list[int]]] = {}
    for layer in LAYER_TYPES:
        blocks = instances(layer, L, A, refine_fn)
        if not blocks:
            sharing[layer] = []
        elif variant in ("std", "custom"):
            sharing[layer] = [blocks]
        elif variant == "sl":
            sharing[layer] = _chunks(blocks, SL_RUN)
        else:   # unshared
            sharing[layer] = [[b] for b in blocks]
    return sharing


def validate_sharing(sharing: dict, L: int, A: int, refine_fn: str) -> dict[str, list[list[int]]]:
    """Every instance must belong to exactly one non-empty group."""
    if set(sharing) - set(LAYER_TYPES):
        raise ConfigError(f"sharing map has unknown layer types: {sorted(set(sharing) - set(LAYER_TYPES))}")
    clean: dict[str, list[list[int]]] = {}
    for layer in LAYER_TYPES:
        groups = sharing.get(layer, [])
        expected = instances(layer, L, A, refine_fn)
        seen: list[int] = []
        for group in groups:
            if not group:
                raise ConfigError(f"sharing[{layer}] contains an empty group")
            seen.extend(int(b) for b in group)
        if len(seen) != len(set(seen)):
            raise ConfigError(f"sharing[{layer}] has overlapping groups")
        if sorted(seen) != expected:
            raise ConfigError(f"sharing[{layer}] must cover exactly blocks {expected}, got {sorted(seen)}")
        clean[layer] = [[int(b) for b in group] for group in groups]
    return clean


@dataclass(frozen=True)
class StagConfig:
    d: int
    d_prime: int
    L: int
    A: int
    k: int
    variant: str = "std"
    refine_fn: str = "efficient_edgeconv"
    sharing: dict = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        d: int,
        L: int,
        k: int,
        variant: str = "std",
        refine_fn: str = "efficient_edgeconv",
        A: Optional[int] = None,
        d_prime: Optional[int] = None,
        sharing: Optional[dict] = None,
        n: Optional[int] = None,
    ) -> "StagConfig":
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; choose from {VARIANTS}")
        if refine_fn not in REFINE_FNS:
            raise ConfigError(f"unknown refine_fn {refine_fn!r}; choose from {REFINE_FNS}")
        required = default_a(variant, L)
        if A is None:
            A = required
        elif variant in ("std", "sl") and A != required:
            raise ConfigError(f"variant {variant} requires A={required} for L={L}, got A={A}")
        if not 0 <= A <= L:
            raise ConfigError(f"A={A} outside [0, {L}]")
        if k < 1:
            raise ConfigError(f"k={k} must be at least 1")
        if n is not None and k > max_neighbors(n):
            raise ConfigError(f"k={k} exceeds the {max_neighbors(n)} neighbors available among n={n} centers")
        d_prime = d // 2 if d_prime is None else d_prime
        if d_prime <= 0:
            raise ConfigError(f"d_prime={d_prime} must be positive")

        if sharing is not None and variant != "custom":
            raise ConfigError("an explicit sharing map needs variant=custom")
        if sharing is None:
            sharing = generate_sharing(variant, L, A, refine_fn)
        sharing = validate_sharing(sharing, L, A, refine_fn)
        return cls(d=d, d_prime=d_prime, L=L, A=A, k=k, variant=variant, refine_fn=refine_fn, sharing=sharing)

    @property
    def m_blocks(self) -> int:
        return self.L - self.A

    def group_of(self, layer: str, block: int) -> int:
        """Index of the shared group serving `layer` at 1-based `block`."""
        for index, group in enumerate(self.sharing[layer]):
            if block in group:
                return index
        raise ConfigError(f"no {layer} group covers block {block}")


# ---------------------------------------------------------------------------
# Closed-form parameter counts
# ---------------------------------------------------------------------------

def params_per_group(config: StagConfig) -> dict[str, int]:
    d, dp = config.d, config.d_prime
    if config.refine_fn in ("efficient_edgeconv", "original_edgeconv"):
        p_g = 3 * dp * dp + dp
    elif config.refine_fn == "simple_graph_conv":
        p_g = 2 * dp * dp + dp
    else:
        p_g = 0
    return {"D": d * dp + dp, "G": p_g, "U": dp * d + d}


def count_side_params(config: StagConfig) -> int:
    per_group = params_per_group(config)
    return sum(per_group[layer] * len(config.sharing[layer]) for layer in LAYER_TYPES)
