"""
stag/params.py
Side-network parameters, one set per shared group.

Blocks in the same group resolve to the very same Node objects, so sharing
is aliasing: an update to a group's weights is seen by every block in it.
"""

import logging

import numpy as np

from backbone.params import ParamStore
from errors import ConfigError
from numerics.autodiff import Node
from numerics.rng import RngStream
from stag.config import StagConfig, count_side_params, validate_sharing

logger = logging.getLogger(__name__)

SIDE = "side"


def group_prefix(layer: str, index: int) -> str:
    return f"{SIDE}/{layer}{index}"


class SideParams:
    def __init__(self, config: StagConfig, store: ParamStore):
        self.config = config
        self.store = store

    def _group(self, layer: str, block: int) -> str:
        return group_prefix(layer, self.config.group_of(layer, block))

    def down(self, block: int) -> tuple[Node, Node]:
        prefix = self._group("D", block)
        return self.store[f"{prefix}/weight"], self.store[f"{prefix}/bias"]

    def up(self, block: int) -> tuple[Node, Node]:
        prefix = self._group("U", block)
        return self.store[f"{prefix}/weight"], self.store[f"{prefix}/bias"]

    def refine(self, block: int) -> dict[str, Node]:
        """Named parameters of the block's refinement function (empty for max_pool)."""
        if not self.config.sharing["G"]:
            return {}
        prefix = self._group("G", block) + "/"
        return {name[len(prefix):]: node for name, node in self.store.items(prefix)}

    def count(self) -> int:
        return self.store.count()


def _add_refine_group(store: ParamStore, prefix: str, config: StagConfig, gen, dtype) -> None:
    dp = config.d_prime
    bound = 1.0 / np.sqrt(dp)
    if config.refine_fn == "efficient_edgeconv":
        store.add(f"{prefix}/w_prime", gen.uniform(-bound, bound, size=(dp, dp)).astype(dtype), tunable=True)
        store.add(f"{prefix}/w2", gen.uniform(-bound, bound, size=(dp, dp)).astype(dtype), tunable=True)
    elif config.refine_fn == "original_edgeconv":
        wide = 1.0 / np.sqrt(2 * dp)
        store.add(f"{prefix}/w", gen.uniform(-wide, wide, size=(2 * dp, dp)).astype(dtype), tunable=True)
    elif config.refine_fn == "simple_graph_conv":
        store.add(f"{prefix}/w", gen.uniform(-bound, bound, size=(dp, dp)).astype(dtype), tunable=True)
    store.add_linear(f"{prefix}/phi", dp, dp, gen, dtype)


def build_side_params(config: StagConfig, rng: RngStream, dtype=np.float32) -> SideParams:
    """D, W′, W2, φ fan-based uniform; U exactly zero so T^L starts as the bare backbone's."""
    validate_sharing(config.sharing, config.L, config.A, config.refine_fn)
    gen = rng.child("side").generator()
    store = ParamStore()
    for index, _ in enumerate(config.sharing["D"]):
        store.add_linear(group_prefix("D", index), config.d, config.d_prime, gen, dtype)
    for index, _ in enumerate(config.sharing["G"]):
        _add_refine_group(store, group_prefix("G", index), config, gen, dtype)
    for index, _ in enumerate(config.sharing["U"]):
        store.add_linear(group_prefix("U", index), config.d_prime, config.d, gen, dtype, zero=True)
    store.set_tunable(True)

    expected = count_side_params(config)
    if store.count() != expected:
        raise ConfigError(f"side parameter count {store.count()} != closed form {expected}")
    logger.info(
        "[STAG] variant=%s A=%d refine=%s | groups D=%d G=%d U=%d | %d tunable side parameters",
        config.variant, config.A, config.refine_fn,
        len(config.sharing["D"]), len(config.sharing["G"]), len(config.sharing["U"]), expected,
    )
    return SideParams(config, store)
