"""
training/model.py
The classifier being fine-tuned: frozen backbone, optional side network and
the prediction head, with the fine-tuning strategy deciding which parameters
are tunable.

  full        tokenizer + backbone + head
  head_only   head
  stag_*      side network + head
"""

import logging
from pathlib import Path
from typing import Optional

import numpy as np

from backbone.params import ParamStore
from backbone.transformer import Backbone, BackboneConfig, TokenSet
from config import STRATEGIES, STRATEGY_VARIANT
from errors import ConfigError
from geometry.neighbors import PreparedBatch
from numerics.autodiff import Node
from numerics.rng import RngStream
from stag.config import StagConfig
from stag.forward import bare_forward, stag_forward
from stag.params import SideParams, build_side_params
from training.head import build_head_params, prediction_head

logger = logging.getLogger(__name__)


def check_strategy(strategy: str, stag_config: Optional[StagConfig]) -> None:
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if strategy.startswith("stag_"):
        if stag_config is None:
            raise ConfigError(f"strategy {strategy} needs a side-network configuration")
        allowed = {"stag_custom": ("custom", "unshared")}.get(strategy, (STRATEGY_VARIANT[strategy],))
        if stag_config.variant not in allowed:
            raise ConfigError(f"strategy {strategy} does not match variant {stag_config.variant!r}")


class StagClassifier:
    def __init__(
        self,
        backbone_config: BackboneConfig,
        num_classes: int,
        strategy: str,
        stag_config: Optional[StagConfig] = None,
        seed: int = 0,
        precision: str = "single",
        backbone_seed: int = 0,
        backbone_weights: Optional[Path] = None,
        dropout: float = 0.0,
    ):
        check_strategy(strategy, stag_config)
        self.strategy = strategy
        self.num_classes = num_classes
        self.dropout = dropout
        # the frozen backbone stands in for a pretrained one, so it does not vary with the run seed
        self.backbone = Backbone(backbone_config, RngStream(backbone_seed, "pretrained"), precision)
        if backbone_weights:
            self.backbone.load_weights(Path(backbone_weights))
        dtype = self.backbone.dtype

        init = RngStream(seed, "init")
        self.side: Optional[SideParams] = None
        if strategy.startswith("stag_"):
            if stag_config.d != backbone_config.d or stag_config.L != backbone_config.L:
                raise ConfigError("side-network d/L must match the backbone")
            self.side = build_side_params(stag_config, init, dtype)
        self.head = ParamStore()
        build_head_params(self.head, backbone_config.d, num_classes, init, dtype)
        self.apply_strategy()

    # ---- parameters ----

    def stores(self) -> list[ParamStore]:
        stores = [self.backbone.store]
        if self.side is not None:
            stores.append(self.side.store)
        stores.append(self.head)
        return stores

    def apply_strategy(self) -> None:
        self.backbone.store.set_tunable(self.strategy == "full")
        self.head.set_tunable(True)
        if self.side is not None:
            # with no modulation block the side network cannot reach the output
            self.side.store.set_tunable(self.side.config.m_blocks > 0)

    def tunable_params(self) -> list[Node]:
        return [p for store in self.stores() for p in store.tunable()]

    def tunable_count(self) -> int:
        return sum(store.count(tunable_only=True) for store in self.stores())

    def tunable_groups(self) -> list[str]:
        """Distinct parameter groups (name without the trailing tensor name) that are tunable."""
        groups = []
        for p in self.tunable_params():
            group = p.name.rsplit("/", 1)[0]
            if group not in groups:
                groups.append(group)
        return groups

    def frozen_digest(self) -> str:
        return "".join(store.digest(frozen_only=True) for store in self.stores())

    def state_dict(self, tunable_only: bool = True) -> dict[str, np.ndarray]:
        state: dict[str, np.ndarray] = {}
        for store in self.stores():
            for name, node in store.items():
                if node.requires_grad or not tunable_only:
                    state[name] = node.value.copy()
        return state

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for store in self.stores():
            own = {name: value for name, value in state.items() if name in store}
            store.load_state(own, strict=False)

    # ---- forward ----

    def encode(self, batch: PreparedBatch) -> TokenSet:
        """T^L for a prepared batch (side network attached for stag_* strategies)."""
        T0, pos = self.backbone.embed(batch.groups, batch.centers)
        if self.side is not None:
            return stag_forward(T0, self.backbone, self.side, graph=batch.graph, pos=pos)
        return bare_forward(T0, self.backbone, pos=pos)

    def forward(self, batch: PreparedBatch, dropout_rng: Optional[RngStream] = None) -> Node:
        """Logits (B, C); dropout only when dropout_rng is given (training)."""
        tokens = self.encode(batch)
        normed = self.backbone.final_norm(tokens)
        return prediction_head(normed, self.head, self.dropout, dropout_rng)

    def predict(self, batch: PreparedBatch) -> np.ndarray:
        return np.argmax(self.forward(batch).value, axis=1)

    @property
    def graph_k(self) -> Optional[int]:
        if self.side is None or self.side.config.m_blocks == 0:
            return None
        return self.side.config.k
