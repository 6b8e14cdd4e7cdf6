"""
backbone/params.py
Named parameter storage shared by the backbone, side network and head.

Every parameter is a leaf Node. Whether it is tunable is its requires_grad
flag, set before any graph is built; frozen parameters therefore never enter
the backward pass.
"""

import hashlib
import logging
from typing import Iterator, Optional

import numpy as np

from errors import ConfigError, ParamFileError
from numerics.autodiff import Node, parameter

logger = logging.getLogger(__name__)


class ParamStore:
    def __init__(self):
        self._params: dict[str, Node] = {}

    # ---- construction ----

    def add(self, name: str, value: np.ndarray, tunable: bool = False) -> Node:
        if name in self._params:
            raise ConfigError(f"duplicate parameter name {name!r}")
        node = parameter(np.array(value, copy=True), name=name, tunable=tunable)
        self._params[name] = node
        return node

    def add_linear(
        self,
        prefix: str,
        fan_in: int,
        fan_out: int,
        gen: Optional[np.random.Generator],
        dtype,
        bias: bool = True,
        zero: bool = False,
    ) -> None:
        """Fan-based uniform init U(±1/√fan_in), or exact zeros."""
        bound = 1.0 / np.sqrt(fan_in)
        if zero:
            weight = np.zeros((fan_in, fan_out), dtype=dtype)
        else:
            weight = gen.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)
        self.add(f"{prefix}/weight", weight)
        if bias:
            b = np.zeros(fan_out, dtype=dtype) if zero else gen.uniform(-bound, bound, size=fan_out).astype(dtype)
            self.add(f"{prefix}/bias", b)

    def add_norm(self, prefix: str, width: int, dtype) -> None:
        self.add(f"{prefix}/gamma", np.ones(width, dtype=dtype))
        self.add(f"{prefix}/beta", np.zeros(width, dtype=dtype))

    # ---- access ----

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Node]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def items(self, prefix: str = "") -> list[tuple[str, Node]]:
        return [(n, p) for n, p in self._params.items() if n.startswith(prefix)]

    # ---- tunable / frozen ----

    def set_tunable(self, tunable: bool, prefix: str = "") -> None:
        for name, node in self._params.items():
            if name.startswith(prefix):
                node.requires_grad = tunable

    def tunable(self) -> list[Node]:
        return [p for p in self._params.values() if p.requires_grad]

    def frozen(self) -> list[Node]:
        return [p for p in self._params.values() if not p.requires_grad]

    def count(self, tunable_only: bool = False) -> int:
        return sum(int(p.value.size) for p in self._params.values() if p.requires_grad or not tunable_only)

    def digest(self, frozen_only: bool = False) -> str:
        """sha256 over names and raw bytes, used to prove frozen weights never move."""
        h = hashlib.sha256()
        for name, node in self._params.items():
            if frozen_only and node.requires_grad:
                continue
            h.update(name.encode("utf-8"))
            h.update(np.ascontiguousarray(node.value).tobytes())
        return h.hexdigest()

    # ---- state ----

    def state_dict(self, prefix: str = "") -> dict[str, np.ndarray]:
        return {n: p.value.copy() for n, p in self._params.items() if n.startswith(prefix)}

    def load_state(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        if strict:
            missing = sorted(set(self._params) - set(state))
            if missing:
                raise ParamFileError(f"missing parameters: {missing[:5]}")
        for name, value in state.items():
            node = self._params.get(name)
            if node is None:
                if strict:
                    raise ParamFileError(f"unknown parameter {name!r}")
                continue
            value = np.asarray(value)
            if value.size != node.value.size:
                raise ParamFileError(f"{name}: {value.size} values, expected shape {node.shape}")
            node.value = value.reshape(node.shape).astype(node.value.dtype)
        logger.info("[PARAMS] loaded %d tensor(s)", len(state))
