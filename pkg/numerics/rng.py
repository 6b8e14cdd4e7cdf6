"""
numerics/rng.py
Counter-based random streams keyed by (master_seed, stream_label, counter).

Every consumer of randomness (parameter init, augmentation, FPS seeding,
shuffling, dropout, synthetic data) asks for its own labelled stream, so
adding a new consumer never shifts the draws of an existing one.
"""

import zlib
from dataclasses import dataclass

import numpy as np


def _label_key(label: str) -> int:
    # crc32 is stable across processes, unlike hash()
    return zlib.crc32(label.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_label: str
    counter: int = 0

    def generator(self) -> np.random.Generator:
        """A fresh Philox generator; identical triples give identical draws."""
        seq = np.random.SeedSequence(
            entropy=int(self.master_seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=(_label_key(self.stream_label), int(self.counter)),
        )
        return np.random.Generator(np.random.Philox(seq))

    def child(self, label: str, counter: int = 0) -> "RngStream":
        return RngStream(self.master_seed, f"{self.stream_label}/{label}", counter)

    def at(self, counter: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_label, counter)
