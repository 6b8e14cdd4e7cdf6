"""
geometry/sampling.py
Patch construction for tokenization: farthest point sampling of patch
centers, then grouping the nearest points around each center.

All nearest/farthest searches are brute force over squared Euclidean
distances; ties resolve to the lowest point index.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import GroupingError, SampleSizeError
from numerics.rng import RngStream


@dataclass(frozen=True)
class PatchCenters:
    centers: np.ndarray             # (n, 3), each row a point of the source cloud
    indices: np.ndarray             # (n,) positions of the centers in the source cloud

    @property
    def count(self) -> int:
        return int(self.centers.shape[0])


def squared_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def farthest_point_sample(points: np.ndarray, n: int, rng: Optional[RngStream] = None) -> PatchCenters:
    """
    Greedy FPS. The first center is drawn from rng, or is point 0 when rng is
    None (deterministic mode); each next center maximises the distance to the
    chosen set.
    """
    points = np.asarray(points, dtype=np.float64)
    m = points.shape[0]
    if n > m:
        raise SampleSizeError(f"cannot sample {n} centers from {m} points")
    if n <= 0:
        raise SampleSizeError("center count must be positive")

    first = 0 if rng is None else int(rng.generator().integers(m))
    chosen = np.empty(n, dtype=np.int64)
    chosen[0] = first
    diff = points - points[first]
    min_dist = np.einsum("ij,ij->i", diff, diff)
    min_dist[first] = -1.0
    for i in range(1, n):
        nxt = int(np.argmax(min_dist))
        chosen[i] = nxt
        diff = points - points[nxt]
        min_dist = np.minimum(min_dist, np.einsum("ij,ij->i", diff, diff))
        min_dist[chosen[: i + 1]] = -1.0
    return PatchCenters(centers=points[chosen].copy(), indices=chosen)


def knn_group(points: np.ndarray, centers: PatchCenters, group_size: int) -> np.ndarray:
    """(n, group_size, 3): the nearest points of every center, relative to it."""
    points = np.asarray(points, dtype=np.float64)
    m = points.shape[0]
    if group_size > m:
        raise GroupingError(f"group_size {group_size} exceeds cloud size {m}")
    if group_size <= 0:
        raise GroupingError("group_size must be positive")
    dist = squared_distances(centers.centers, points)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :group_size]
    return points[nearest] - centers.centers[:, None, :]
