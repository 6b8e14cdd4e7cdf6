"""
geometry/neighbors.py
The spatial kNN graph over patch centers that drives the side network's
graph convolution, and the per-cloud preparation (FPS → groups → graph)
shared by training and evaluation.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import GraphError, NeighborhoodTooLargeError
from geometry.sampling import PatchCenters, farthest_point_sample, knn_group, squared_distances
from numerics.rng import RngStream

# Flip to True to let every center count itself among its neighbors.
INCLUDE_SELF = False


def max_neighbors(n: int) -> int:
    """Largest k a graph over n centers supports."""
    return n if INCLUDE_SELF else n - 1


@dataclass(frozen=True)
class NeighborGraph:
    indices: np.ndarray             # (n, k) neighbor indices, self excluded unless INCLUDE_SELF
    k: int


def knn_graph(centers: PatchCenters, k: int) -> NeighborGraph:
    """Row i: the k nearest other centers by Euclidean distance, ties by lower index."""
    pts = np.asarray(centers.centers, dtype=np.float64)
    n = pts.shape[0]
    limit = max_neighbors(n)
    if k > limit:
        raise NeighborhoodTooLargeError(f"k={k} exceeds the {limit} available neighbors of {n} centers")
    if k < 1:
        raise GraphError("k must be at least 1")
    dist = squared_distances(pts, pts)
    if not INCLUDE_SELF:
        np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return NeighborGraph(indices=order.astype(np.int64), k=k)


def batch_knn_graph(centers: np.ndarray, k: int) -> np.ndarray:
    """(B, n, 3) centers → (B, n, k) neighbor tables."""
    n = centers.shape[1]
    return np.stack([
        knn_graph(PatchCenters(centers=c, indices=np.arange(n)), k).indices for c in centers
    ])


# ---------------------------------------------------------------------------
# Per-cloud preparation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreparedCloud:
    groups: np.ndarray              # (n, group_size, 3)
    centers: np.ndarray             # (n, 3)
    graph: Optional[np.ndarray]     # (n, k) or None when no side network needs it


@dataclass(frozen=True)
class PreparedBatch:
    groups: np.ndarray              # (B, n, group_size, 3)
    centers: np.ndarray             # (B, n, 3)
    graph: Optional[np.ndarray]     # (B, n, k)

    @property
    def size(self) -> int:
        return int(self.centers.shape[0])


def prepare_cloud(
    points: np.ndarray,
    n: int,
    group_size: int,
    k: Optional[int],
    rng: Optional[RngStream] = None,
) -> PreparedCloud:
    centers = farthest_point_sample(points, n, rng)
    groups = knn_group(points, centers, group_size)
    graph = knn_graph(centers, k).indices if k is not None else None
    return PreparedCloud(groups=groups, centers=centers.centers, graph=graph)


def stack_prepared(clouds: list[PreparedCloud]) -> PreparedBatch:
    graph = None
    if clouds and clouds[0].graph is not None:
        graph = np.stack([c.graph for c in clouds])
    return PreparedBatch(
        groups=np.stack([c.groups for c in clouds]),
        centers=np.stack([c.centers for c in clouds]),
        graph=graph,
    )
