"""
geometry/pointcloud.py
Point clouds as loaded from disk, plus the preprocessing applied before
tokenization: unit-sphere normalization, anisotropic scale/shift augmentation
and optional resampling to a fixed point count.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from config import AUG_SCALE_RANGE, AUG_SHIFT_RANGE
from errors import DegenerateCloudError
from numerics.rng import RngStream

logger = logging.getLogger(__name__)

# Keeps the largest norm at or just below 1 despite rounding in the division
_SHRINK = 1.0 + 1e-12


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray              # (m, 3) float64
    label: Optional[int] = None
    source_id: str = ""

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def normalize_cloud(cloud: PointCloud) -> PointCloud:
    """Move the centroid to the origin and fit the cloud inside the unit sphere."""
    points = np.asarray(cloud.points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise DegenerateCloudError(f"{cloud.source_id or 'cloud'}: expected (m, 3) points, got {points.shape}")
    if points.shape[0] < 2:
        raise DegenerateCloudError(f"{cloud.source_id or 'cloud'}: needs at least 2 points")
    if not np.isfinite(points).all():
        raise DegenerateCloudError(f"{cloud.source_id or 'cloud'}: non-finite coordinates")

    centered = points - points.mean(axis=0)
    radius = float(np.linalg.norm(centered, axis=1).max())
    if radius == 0.0:
        raise DegenerateCloudError(f"{cloud.source_id or 'cloud'}: all points identical")
    return replace(cloud, points=centered / (radius * _SHRINK))


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------

def draw_augmentation(rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis scale from U(0.67, 1.5) and per-axis shift from U(−0.2, 0.2)."""
    gen = rng.generator()
    scale = gen.uniform(AUG_SCALE_RANGE[0], AUG_SCALE_RANGE[1], size=3)
    shift = gen.uniform(AUG_SHIFT_RANGE[0], AUG_SHIFT_RANGE[1], size=3)
    return scale, shift


def apply_augmentation(points: np.ndarray, scale: np.ndarray, shift: np.ndarray) -> np.ndarray:
    return np.asarray(points, dtype=np.float64) * scale + shift


def augment(cloud: PointCloud, rng: RngStream) -> PointCloud:
    scale, shift = draw_augmentation(rng)
    return replace(cloud, points=apply_augmentation(cloud.points, scale, shift))


def resample_points(points: np.ndarray, count: int, rng: RngStream) -> np.ndarray:
    """Seeded subset of `count` points; draws with replacement only when the cloud is smaller."""
    m = points.shape[0]
    if m == count:
        return points
    idx = rng.generator().choice(m, size=count, replace=m < count)
    return points[np.sort(idx)]


@dataclass
class CloudDataset:
    """Normalized clouds with integer labels and the shared label-name table."""
    clouds: list[PointCloud]
    label_names: list[str]

    def __len__(self) -> int:
        return len(self.clouds)

    @property
    def labels(self) -> np.ndarray:
        return np.array([c.label for c in self.clouds], dtype=np.int64)

    @property
    def num_classes(self) -> int:
        return len(self.label_names)
