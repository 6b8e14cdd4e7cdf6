import numpy as np
import pytest

from backbone.transformer import BackboneConfig
from geometry.neighbors import prepare_cloud, stack_prepared
from geometry.pointcloud import CloudDataset, PointCloud, normalize_cloud
from numerics.rng import RngStream
from stag.config import StagConfig


@pytest.fixture
def tiny_backbone() -> BackboneConfig:
    return BackboneConfig(d=8, L=4, n=8, heads=2, mlp_ratio=4, group_size=8)


@pytest.fixture
def desk_backbone() -> BackboneConfig:
    return BackboneConfig(d=32, L=4, n=16, heads=4, mlp_ratio=4, group_size=16)


@pytest.fixture
def tiny_side(tiny_backbone) -> StagConfig:
    return StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant="std", d_prime=4, n=tiny_backbone.n)


def make_clouds(count: int, points: int = 64, seed: int = 0) -> list[np.ndarray]:
    return [
        normalize_cloud(PointCloud(RngStream(seed, "test/clouds", i).generator().normal(size=(points, 3)))).points
        for i in range(count)
    ]


def make_batch(cfg: BackboneConfig, k, count: int = 2, points: int = 64, seed: int = 0):
    return stack_prepared([prepare_cloud(c, cfg.n, cfg.group_size, k) for c in make_clouds(count, points, seed)])


def make_dataset(count: int, classes: int = 2, points: int = 64, seed: int = 0) -> CloudDataset:
    clouds = [
        PointCloud(points=p, label=i % classes, source_id=f"c{i}")
        for i, p in enumerate(make_clouds(count, points, seed))
    ]
    return CloudDataset(clouds=clouds, label_names=[f"class{c}" for c in range(classes)])
