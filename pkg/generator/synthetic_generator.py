"""
generator/synthetic_generator.py
Generates a labelled point-cloud dataset of geometric primitives, a desk-scale
stand-in for real object-classification benchmarks.

Classes (surface samples):
  sphere     unit radius, no aspect jitter
  cube       box with per-axis side lengths jittered in [0.7, 1.3]
  cylinder   radius and height jittered, side and caps sampled by area
  torus      major radius 1, minor radius jittered in [0.25, 0.45]

Every sample gets a random orientation and Gaussian noise σ = noise_sigma.

Output layout:
  <out_dir>/train.tsv, <out_dir>/test.tsv
  <out_dir>/clouds/<label>/<id>.txt
"""

import logging
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from faker import Faker

from config import DATA_DIR, SYNTHETIC_CLASSES
from errors import ConfigError
from numerics.rng import RngStream
from storage.local_storage import write_cloud, write_manifest

logger = logging.getLogger(__name__)

MIN_POINTS = 64


# --------------------------------------------------------------------------
# Primitive surfaces
# --------------------------------------------------------------------------

def _sphere(gen: np.random.Generator, m: int) -> np.ndarray:
    v = gen.normal(size=(m, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _cube(gen: np.random.Generator, m: int) -> np.ndarray:
    half = gen.uniform(0.7, 1.3, size=3) / 2.0
    # faces in ±x, ±y, ±z pairs, picked in proportion to their area
    areas = np.array([half[1] * half[2], half[0] * half[2], half[0] * half[1]])
    axis = gen.choice(3, size=m, p=areas / areas.sum())
    sign = gen.choice([-1.0, 1.0], size=m)
    pts = gen.uniform(-1.0, 1.0, size=(m, 3)) * half
    pts[np.arange(m), axis] = sign * half[axis]
    return pts


def _cylinder(gen: np.random.Generator, m: int) -> np.ndarray:
    radius = gen.uniform(0.4, 0.7)
    height = gen.uniform(0.8, 1.6)
    side_area = 2 * np.pi * radius * height
    cap_area = np.pi * radius ** 2
    on_side = gen.random(m) < side_area / (side_area + 2 * cap_area)
    angle = gen.uniform(0.0, 2 * np.pi, size=m)
    # sqrt keeps cap points uniform over the disc
    r = np.where(on_side, radius, radius * np.sqrt(gen.random(m)))
    z = np.where(on_side, gen.uniform(-height / 2, height / 2, size=m),
                 gen.choice([-height / 2, height / 2], size=m))
    return np.stack([r * np.cos(angle), r * np.sin(angle), z], axis=1)


def _torus(gen: np.random.Generator, m: int) -> np.ndarray:
    major, minor = 1.0, gen.uniform(0.25, 0.45)
    theta = gen.uniform(0.0, 2 * np.pi, size=m)
    phi = gen.uniform(0.0, 2 * np.pi, size=m)
    ring = major + minor * np.cos(phi)
    return np.stack([ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)], axis=1)


SHAPES: dict[str, Callable[[np.random.Generator, int], np.ndarray]] = {
    "sphere":   _sphere,
    "cube":     _cube,
    "cylinder": _cylinder,
    "torus":    _torus,
}


def random_rotation(gen: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(gen.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def sample_shape(label: str, points: int, noise_sigma: float, rng: RngStream) -> np.ndarray:
    if label not in SHAPES:
        raise ConfigError(f"unknown synthetic class {label!r}; choose from {sorted(SHAPES)}")
    gen = rng.generator()
    cloud = SHAPES[label](gen, points) @ random_rotation(gen).T
    if noise_sigma > 0:
        cloud = cloud + gen.normal(scale=noise_sigma, size=cloud.shape)
    return cloud


# --------------------------------------------------------------------------
# Public entry point
# --------------------------------------------------------------------------

def generate_synthetic(
    out_dir: Path = DATA_DIR,
    classes: Optional[list[str]] = None,
    per_class: int = 100,
    points: int = 256,
    noise_sigma: float = 0.01,
    seed: int = 0,
    test_per_class: int = 25,
) -> dict[str, Path]:
    """
    Write cloud files and the train/test manifests under out_dir.

    Returns {"train": <train.tsv>, "test": <test.tsv>}. The same arguments
    always produce byte-identical files.
    """
    classes = list(SYNTHETIC_CLASSES if classes is None else classes)
    if per_class < 1 or test_per_class < 0:
        raise ConfigError(f"per_class must be ≥ 1 (got {per_class}), test_per_class ≥ 0 (got {test_per_class})")
    if points < MIN_POINTS:
        raise ConfigError(f"points must be ≥ {MIN_POINTS}, got {points}")
    if noise_sigma < 0:
        raise ConfigError(f"noise_sigma must be ≥ 0, got {noise_sigma}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fake = Faker()
    fake.seed_instance(seed)
    base = RngStream(seed, "synthetic")

    manifests: dict[str, Path] = {}
    for split, count in (("train", per_class), ("test", test_per_class)):
        entries = []
        for label in classes:
            for index in range(count):
                sample_id = f"{split}_{index:04d}_{fake.lexify('????????')}"
                rel = f"clouds/{label}/{sample_id}.txt"
                cloud = sample_shape(label, points, noise_sigma, base.child(f"{split}/{label}", index))
                write_cloud(out_dir / rel, cloud)
                entries.append((rel, label))
        manifests[split] = write_manifest(out_dir / f"{split}.tsv", entries)
        logger.info("[GENERATOR] %-5s | %d classes × %d clouds × %d points → %s",
                    split, len(classes), count, points, out_dir)
    return manifests


def run() -> dict[str, Path]:
    return generate_synthetic()


if __name__ == "__main__":
    logging.basicConfig(level=logging.INFO, format="%(asctime)s  %(message)s")
    run()
