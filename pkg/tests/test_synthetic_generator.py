import numpy as np
import pytest

from errors import ConfigError
from generator.synthetic_generator import generate_synthetic, sample_shape
from numerics.rng import RngStream
from storage.local_storage import read_cloud, read_manifest


def test_manifest_sizes_and_labels(tmp_path):
    manifests = generate_synthetic(tmp_path, per_class=100, test_per_class=2, points=64)
    train = read_manifest(manifests["train"])
    assert len(train) == 400
    assert sorted(train["label_name"].unique()) == ["cube", "cylinder", "sphere", "torus"]
    assert len(read_manifest(manifests["test"])) == 8
    assert read_cloud(tmp_path / train.loc[0, "relative_path"]).shape == (64, 3)


def test_same_arguments_byte_identical(tmp_path):
    a = generate_synthetic(tmp_path / "a", classes=["sphere", "torus"], per_class=3, test_per_class=1, seed=4)
    b = generate_synthetic(tmp_path / "b", classes=["sphere", "torus"], per_class=3, test_per_class=1, seed=4)
    assert a["train"].read_bytes() == b["train"].read_bytes()
    for rel in read_manifest(a["train"])["relative_path"]:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_noiseless_sphere_on_unit_surface():
    cloud = sample_shape("sphere", 200, 0.0, RngStream(0, "synthetic"))
    assert np.allclose(np.linalg.norm(cloud, axis=1), 1.0, atol=1e-6)


def test_shapes_differ_by_class():
    rng = RngStream(0, "synthetic")
    torus = sample_shape("torus", 500, 0.0, rng)
    # a torus has a hole through its center
    assert np.linalg.norm(torus, axis=1).min() > 0.5


def test_argument_validation(tmp_path):
    with pytest.raises(ConfigError):
        generate_synthetic(tmp_path, points=32)
    with pytest.raises(ConfigError):
        generate_synthetic(tmp_path, per_class=0)
    with pytest.raises(ConfigError):
        generate_synthetic(tmp_path, classes=["cone"], per_class=1)
