import numpy as np
import pytest

from errors import GroupingError, SampleSizeError
from geometry.sampling import PatchCenters, farthest_point_sample, knn_group
from numerics.rng import RngStream


def _fps_oracle(points, n, first=0):
    chosen = [first]
    for _ in range(n - 1):
        d = np.min([[np.sum((p - points[c]) ** 2) for c in chosen] for p in points], axis=1)
        d[chosen] = -1
        chosen.append(int(np.argmax(d)))
    return chosen


def test_fps_matches_bruteforce_oracle():
    points = np.random.default_rng(4).normal(size=(40, 3))
    result = farthest_point_sample(points, 8)
    assert result.indices.tolist() == _fps_oracle(points, 8)
    assert np.array_equal(result.centers, points[result.indices])


def test_fps_on_line_picks_endpoints_first():
    points = np.array([[float(x), 0.0, 0.0] for x in range(5)])
    assert farthest_point_sample(points, 3).indices.tolist() == [0, 4, 2]


def test_fps_seeded_start_and_distinct_centers():
    points = np.random.default_rng(5).normal(size=(25, 3))
    a = farthest_point_sample(points, 10, RngStream(1, "fps", 0))
    b = farthest_point_sample(points, 10, RngStream(1, "fps", 0))
    assert np.array_equal(a.indices, b.indices)
    assert len(set(a.indices.tolist())) == 10


def test_fps_size_errors():
    points = np.zeros((4, 3))
    with pytest.raises(SampleSizeError):
        farthest_point_sample(points, 5)
    with pytest.raises(SampleSizeError):
        farthest_point_sample(points, 0)


def test_knn_group_shape_and_relative_coordinates():
    points = np.random.default_rng(6).normal(size=(30, 3))
    centers = farthest_point_sample(points, 5)
    groups = knn_group(points, centers, 4)
    assert groups.shape == (5, 4, 3)
    # each center is its own nearest point
    assert np.allclose(groups[:, 0, :], 0.0)
    with pytest.raises(GroupingError):
        knn_group(points, centers, 31)


def _min_pairwise(points):
    d = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=-1)
    return d[np.triu_indices(len(points), k=1)].min()


def test_fps_spreads_centers_wider_than_random_subsets():
    gen = np.random.default_rng(7)
    wins = 0
    for trial in range(100):
        points = gen.uniform(-1.0, 1.0, size=(64, 3))
        centers = farthest_point_sample(points, 8, RngStream(trial, "fps")).centers
        subset = points[gen.choice(64, size=8, replace=False)]
        wins += _min_pairwise(centers) >= _min_pairwise(subset)
    assert wins >= 95


def test_knn_group_on_collinear_points_includes_the_center():
    points = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    centers = PatchCenters(points[[1]], np.array([1]))
    groups = knn_group(points, centers, 2)
    assert groups[0, :, 0].tolist() == [0.0, -1.0]
    assert not groups[0, :, 1:].any()
