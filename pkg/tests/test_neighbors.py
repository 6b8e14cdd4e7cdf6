import numpy as np
import pytest

from errors import GraphError, NeighborhoodTooLargeError
from geometry.neighbors import knn_graph, prepare_cloud, stack_prepared
from geometry.sampling import PatchCenters


def _centers(points):
    return PatchCenters(centers=np.asarray(points, dtype=np.float64), indices=np.arange(len(points)))


def test_knn_graph_excludes_self_and_orders_by_distance():
    pts = np.random.default_rng(7).normal(size=(12, 3))
    graph = knn_graph(_centers(pts), 4)
    assert graph.indices.shape == (12, 4)
    for i, row in enumerate(graph.indices):
        assert i not in row
        d = np.sum((pts[row] - pts[i]) ** 2, axis=1)
        assert np.all(np.diff(d) >= 0)
        others = np.delete(np.sum((pts - pts[i]) ** 2, axis=1), i)
        assert d[-1] <= np.sort(others)[3] + 1e-15


def test_knn_graph_ties_break_to_lower_index():
    pts = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    graph = knn_graph(_centers(pts), 2)
    assert graph.indices[0].tolist() == [1, 2]


def test_knn_graph_k_limits():
    pts = np.random.default_rng(8).normal(size=(5, 3))
    assert knn_graph(_centers(pts), 4).indices.shape == (5, 4)
    with pytest.raises(NeighborhoodTooLargeError):
        knn_graph(_centers(pts), 5)
    with pytest.raises(GraphError):
        knn_graph(_centers(pts), 0)


def test_prepare_and_stack():
    clouds = [np.random.default_rng(s).normal(size=(40, 3)) for s in range(3)]
    batch = stack_prepared([prepare_cloud(c, 8, 6, 3) for c in clouds])
    assert batch.size == 3
    assert batch.groups.shape == (3, 8, 6, 3)
    assert batch.graph.shape == (3, 8, 3)
    assert stack_prepared([prepare_cloud(c, 8, 6, None) for c in clouds]).graph is None


def test_self_flag_admits_the_center_itself(monkeypatch):
    pts = np.random.default_rng(9).normal(size=(5, 3))
    monkeypatch.setattr("geometry.neighbors.INCLUDE_SELF", True)
    graph = knn_graph(_centers(pts), 5)
    assert graph.indices[:, 0].tolist() == list(range(5))
