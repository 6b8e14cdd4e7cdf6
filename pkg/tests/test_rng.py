import numpy as np

from numerics.rng import RngStream


def test_same_triple_same_draws():
    a = RngStream(7, "augment", 3).generator().random(5)
    b = RngStream(7, "augment", 3).generator().random(5)
    assert np.array_equal(a, b)


def test_label_and_counter_separate_streams():
    base = RngStream(7, "augment", 0).generator().random(5)
    assert not np.array_equal(base, RngStream(7, "fps", 0).generator().random(5))
    assert not np.array_equal(base, RngStream(7, "augment", 1).generator().random(5))
    assert not np.array_equal(base, RngStream(8, "augment", 0).generator().random(5))


def test_child_and_at():
    root = RngStream(1, "init")
    assert root.child("side").stream_label == "init/side"
    assert root.at(4) == RngStream(1, "init", 4)
