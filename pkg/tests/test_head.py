import numpy as np

from backbone.params import ParamStore
from numerics.autodiff import constant
from numerics.rng import RngStream
from training.head import build_head_params, head_param_count, prediction_head


def _head(d=8, classes=3):
    store = ParamStore()
    build_head_params(store, d, classes, RngStream(0, "init"), np.float64)
    return store


def test_reference_scale_head_count():
    assert head_param_count(384, 15) == 266_511


def test_built_head_is_tunable_and_matches_count():
    store = _head()
    assert store.count(tunable_only=True) == head_param_count(8, 3)


def test_logits_shape_and_eval_is_deterministic():
    store = _head()
    tokens = constant(np.random.default_rng(0).normal(size=(4, 6, 8)))
    a = prediction_head(tokens, store, dropout=0.5).value
    b = prediction_head(tokens, store, dropout=0.5).value
    assert a.shape == (4, 3)
    assert np.array_equal(a, b)


def test_dropout_uses_its_stream():
    store = _head()
    tokens = constant(np.random.default_rng(0).normal(size=(4, 6, 8)))
    plain = prediction_head(tokens, store).value
    a = prediction_head(tokens, store, dropout=0.5, rng=RngStream(1, "dropout/e0", 0)).value
    b = prediction_head(tokens, store, dropout=0.5, rng=RngStream(1, "dropout/e0", 0)).value
    assert np.array_equal(a, b)
    assert not np.array_equal(a, plain)


def test_logits_ignore_token_order():
    store = _head()
    tokens = np.random.default_rng(1).normal(size=(3, 6, 8))
    perm = np.random.default_rng(2).permutation(6)
    a = prediction_head(constant(tokens), store).value
    b = prediction_head(constant(tokens[:, perm]), store).value
    assert np.allclose(a, b, atol=1e-12)
