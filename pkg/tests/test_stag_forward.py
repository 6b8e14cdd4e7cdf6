import numpy as np
import pytest

from backbone.transformer import Backbone, TokenSet
from config import LEAKY_SLOPE
from conftest import make_batch
from numerics import ops
from numerics.autodiff import Tape, backward, constant
from numerics.rng import RngStream
from stag.config import StagConfig
from stag.forward import bare_forward, stag_forward
from stag.params import build_side_params


def _setup(backbone_cfg, side_cfg, seed=0):
    backbone = Backbone(backbone_cfg, RngStream(seed, "pretrained"), precision="double")
    side = build_side_params(side_cfg, RngStream(seed, "init"), np.float64)
    batch = make_batch(backbone_cfg, side_cfg.k, count=2, seed=seed)
    return backbone, side, batch


@pytest.mark.parametrize("variant", ["std", "sl"])
@pytest.mark.parametrize("refine_fn", ["efficient_edgeconv", "original_edgeconv", "simple_graph_conv", "max_pool"])
def test_zero_up_projection_reproduces_bare_backbone(tiny_backbone, variant, refine_fn):
    cfg = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant=variant, refine_fn=refine_fn, d_prime=4)
    backbone, side, batch = _setup(tiny_backbone, cfg)
    T0, pos = backbone.embed(batch.groups, batch.centers)
    adapted = stag_forward(T0, backbone, side, batch.graph, pos)
    bare = bare_forward(T0, backbone, pos)
    assert np.array_equal(adapted.tokens.value, bare.tokens.value)


def test_nonzero_up_projection_changes_tokens(tiny_backbone, tiny_side):
    backbone, side, batch = _setup(tiny_backbone, tiny_side)
    weight, _ = side.up(3)
    weight.value = np.random.default_rng(0).normal(size=weight.shape)
    T0, pos = backbone.embed(batch.groups, batch.centers)
    adapted = stag_forward(T0, backbone, side, batch.graph, pos)
    assert not np.array_equal(adapted.tokens.value, bare_forward(T0, backbone, pos).tokens.value)


def test_trace_records_block_kinds(tiny_backbone, tiny_side):
    backbone, side, batch = _setup(tiny_backbone, tiny_side)
    T0, pos = backbone.embed(batch.groups, batch.centers)
    trace = []
    stag_forward(T0, backbone, side, batch.graph, pos, trace)
    assert [t.kind for t in trace] == ["A", "A", "M", "M"]
    assert trace[0].h is None and trace[2].h.shape == (2, tiny_backbone.n, 4)


def test_graph_built_from_centers_when_missing(tiny_backbone, tiny_side):
    backbone, side, batch = _setup(tiny_backbone, tiny_side)
    T0, pos = backbone.embed(batch.groups, batch.centers)
    given = stag_forward(T0, backbone, side, batch.graph, pos).tokens.value
    built = stag_forward(T0, backbone, side, None, pos).tokens.value
    assert np.array_equal(given, built)


@pytest.mark.parametrize("A", [0, 1, 2, 3])
def test_backward_skips_frozen_prefix(tiny_backbone, A):
    cfg = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant="custom", A=A, d_prime=4)
    backbone, side, batch = _setup(tiny_backbone, cfg)
    with Tape():
        T0, pos = backbone.embed(batch.groups, batch.centers)
        loss = ops.sum_all(backbone.final_norm(stag_forward(T0, backbone, side, batch.graph, pos)))
    scopes = backward(loss).scopes()
    assert "tokenizer" not in scopes and "posemb" not in scopes
    for l in range(1, tiny_backbone.L + 1):
        assert (f"backbone.block{l}" in scopes) == (l >= A + 2)
    assert all(node.grad is None for node in backbone.store)


def _randomize_up(side, seed=0):
    gen = np.random.default_rng(seed)
    for _, node in side.store.items("side/U"):
        node.value = gen.normal(scale=0.5, size=node.shape)


def _leaky(a):
    return np.where(a > 0, a, LEAKY_SLOPE * a)


def _straight_line(backbone, side, T0, pos, graph):
    """Side-network recurrence written out with plain arrays, block by block."""
    cfg = side.config
    batch = T0.tokens.shape[0]
    x = np.zeros(T0.tokens.shape[:2] + (cfg.d_prime,))
    tokens, records = T0, []
    for l in range(1, backbone.config.L + 1):
        nxt = backbone.block(l, tokens, pos)
        w_d, b_d = (p.value for p in side.down(l))
        h = tokens.tokens.value @ w_d + b_d + x
        if l <= cfg.A:
            x = h
            records.append((x, None, nxt.tokens.value))
            tokens = nxt
            continue
        g = {name: p.value for name, p in side.refine(l).items()}
        own, other = h @ g["w_prime"], h @ g["w2"]
        neighbours = other[np.arange(batch)[:, None, None], graph]
        x = _leaky(own[:, :, None, :] + neighbours).max(axis=2) @ g["phi/weight"] + g["phi/bias"]
        w_u, b_u = (p.value for p in side.up(l))
        t = x @ w_u + b_u + nxt.tokens.value
        records.append((x, h, t))
        tokens = TokenSet(constant(t), nxt.centers)
    return records


@pytest.mark.parametrize("variant", ["std", "sl"])
def test_trace_matches_straight_line_recurrence(tiny_backbone, variant):
    cfg = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant=variant, d_prime=4, n=tiny_backbone.n)
    backbone, side, batch = _setup(tiny_backbone, cfg)
    _randomize_up(side)
    T0, pos = backbone.embed(batch.groups, batch.centers)
    trace = []
    stag_forward(T0, backbone, side, batch.graph, pos, trace)
    expected = _straight_line(backbone, side, T0, pos, batch.graph)
    assert len(trace) == len(expected) == tiny_backbone.L
    for record, (x, h, t) in zip(trace, expected):
        assert np.abs(record.x - x).max() <= 1e-5
        assert np.abs(record.t - t).max() <= 1e-5
        assert (record.h is None) == (h is None)
        if h is not None:
            assert np.abs(record.h - h).max() <= 1e-5


def test_adapted_tokens_follow_a_joint_permutation(tiny_backbone, tiny_side):
    backbone, side, batch = _setup(tiny_backbone, tiny_side)
    _randomize_up(side, seed=1)
    perm = np.random.default_rng(5).permutation(tiny_backbone.n)
    T0, pos = backbone.embed(batch.groups, batch.centers)
    out = stag_forward(T0, backbone, side, None, pos).tokens.value
    T0_perm = TokenSet(constant(T0.tokens.value[:, perm]), batch.centers[:, perm])
    permuted = stag_forward(T0_perm, backbone, side, None, constant(pos.value[:, perm])).tokens.value
    assert np.allclose(permuted, out[:, perm], atol=1e-9)


def test_shared_down_projection_moves_every_block_of_its_group(tiny_backbone):
    cfg = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant="sl", d_prime=4, n=tiny_backbone.n)
    side = build_side_params(cfg, RngStream(0, "init"), np.float64)
    first_group = cfg.sharing["D"][0]
    assert first_group == [1, 2, 3]
    tokens = constant(np.random.default_rng(2).normal(size=(2, tiny_backbone.n, tiny_backbone.d)))

    def projections():
        return {l: ops.linear_apply(tokens, *side.down(l)).value for l in range(1, tiny_backbone.L + 1)}

    before = projections()
    side.store["side/D0/weight"].value = side.store["side/D0/weight"].value + 1.0
    after = projections()
    for l in range(1, tiny_backbone.L + 1):
        assert np.array_equal(before[l], after[l]) == (l not in first_group)
