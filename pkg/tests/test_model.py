import numpy as np
import pytest

from accounting.costs import CostConfig, count_tunable_params
from conftest import make_batch
from errors import ConfigError
from numerics.rng import RngStream
from stag.config import StagConfig
from training.loss import cross_entropy
from training.model import StagClassifier


@pytest.mark.parametrize("strategy", ["full", "head_only", "stag_std", "stag_sl"])
def test_tunable_count_matches_accounting(tiny_backbone, strategy):
    side = None
    if strategy.startswith("stag_"):
        side = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant=strategy[5:], d_prime=4)
    model = StagClassifier(tiny_backbone, 3, strategy, side)
    cost = CostConfig(tiny_backbone, 3, k=2, d_prime=4)
    assert model.tunable_count() == count_tunable_params(cost, strategy)


def test_strategy_ordering(tiny_backbone):
    counts = {}
    for strategy in ["head_only", "stag_std", "stag_sl", "full"]:
        side = None
        if strategy.startswith("stag_"):
            side = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant=strategy[5:], d_prime=4)
        counts[strategy] = StagClassifier(tiny_backbone, 3, strategy, side).tunable_count()
    assert counts["head_only"] < counts["stag_std"] < counts["stag_sl"] < counts["full"]


def test_strategy_validation(tiny_backbone, tiny_side):
    with pytest.raises(ConfigError):
        StagClassifier(tiny_backbone, 3, "stag_std")
    with pytest.raises(ConfigError):
        StagClassifier(tiny_backbone, 3, "stag_sl", tiny_side)
    with pytest.raises(ConfigError):
        StagClassifier(tiny_backbone, 3, "lora")
    wrong = StagConfig.build(16, tiny_backbone.L, 2, d_prime=4)
    with pytest.raises(ConfigError):
        StagClassifier(tiny_backbone, 3, "stag_std", wrong)


def test_side_frozen_when_no_modulation_blocks(tiny_backbone):
    side = StagConfig.build(tiny_backbone.d, tiny_backbone.L, 2, variant="custom", A=tiny_backbone.L, d_prime=4)
    model = StagClassifier(tiny_backbone, 3, "stag_custom", side)
    assert model.graph_k is None
    assert model.side.store.count(tunable_only=True) == 0
    assert all(g.startswith("head/") for g in model.tunable_groups())


def test_backbone_independent_of_run_seed(tiny_backbone, tiny_side):
    a = StagClassifier(tiny_backbone, 3, "stag_std", tiny_side, seed=1)
    b = StagClassifier(tiny_backbone, 3, "stag_std", tiny_side, seed=2)
    assert a.backbone.store.digest() == b.backbone.store.digest()
    assert a.head.digest() != b.head.digest()


def test_forward_and_state_round_trip(tiny_backbone, tiny_side):
    model = StagClassifier(tiny_backbone, 3, "stag_std", tiny_side, precision="double", dropout=0.5)
    batch = make_batch(tiny_backbone, model.graph_k, count=2)
    logits = model.forward(batch).value
    assert logits.shape == (2, 3)
    assert np.array_equal(model.predict(batch), np.argmax(logits, axis=1))
    trained = model.forward(batch, dropout_rng=RngStream(0, "dropout/e0", 0)).value
    assert not np.array_equal(trained, logits)

    state = model.state_dict()
    assert set(state) == {p.name for p in model.tunable_params()}
    other = StagClassifier(tiny_backbone, 3, "stag_std", tiny_side, precision="double", seed=9)
    other.load_state(state)
    assert np.array_equal(other.forward(batch).value, logits)


@pytest.mark.parametrize("strategy", ["head_only", "stag_std"])
def test_initial_loss_is_near_uniform(desk_backbone, strategy):
    classes = 4
    side = None
    if strategy == "stag_std":
        side = StagConfig.build(desk_backbone.d, desk_backbone.L, 4, d_prime=16, n=desk_backbone.n)
    model = StagClassifier(desk_backbone, classes, strategy, side, seed=3)
    batch = make_batch(desk_backbone, model.graph_k, count=8, points=128)
    labels = np.arange(8) % classes
    loss = cross_entropy(model.forward(batch), labels).value
    assert float(loss) == pytest.approx(np.log(classes), abs=0.2)
