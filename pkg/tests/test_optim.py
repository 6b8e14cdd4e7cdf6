import numpy as np
import pytest

from errors import OptimizerError
from numerics.autodiff import parameter
from training.optim import AdamState, adamw_step, zero_grads


def test_first_step_moves_by_lr():
    p = parameter(np.array([1.0]), "p", tunable=True)
    p.grad = np.array([0.3])
    adamw_step([p], AdamState(), lr=0.1, weight_decay=0.0)
    assert p.value[0] == pytest.approx(0.9)


def test_decoupled_weight_decay():
    p = parameter(np.array([2.0]), "p", tunable=True)
    p.grad = np.array([0.0])
    adamw_step([p], AdamState(), lr=0.1, weight_decay=0.5)
    assert p.value[0] == pytest.approx(2.0 * (1 - 0.05))


def test_missing_grad_and_zero_grads():
    p = parameter(np.ones(2, dtype=np.float32), "p", tunable=True)
    with pytest.raises(OptimizerError):
        adamw_step([p], AdamState(), lr=0.1, weight_decay=0.0)
    p.grad = np.ones(2, dtype=np.float32)
    state = AdamState()
    adamw_step([p], state, lr=0.1, weight_decay=0.0)
    assert state.step == 1 and p.value.dtype == np.float32
    zero_grads([p])
    assert p.grad is None
