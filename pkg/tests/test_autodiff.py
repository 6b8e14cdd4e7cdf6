import numpy as np
import pytest

from errors import ContractError
from numerics import ops
from numerics.autodiff import Tape, backward, constant, parameter, scope


def test_requires_grad_propagates_from_tunable_only():
    x = constant(np.ones((2, 3)))
    frozen = parameter(np.ones((3, 2)), "frozen", tunable=False)
    tunable = parameter(np.ones((3, 2)), "tunable", tunable=True)
    assert not ops.linear_apply(x, frozen).requires_grad
    assert ops.linear_apply(x, tunable).requires_grad


def test_backward_linear_grads():
    x = constant(np.array([[1.0, 2.0]]))
    W = parameter(np.array([[3.0], [4.0]]), "W", tunable=True)
    b = parameter(np.array([0.5]), "b", tunable=True)
    loss = ops.sum_all(ops.linear_apply(x, W, b))
    backward(loss)
    assert np.allclose(W.grad, [[1.0], [2.0]])
    assert np.allclose(b.grad, [1.0])
    assert x.grad is None


def test_backward_rejects_non_scalar_and_frozen_loss():
    W = parameter(np.ones((2, 2)), "W", tunable=True)
    with pytest.raises(ContractError):
        backward(ops.linear_apply(constant(np.ones((1, 2))), W))
    frozen = parameter(np.ones((2, 2)), "F", tunable=False)
    with pytest.raises(ContractError):
        backward(ops.sum_all(ops.linear_apply(constant(np.ones((1, 2))), frozen)))


def test_elision_skips_frozen_branch_and_keeps_tunable_grads():
    gen = np.random.default_rng(0)
    x = constant(gen.normal(size=(4, 3)))
    frozen = parameter(gen.normal(size=(3, 3)), "frozen", tunable=False)
    tunable = parameter(gen.normal(size=(3, 2)), "tunable", tunable=True)

    def build():
        with scope("frozen_part"):
            h = ops.leaky_rectifier(ops.linear_apply(x, frozen))
        with scope("tuned_part"):
            return ops.sum_all(ops.linear_apply(h, tunable))

    log = backward(build())
    elided_grad = tunable.grad.copy()
    assert "frozen_part" not in log.scopes()
    assert frozen.grad is None

    tunable.grad = None
    full_log = backward(build(), elide=False)
    assert "frozen_part" in full_log.scopes()
    assert frozen.grad is not None
    assert np.array_equal(tunable.grad, elided_grad)


def test_tape_records_scoped_forward_flops():
    x = constant(np.ones((5, 4)))
    W = parameter(np.ones((4, 3)), "W", tunable=True)
    with Tape() as tape:
        with scope("block"):
            out = ops.linear_apply(x, W)
        loss = ops.sum_all(out)
    assert tape.forward_flops() == 2 * 5 * 4 * 3
    assert tape.forward_flops_by_scope() == {"block": 120}
    log = backward(loss)
    # only W needs a gradient: one forward-equivalent
    assert log.backward_flops() == 120


def test_backward_counts_both_operands_when_both_need_grads():
    a = parameter(np.ones((2, 3, 4)), "a", tunable=True)
    b = parameter(np.ones((2, 4, 5)), "b", tunable=True)
    with Tape() as tape:
        loss = ops.sum_all(ops.matmul(a, b))
    log = backward(loss)
    assert tape.forward_flops() == 2 * 2 * 3 * 4 * 5
    assert log.backward_flops() == 2 * tape.forward_flops()


def test_shared_node_accumulates_grads():
    W = parameter(np.array([[2.0]]), "W", tunable=True)
    x = constant(np.array([[3.0]]))
    y = ops.linear_apply(x, W)
    backward(ops.sum_all(ops.add(y, y)))
    assert W.grad[0, 0] == pytest.approx(6.0)
