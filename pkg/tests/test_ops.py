import numpy as np
import pytest

from errors import DimensionError, IndexRangeError, NumericError
from numerics import ops
from numerics.autodiff import backward, constant, parameter
from numerics.gradcheck import finite_diff_grad, relative_error


def _check_grad(build, value: np.ndarray, tol: float = 1e-6):
    """build(node) -> scalar node; compares the analytic grad of a parameter to central differences."""
    p = parameter(value.copy(), "p", tunable=True)
    backward(build(p))

    def f(theta):
        return float(build(parameter(theta, "p", tunable=True)).value)

    numeric = finite_diff_grad(f, value.copy())
    assert relative_error(p.grad, numeric) < tol


GEN = np.random.default_rng(3)
X_FIXED = GEN.normal(size=(4, 3))


def test_linear_apply_shapes_and_errors():
    x = constant(np.ones((2, 5, 3)))
    W = constant(np.ones((3, 4)))
    assert ops.linear_apply(x, W).shape == (2, 5, 4)
    with pytest.raises(DimensionError):
        ops.linear_apply(x, constant(np.ones((2, 4))))
    with pytest.raises(DimensionError):
        ops.linear_apply(x, W, constant(np.ones(3)))
    with pytest.raises(NumericError):
        ops.linear_apply(constant(np.array([[np.nan, 0.0, 0.0]])), W)


def test_matmul_rejects_mismatch():
    with pytest.raises(DimensionError):
        ops.matmul(constant(np.ones((2, 3, 4))), constant(np.ones((2, 5, 6))))


def test_gather_rows_index_range():
    x = constant(np.arange(6.0).reshape(3, 2))
    assert np.array_equal(ops.gather_rows(x, np.array([2, 0])).value, [[4.0, 5.0], [0.0, 1.0]])
    with pytest.raises(IndexRangeError):
        ops.gather_rows(x, np.array([3]))


def test_row_softmax_rows_sum_to_one():
    out = ops.row_softmax(constant(GEN.normal(size=(3, 4, 5)) * 50))
    assert np.allclose(out.value.sum(axis=-1), 1.0)


def test_row_max_pool_and_mean_pool_single_row():
    x = constant(np.array([[1.0, -2.0, 3.0]]))
    assert np.array_equal(ops.row_max_pool(x).value, ops.row_mean_pool(x).value)


@pytest.mark.parametrize("name,build", [
    ("linear", lambda p: ops.sum_all(ops.leaky_rectifier(ops.linear_apply(constant(X_FIXED), p)))),
    ("softmax", lambda p: ops.sum_all(ops.mask_multiply(ops.row_softmax(ops.reshape(p, (3, 3))),
                                                        np.arange(9.0).reshape(3, 3)))),
    ("layer_norm", lambda p: ops.sum_all(ops.mask_multiply(
        ops.layer_norm(ops.reshape(p, (3, 3)), constant(np.array([1.0, 2.0, 0.5])), constant(np.zeros(3))),
        np.arange(9.0).reshape(3, 3)))),
    ("max_pool", lambda p: ops.sum_all(ops.row_max_pool(ops.reshape(p, (3, 3))))),
    ("gather", lambda p: ops.sum_all(ops.scale(ops.gather_rows(ops.reshape(p, (3, 3)), np.array([0, 0, 2])), 2.0))),
    ("attention", lambda p: ops.sum_all(ops.matmul(
        ops.row_softmax(ops.matmul(ops.reshape(p, (1, 3, 3)), ops.transpose(ops.reshape(p, (1, 3, 3)), (0, 2, 1)))),
        ops.reshape(p, (1, 3, 3))))),
])
def test_gradients_match_finite_differences(name, build):
    _check_grad(build, GEN.normal(size=(3, 3)))


def test_layer_norm_rows_are_standardised():
    x = constant(GEN.normal(size=(4, 8)) * 3 + 1)
    out = ops.layer_norm(x, constant(np.ones(8)), constant(np.zeros(8)))
    assert np.allclose(out.value.mean(axis=-1), 0.0, atol=1e-9)
    assert np.allclose(out.value.std(axis=-1), 1.0, atol=1e-4)
