import math

import numpy as np
import pytest

from errors import LabelError
from numerics.autodiff import backward, parameter
from training.loss import cross_entropy


def test_uniform_logits_give_log_classes():
    logits = parameter(np.zeros((3, 4)), "z", tunable=True)
    assert float(cross_entropy(logits, [0, 1, 3]).value) == pytest.approx(math.log(4))


def test_two_class_value_and_gradient():
    logits = parameter(np.array([[1.0, 0.0]]), "z", tunable=True)
    loss = cross_entropy(logits, [0])
    assert float(loss.value) == pytest.approx(0.31326, abs=1e-5)
    backward(loss)
    p = 1.0 / (1.0 + math.exp(-1.0))
    assert np.allclose(logits.grad, [[p - 1.0, 1.0 - p]])


def test_large_logits_stay_finite():
    logits = parameter(np.array([[1000.0, -1000.0]]), "z", tunable=True)
    assert float(cross_entropy(logits, [1]).value) == pytest.approx(2000.0)


def test_label_errors():
    logits = parameter(np.zeros((2, 3)), "z", tunable=True)
    with pytest.raises(LabelError):
        cross_entropy(logits, [0, 3])
    with pytest.raises(LabelError):
        cross_entropy(logits, [0])
