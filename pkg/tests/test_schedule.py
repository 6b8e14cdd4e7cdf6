import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import ScheduleError
from training.schedule import cosine_lr


def test_endpoints_exact_and_midpoint():
    assert cosine_lr(0, 300) == 5e-4
    assert cosine_lr(300, 300) == 1e-6
    assert cosine_lr(150, 300) == pytest.approx(2.505e-4)


@settings(max_examples=50)
@given(st.integers(min_value=1, max_value=500), st.data())
def test_monotone_non_increasing(T, data):
    t = data.draw(st.integers(min_value=0, max_value=T - 1))
    assert cosine_lr(t + 1, T) <= cosine_lr(t, T)


def test_out_of_range():
    with pytest.raises(ScheduleError):
        cosine_lr(-1, 10)
    with pytest.raises(ScheduleError):
        cosine_lr(11, 10)
