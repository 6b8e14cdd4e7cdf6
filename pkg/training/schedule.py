"""
training/schedule.py
Cosine learning-rate decay from lr_max to lr_min.
"""

import math

from config import LR_MAX, LR_MIN
from errors import ScheduleError


def cosine_lr(t: float, T: float, lr_max: float = LR_MAX, lr_min: float = LR_MIN) -> float:
    """lr_min + ½(lr_max − lr_min)(1 + cos(πt/T)); both endpoints are returned exactly."""
    if t < 0 or t > T:
        raise ScheduleError(f"epoch {t} outside [0, {T}]")
    if t == 0:
        return lr_max
    if t == T:
        return lr_min
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + math.cos(math.pi * t / T))
