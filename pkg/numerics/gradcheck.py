"""
numerics/gradcheck.py
Central-difference gradient oracle used to verify backward().
"""

from typing import Callable

import numpy as np

from errors import ContractError, OracleError


def finite_diff_grad(f: Callable[[np.ndarray], float], theta: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """
    (f(θ+εe) − f(θ−εe)) / 2ε for every entry of θ.

    f receives a perturbed copy of θ and must be deterministic; θ must be
    double precision.
    """
    theta = np.asarray(theta)
    if eps <= 0:
        raise ContractError("eps must be positive")
    if theta.dtype != np.float64:
        raise ContractError(f"finite differences need float64, got {theta.dtype}")

    base = float(f(theta.copy()))
    if float(f(theta.copy())) != base:
        raise OracleError("f is not deterministic: repeated evaluations differ")

    grad = np.zeros_like(theta)
    shifted = theta.copy()
    for idx in np.ndindex(theta.shape):
        original = shifted[idx]
        shifted[idx] = original + eps
        upper = float(f(shifted.copy()))
        shifted[idx] = original - eps
        lower = float(f(shifted.copy()))
        shifted[idx] = original
        grad[idx] = (upper - lower) / (2.0 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """max |a − n| / max(max |a|, max |n|, floor), the comparison used by the gradient suites."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if not analytic.size:
        return 0.0
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric)) / scale)
