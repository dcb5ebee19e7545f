from typing import Union

import numpy as np

from ..errors import InvalidArgumentError

__all__ = ("bessel_j0",)

SERIES_LIMIT = 12.0
_SERIES_TERMS = 60
_ASYMPTOTIC_TERMS = 80

ArrayOrFloat = Union[float, np.ndarray]


def _power_series(x: np.ndarray) -> np.ndarray:
    quarter_sq = -(x * x) / 4.0
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS):
        term = term * quarter_sq / (k * k)
        total = total + term

    return total


def _hankel_asymptotic(x: np.ndarray) -> np.ndarray:
    # the expansion diverges, so each element sums terms only while they keep shrinking
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)

    for k in range(1, _ASYMPTOTIC_TERMS):
        next_term = term * (-((2 * k - 1) ** 2) / (8.0 * k * x))
        active &= np.abs(next_term) <= np.abs(term)
        term = next_term
        contribution = np.where(active, term, 0.0)

        if k % 2 == 0:
            p = p + (-1) ** (k // 2) * contribution
        else:
            q = q + (-1) ** ((k - 1) // 2) * contribution

        if not active.any():
            break

    chi = x - np.pi / 4
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j0(x: ArrayOrFloat) -> ArrayOrFloat:
    """
    Bessel function of the first kind of order zero.

    The power series is used for ``|x| <= 12`` and the Hankel asymptotic expansion,
    truncated at its smallest term, beyond. Absolute error stays below 1e-10 on ``|x| <= 50``.

    Args:
        x: Real scalar or array.

    Returns:
        J_0 evaluated elementwise, with the same shape as ``x``.

    >>> float(bessel_j0(0.0))
    1.0
    """
    values = np.abs(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("bessel_j0 requires finite arguments")

    flat = values.reshape(-1)
    result = np.empty_like(flat)

    small = flat <= SERIES_LIMIT
    if small.any():
        result[small] = _power_series(flat[small])
    if (~small).any():
        result[~small] = _hankel_asymptotic(flat[~small])

    result = result.reshape(values.shape)
    if result.ndim == 0:
        return float(result)

    return result
