"""Associated Laguerre polynomials.

Only integer upper index is supported. Values at negative arguments are
needed for displaced-thermal photon statistics and grow far beyond the
floating-point range for large degree, so a log-domain evaluator is provided
next to the plain one.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

__all__ = [
    "LaguerreOrder",
    "LaguerreOverflowError",
    "laguerre",
    "log_laguerre_neg",
    "log_laguerre_neg_table",
]

# rescale the running pair once the mantissa passes 2**_RESCALE_EXP
_RESCALE_EXP = 600
_LN2 = math.log(2.0)


class LaguerreOverflowError(OverflowError):
    """Raised when L_n^(lam)(x) does not fit in a float; use the log form."""


class LaguerreOrder(NamedTuple):
    n: int
    lam: int = 0


def _split(n, lam, x):
    # accept laguerre(LaguerreOrder(n, lam), x) as well as laguerre(n, lam, x)
    if x is None:
        if not isinstance(n, tuple):
            raise TypeError("pass (n, lam, x) or (LaguerreOrder, x)")
        (n, lam), x = n, lam
    return n, lam, x


def _check_order(n, lam):
    if int(n) != n or n < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {n!r}")
    if int(lam) != lam or lam < 0:
        raise ValueError(f"upper index must be a nonnegative integer, got {lam!r}")
    return int(n), int(lam)


def _check_neg_arg(x):
    x = float(x)
    if not (x >= 0.0 and math.isfinite(x)):
        raise ValueError(f"x must be finite and nonnegative, got {x!r}")
    return x


def laguerre(n, lam, x=None) -> float:
    """Evaluate L_n^(lam)(x) by the forward three-term recurrence.

    Parameters
    ----------
    n : int or LaguerreOrder
        Polynomial degree, ``n >= 0``, or an order pair (then ``lam`` is
        the argument).
    lam : int
        Upper index, ``lam >= 0``.
    x : float
        Finite argument.

    Returns
    -------
    float

    Raises
    ------
    LaguerreOverflowError
        If an intermediate value leaves the floating-point range.
    """
    n, lam, x = _split(n, lam, x)
    n, lam = _check_order(n, lam)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if n == 0:
        return 1.0
    prev, cur = 1.0, 1.0 + lam - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + lam - x) * cur - (k + lam) * prev) / (k + 1)
        if not math.isfinite(cur):
            raise LaguerreOverflowError(
                f"L_{n}^({lam})({x}) overflows at degree {k + 1}"
            )
    return cur


def log_laguerre_neg(n, lam, x=None) -> float:
    """Return ln L_n^(lam)(-x) for ``x >= 0``.

    Every coefficient of L_n^(lam)(-x) is positive, so the value is positive
    and the forward recurrence is stable. The recurrence runs on a
    (mantissa, binary exponent) pair and only the final mantissa is passed
    through a logarithm.
    """
    n, lam, x = _split(n, lam, x)
    n, lam = _check_order(n, lam)
    x = _check_neg_arg(x)
    if n == 0:
        return 0.0
    prev, cur = 1.0, 1.0 + lam + x
    exp2 = 0
    threshold = math.ldexp(1.0, _RESCALE_EXP)
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + lam + x) * cur - (k + lam) * prev) / (k + 1)
        if cur > threshold:
            prev = math.ldexp(prev, -_RESCALE_EXP)
            cur = math.ldexp(cur, -_RESCALE_EXP)
            exp2 += _RESCALE_EXP
    return math.log(cur) + exp2 * _LN2


def log_laguerre_neg_table(n_max: int, lam: int, x: float) -> np.ndarray:
    """Return ``ln L_k^(lam)(-x)`` for every ``k = 0..n_max`` as an array."""
    n_max, lam = _check_order(n_max, lam)
    x = _check_neg_arg(x)

    out = np.empty(n_max + 1)
    out[0] = 0.0
    if n_max == 0:
        return out

    prev, cur = 1.0, 1.0 + lam + x
    exp2 = 0
    out[1] = math.log(cur)
    threshold = math.ldexp(1.0, _RESCALE_EXP)
    for k in range(1, n_max):
        prev, cur = cur, ((2 * k + 1 + lam + x) * cur - (k + lam) * prev) / (k + 1)
        if cur > threshold:
            # power-of-two scaling is exact
            prev = math.ldexp(prev, -_RESCALE_EXP)
            cur = math.ldexp(cur, -_RESCALE_EXP)
            exp2 += _RESCALE_EXP
        out[k + 1] = math.log(cur) + exp2 * _LN2
    return out
