"""
Signed log-domain arithmetic.

Values are carried as (sign, log10|x|) with sign in {-1, 0, +1} and
log10|0| = -inf.  Sums go through scipy's logsumexp with the signs passed as
weights so that cancellation is resolved in one pass.
"""

import math

import numpy as np
from scipy.special import logsumexp

LN10 = math.log(10.0)
NEG_INF = -math.inf


def to_log10(x: float) -> tuple[int, float]:
    """Split a real into (sign, log10|x|)."""
    if x == 0.0:
        return 0, NEG_INF
    return (1 if x > 0 else -1), math.log10(abs(x))


def pow10(x: float) -> float:
    """10**x that saturates to inf instead of raising OverflowError."""
    if x > 308.25:
        return math.inf
    return 10.0 ** x


def from_log10(sign: int, log_abs: float) -> float:
    """Back to linear scale; overflows to ±inf rather than raising."""
    if sign == 0:
        return 0.0
    return sign * pow10(log_abs)


def signed_sum(signs, log_abs) -> tuple[int, float]:
    """
    Sum of sign_i * 10**log_abs_i, returned as (sign, log10|sum|).

    Zero terms (sign 0) are ignored; an empty or fully cancelling sum is
    (0, -inf).
    """
    signs = np.asarray(signs, dtype=np.float64)
    log_abs = np.asarray(log_abs, dtype=np.float64)
    mask = signs != 0
    if not mask.any():
        return 0, NEG_INF
    ln_mag, sgn = logsumexp(log_abs[mask] * LN10, b=signs[mask], return_sign=True)
    if sgn == 0 or not np.isfinite(ln_mag):
        return 0, NEG_INF
    return int(sgn), float(ln_mag / LN10)


def signed_add(a: tuple[int, float], b: tuple[int, float]) -> tuple[int, float]:
    return signed_sum([a[0], b[0]], [a[1], b[1]])

