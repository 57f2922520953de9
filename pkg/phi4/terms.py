"""
Array kernels for the A, B and C terms of the equations of motion.

Every function works on the raw (signs, log_abs) arrays of a sequence, indexed
by k = (n-1)/2, and returns a (sign, log10|value|) pair.  The GreenSequence
wrappers live in phi4.dynamics; the builders in phi4.sequences call these
directly while their arrays are still being filled bottom-up.
"""

import math

import numpy as np

from errors import PaddingRequiredError
from logmath import NEG_INF, pow10, signed_sum
from phi4.combinatorics import pair_table, triple_table


def _k(n) -> np.ndarray:
    return (np.asarray(n) - 1) // 2


def a_term(signs: np.ndarray, log_abs: np.ndarray, lambda_: float, n: int) -> tuple[int, float]:
    """A^{n+1} = -Λ H^{n+3}"""
    k = (n + 1) // 2
    if k >= signs.size:
        raise PaddingRequiredError(n + 2, 2 * signs.size - 1)
    if signs[k] == 0:
        return 0, NEG_INF
    return -int(signs[k]), float(log_abs[k]) + math.log10(lambda_)


def b_term(
    signs: np.ndarray, log_abs: np.ndarray, lambda_: float, n: int, include_j2_zero: bool
) -> tuple[int, float]:
    """B^{n+1} = -3Λ Σ_{ϖ_n(J)} n!/(j1! j2!) H^{j2+2} H^{j1+1}"""
    if _k(n) >= signs.size:
        raise PaddingRequiredError(n, 2 * signs.size - 1)
    table = pair_table(n, include_j2_zero)
    ka = _k(table.j2 + 1)
    kb = _k(table.j1)
    term_signs = signs[ka] * signs[kb]
    term_logs = log_abs[ka] + log_abs[kb] + table.log_coef / math.log(10.0)
    sign, log_sum = signed_sum(term_signs, term_logs)
    if sign == 0:
        return 0, NEG_INF
    return -sign, log_sum + math.log10(3.0 * lambda_)


def c_term(signs: np.ndarray, log_abs: np.ndarray, lambda_: float, n: int) -> tuple[int, float]:
    """C^{n+1} = -6Λ Σ_{ϖ_n(I)} n!/(i1! i2! i3! σ_sym) Π H^{i_l+1}; needs entries up to n-2 only."""
    table = triple_table(n)
    k1, k2, k3 = _k(table.i1), _k(table.i2), _k(table.i3)
    term_signs = signs[k1] * signs[k2] * signs[k3]
    term_logs = log_abs[k1] + log_abs[k2] + log_abs[k3] + table.log_coef / math.log(10.0)
    sign, log_sum = signed_sum(term_signs, term_logs)
    if sign == 0:
        return 0, NEG_INF
    return -sign, log_sum + math.log10(6.0 * lambda_)


def d_term(
    signs: np.ndarray,
    log_abs: np.ndarray,
    lambda_: float,
    n: int,
    include_j2_zero: bool,
    denominator: tuple[int, float] | None = None,
) -> float | None:
    """
    D_n = (|B^{n+1}| - |A^{n+1}|) / |denominator|, the denominator defaulting to
    |H^{n+1}| of the same sequence.  None when the denominator vanishes.
    """
    if denominator is None:
        k = _k(n)
        denominator = (int(signs[k]), float(log_abs[k]))
    if denominator[0] == 0:
        return None
    b = b_term(signs, log_abs, lambda_, n, include_j2_zero)
    a = a_term(signs, log_abs, lambda_, n)
    b_ratio = 0.0 if b[0] == 0 else pow10(b[1] - denominator[1])
    a_ratio = 0.0 if a[0] == 0 else pow10(a[1] - denominator[1])
    return b_ratio - a_ratio
