"""
Odd-integer partitions and the factorial weights of the B and C terms.

  pair set    ϖ_n(J): (j1, j2), j1 odd, j2 even, j1 + j2 = n
  triple set  ϖ_n(I): (i1, i2, i3) odd, i1 >= i2 >= i3, i1 + i2 + i3 = n

Coefficients are produced in natural-log scale through gammaln so that the
n ~ 1000 runs never touch n! directly; exact integers are available up to
n = 25 for cross-checking.
"""

import logging
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln

from config import EXACT_COEFFICIENT_MAX_N
from errors import DomainError

logger = logging.getLogger(__name__)


class PairPartition(NamedTuple):
    j1: int
    j2: int


class TriplePartition(NamedTuple):
    i1: int
    i2: int
    i3: int


class LogCoefficient(NamedTuple):
    sign: int
    log_mag: float  # natural log

    @property
    def value(self) -> float:
        return self.sign * math.exp(self.log_mag)


def _check_odd(n: int) -> None:
    if n < 3 or n % 2 == 0:
        raise DomainError(f"n must be an odd integer >= 3, got {n}")


# ── Enumeration ──────────────────────────────────────────────
def pair_partitions(n: int, include_j2_zero: bool) -> list[PairPartition]:
    """All (j1, j2) with j1 odd and j1 + j2 = n, ascending in j1."""
    _check_odd(n)
    top = n if include_j2_zero else n - 2
    return [PairPartition(j1, n - j1) for j1 in range(1, top + 1, 2)]


def triple_partitions(n: int) -> list[TriplePartition]:
    """Canonical (non-increasing) odd triples summing to n, in descending lexicographic order."""
    _check_odd(n)
    out = []
    for i3 in range(1, n // 3 + 1, 2):
        for i2 in range(i3, (n - i3) // 2 + 1, 2):
            i1 = n - i2 - i3
            if i1 >= i2:
                out.append(TriplePartition(i1, i2, i3))
    out.sort(reverse=True)
    return out


def ordered_triples(n: int) -> list[TriplePartition]:
    """Brute force: every ordered triple of odd positive integers summing to n."""
    _check_odd(n)
    return [
        TriplePartition(a, b, n - a - b)
        for a in range(1, n, 2)
        for b in range(1, n - a, 2)
        if n - a - b >= 1
    ]


def symmetry_factor(triple: TriplePartition) -> int:
    i1, i2, i3 = triple
    if i1 == i2 == i3:
        return 6
    if i1 != i2 and i2 != i3 and i1 != i3:
        return 1
    return 2


# ── Coefficients ─────────────────────────────────────────────
def _log_factorial(k) -> float:
    return gammaln(np.asarray(k, dtype=np.float64) + 1.0)


def pair_coefficient(n: int, p: PairPartition) -> LogCoefficient:
    """n! / (j1! j2!)"""
    if p.j1 + p.j2 != n:
        raise DomainError(f"{p} is not a partition of {n}")
    return LogCoefficient(1, float(_log_factorial(n) - _log_factorial(p.j1) - _log_factorial(p.j2)))


def triple_coefficient(n: int, triple: TriplePartition) -> LogCoefficient:
    """n! / (i1! i2! i3! σ_sym)"""
    if sum(triple) != n:
        raise DomainError(f"{triple} is not a partition of {n}")
    log_mag = _log_factorial(n) - sum(_log_factorial(i) for i in triple) - math.log(symmetry_factor(triple))
    return LogCoefficient(1, float(log_mag))


def exact_pair_coefficient(n: int, p: PairPartition) -> int:
    if n > EXACT_COEFFICIENT_MAX_N:
        raise DomainError(f"exact coefficients are only offered up to n={EXACT_COEFFICIENT_MAX_N}")
    return math.factorial(n) // (math.factorial(p.j1) * math.factorial(p.j2))


def exact_triple_coefficient(n: int, triple: TriplePartition) -> int:
    if n > EXACT_COEFFICIENT_MAX_N:
        raise DomainError(f"exact coefficients are only offered up to n={EXACT_COEFFICIENT_MAX_N}")
    multinomial = math.factorial(n) // math.prod(math.factorial(i) for i in triple)
    return multinomial // symmetry_factor(triple)


def orbit_identity_holds(n: int) -> bool:
    """
    Σ_canonical multinomial * 6/σ  ==  Σ_ordered multinomial, in exact integers.
    """
    fact = math.factorial

    def multinomial(t):
        return fact(n) // (fact(t[0]) * fact(t[1]) * fact(t[2]))

    canonical = sum(multinomial(t) * (6 // symmetry_factor(t)) for t in triple_partitions(n))
    ordered = sum(multinomial(t) for t in ordered_triples(n))
    return canonical == ordered


# ── Vectorised tables ────────────────────────────────────────
class PairTable(NamedTuple):
    j1: np.ndarray
    j2: np.ndarray
    log_coef: np.ndarray  # natural log


class TripleTable(NamedTuple):
    i1: np.ndarray
    i2: np.ndarray
    i3: np.ndarray
    log_coef: np.ndarray  # natural log, σ_sym folded in


@lru_cache(maxsize=4096)
def pair_table(n: int, include_j2_zero: bool) -> PairTable:
    _check_odd(n)
    top = n if include_j2_zero else n - 2
    j1 = np.arange(1, top + 1, 2, dtype=np.int64)
    j2 = n - j1
    log_coef = _log_factorial(n) - _log_factorial(j1) - _log_factorial(j2)
    return PairTable(j1, j2, log_coef)


@lru_cache(maxsize=4096)
def triple_table(n: int) -> TripleTable:
    """Array form of triple_partitions(n); built on a mesh so n ~ 1000 stays cheap."""
    _check_odd(n)
    i3, i2 = np.meshgrid(np.arange(1, n // 3 + 1, 2), np.arange(1, n // 2 + 1, 2), indexing="ij")
    i3 = i3.ravel()
    i2 = i2.ravel()
    i1 = n - i2 - i3
    keep = (i2 >= i3) & (i1 >= i2)
    i1, i2, i3 = i1[keep], i2[keep], i3[keep]
    order = np.lexsort((-i3, -i2, -i1))
    i1, i2, i3 = i1[order], i2[order], i3[order]

    sigma = np.where((i1 == i2) & (i2 == i3), 6.0, np.where((i1 != i2) & (i2 != i3), 1.0, 2.0))
    log_coef = (
        _log_factorial(n) - _log_factorial(i1) - _log_factorial(i2) - _log_factorial(i3) - np.log(sigma)
    )
    logger.debug("triple table n=%d: %d partitions", n, i1.size)
    return TripleTable(i1, i2, i3, log_coef)
