"""
Perturbative-series oracle.

Solves the equations of motion order by order in Λ:

    H²      = 1 - ΛH⁴
    H^{n+1} = -ΛH^{n+3} - 3Λ Σ_pairs ... - 6Λ Σ_triples ...

Every right-hand term carries one explicit Λ, so the order-k coefficient of
each entry follows from orders < k.  H^{n+1} starts at order (n-1)/2, which
makes the truncation exact: entries beyond 2k_max+1 vanish through order
k_max and can be dropped.

Small tables use fractions.Fraction; larger ones fall back to mpmath at
SERIES_DPS digits.  Neither path shares code with the log-domain float
kernels it is meant to check.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from config import INCLUDE_J2_ZERO, SERIES_DPS, SERIES_EXACT_MAX_N, SERIES_EXACT_MAX_ORDER
from errors import DomainError, UsageError
from logmath import NEG_INF
from phi4.combinatorics import pair_partitions, symmetry_factor, triple_partitions
from phi4.sequences import GreenSequence

logger = logging.getLogger(__name__)


def min_order(n: int) -> int:
    return (n - 1) // 2


@dataclass
class SeriesTable:
    """c_{n,k} of H^{n+1}(Λ) = Σ_k c_{n,k} Λ^k for odd n <= n_max, k <= k_max."""

    n_max: int
    k_max: int
    exact: bool
    coefficients: dict[int, list] = field(default_factory=dict)

    def coefficient(self, n: int, k: int):
        if n not in self.coefficients or not 0 <= k <= self.k_max:
            raise UsageError(f"c_{{{n},{k}}} is outside the table (n <= {self.n_max}, k <= {self.k_max})")
        return self.coefficients[n][k]

    def evaluate(self, lambda_: float, n_work: int) -> GreenSequence:
        """Sum the truncated series at Λ into a GreenSequence on 1..n_work."""
        if n_work > self.n_max:
            raise UsageError(f"table reaches n={self.n_max}, cannot evaluate up to {n_work}")
        size = (n_work + 1) // 2
        signs = np.zeros(size, dtype=np.int8)
        log_abs = np.full(size, NEG_INF)
        with mpmath.workdps(SERIES_DPS):
            lam = mpmath.mpf(lambda_)
            for n in range(1, n_work + 1, 2):
                coeffs = self.coefficients[n]
                total = mpmath.mpf(0)
                for k in range(self.k_max, -1, -1):
                    c = coeffs[k]
                    total = total * lam + (mpmath.mpf(c.numerator) / c.denominator if self.exact else c)
                if total == 0:
                    continue
                k_idx = (n - 1) // 2
                signs[k_idx] = 1 if total > 0 else -1
                log_abs[k_idx] = float(mpmath.log10(abs(total)))
        return GreenSequence(lambda_, signs, log_abs)

    def rows(self) -> list[tuple[int, int, str]]:
        out = []
        for n in sorted(self.coefficients):
            if n > self.n_max:
                continue
            for k, c in enumerate(self.coefficients[n]):
                text = str(c) if self.exact else mpmath.nstr(c, 20)
                out.append((n, k, text))
        return out


def _conv2(a: list, b: list, na: int, nb: int, q: int, zero):
    """[Λ^q] of a·b, skipping orders below the known minimal ones."""
    total = zero
    for i in range(min_order(na), q - min_order(nb) + 1):
        total += a[i] * b[q - i]
    return total


def _conv3(a: list, b: list, c: list, na: int, nb: int, nc: int, q: int, zero):
    total = zero
    mb, mc = min_order(nb), min_order(nc)
    for i in range(min_order(na), q - mb - mc + 1):
        for j in range(mb, q - i - mc + 1):
            total += a[i] * b[j] * c[q - i - j]
    return total


def perturbative_series(n_max: int, k_max: int, include_j2_zero: bool = INCLUDE_J2_ZERO) -> SeriesTable:
    if k_max < 1:
        raise DomainError(f"k_max must be >= 1, got {k_max}")
    if n_max < 1 or n_max % 2 == 0:
        raise DomainError(f"n_max must be a positive odd integer, got {n_max}")

    exact = k_max <= SERIES_EXACT_MAX_ORDER and n_max <= SERIES_EXACT_MAX_N
    grid_top = max(n_max, 2 * k_max + 1)
    grid = list(range(1, grid_top + 1, 2))
    fact = math.factorial

    if exact:
        zero, one = Fraction(0), Fraction(1)

        def num(p: int, q: int = 1):
            return Fraction(p, q)
    else:
        zero, one = mpmath.mpf(0), mpmath.mpf(1)

        def num(p: int, q: int = 1):
            return mpmath.mpf(p) / q

    with mpmath.workdps(SERIES_DPS):
        pair_weights = {}
        triple_weights = {}
        for n in grid:
            if n < 3:
                continue
            pair_weights[n] = [
                (p, num(3 * fact(n), fact(p.j1) * fact(p.j2))) for p in pair_partitions(n, include_j2_zero)
            ]
            triple_weights[n] = [
                (t, num(6 * fact(n), fact(t.i1) * fact(t.i2) * fact(t.i3) * symmetry_factor(t)))
                for t in triple_partitions(n)
            ]

        c = {n: [zero] * (k_max + 1) for n in grid + [grid_top + 2]}
        for k in range(k_max + 1):
            for n in grid:
                if k < min_order(n):
                    continue
                if n == 1:
                    c[1][k] = (one if k == 0 else zero) - (c[3][k - 1] if k >= 1 else zero)
                    continue
                q = k - 1
                total = c[n + 2][q]
                for p, w in pair_weights[n]:
                    total += w * _conv2(c[p.j2 + 1], c[p.j1], p.j2 + 1, p.j1, q, zero)
                for t, w in triple_weights[n]:
                    total += w * _conv3(c[t.i1], c[t.i2], c[t.i3], t.i1, t.i2, t.i3, q, zero)
                c[n][k] = -total

    logger.info("series oracle: n <= %d, order %d, %s arithmetic", n_max, k_max, "exact" if exact else "mpmath")
    return SeriesTable(n_max, k_max, exact, {n: c[n] for n in grid if n <= n_max})
