"""
Splitting envelopes, the bracketing sequences H_max / H_min, the fundamental
sequence H_0 and the weighted sup-norm.

Sequences are stored as (sign, log10|H^{n+1}|) arrays indexed by
k = (n-1)/2; the n!-type growth of the entries rules out linear storage for
n in the hundreds.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from config import D0, INCLUDE_J2_ZERO
from errors import DomainError, SingularityError, UsageError
from logmath import NEG_INF, from_log10, pow10, signed_add, to_log10
from phi4.terms import c_term, d_term

logger = logging.getLogger(__name__)


def _check_lambda(lambda_: float) -> None:
    if not lambda_ > 0.0:
        raise DomainError(f"the coupling Λ must be positive, got {lambda_!r}")


def _check_n(n: int) -> None:
    if n < 3 or n % 2 == 0:
        raise DomainError(f"n must be an odd integer >= 3, got {n}")


def _check_n_work(n_work: int) -> None:
    if n_work < 5 or n_work % 2 == 0:
        raise DomainError(f"n_work must be an odd integer >= 5, got {n_work}")


# ── Sequence containers ──────────────────────────────────────
@dataclass(frozen=True, eq=False)
class GreenSequence:
    """H = {H^{n+1}(Λ)} for odd n = 1, 3, ..., n_work."""

    lambda_: float
    signs: np.ndarray  # int8 in {-1, 0, +1}
    log_abs: np.ndarray  # log10|H^{n+1}|, -inf where the sign is 0

    def __post_init__(self):
        _check_lambda(self.lambda_)
        signs = np.asarray(self.signs, dtype=np.int8).copy()
        log_abs = np.asarray(self.log_abs, dtype=np.float64).copy()
        if signs.shape != log_abs.shape or signs.ndim != 1 or signs.size == 0:
            raise UsageError("signs and log_abs must be equal-length 1-D arrays")
        if np.any(np.abs(signs) > 1):
            raise UsageError("signs must lie in {-1, 0, +1}")
        log_abs[signs == 0] = NEG_INF
        signs.flags.writeable = False
        log_abs.flags.writeable = False
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "log_abs", log_abs)

    @classmethod
    def from_values(cls, lambda_: float, values) -> "GreenSequence":
        pairs = [to_log10(float(v)) for v in values]
        return cls(lambda_, np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))

    @classmethod
    def zeros(cls, lambda_: float, n_work: int) -> "GreenSequence":
        size = (n_work + 1) // 2
        return cls(lambda_, np.zeros(size, dtype=np.int8), np.full(size, NEG_INF))

    @property
    def n_work(self) -> int:
        return 2 * self.signs.size - 1

    @property
    def grid(self) -> np.ndarray:
        return np.arange(1, self.n_work + 1, 2)

    def _index(self, n: int) -> int:
        if n < 1 or n % 2 == 0 or n > self.n_work:
            raise UsageError(f"n={n} is not on the odd grid 1..{self.n_work}")
        return (n - 1) // 2

    def sign(self, n: int) -> int:
        return int(self.signs[self._index(n)])

    def log10_abs(self, n: int) -> float:
        return float(self.log_abs[self._index(n)])

    def entry(self, n: int) -> tuple[int, float]:
        k = self._index(n)
        return int(self.signs[k]), float(self.log_abs[k])

    def value(self, n: int) -> float:
        return from_log10(*self.entry(n))

    def truncate(self, n_max: int) -> "GreenSequence":
        if n_max > self.n_work:
            raise UsageError(f"cannot truncate a sequence of n_work={self.n_work} to {n_max}")
        size = (n_max + 1) // 2
        return GreenSequence(self.lambda_, self.signs[:size], self.log_abs[:size])

    def extended(self, source: "GreenSequence") -> "GreenSequence":
        """Keep own entries, take the missing top entries from source."""
        if source.n_work <= self.n_work:
            return self
        size = self.signs.size
        return GreenSequence(
            self.lambda_,
            np.concatenate([self.signs, source.signs[size:]]),
            np.concatenate([self.log_abs, source.log_abs[size:]]),
        )

    def scaled(self, c: float) -> "GreenSequence":
        if c == 0.0:
            return GreenSequence.zeros(self.lambda_, self.n_work)
        s, la = to_log10(c)
        return GreenSequence(self.lambda_, self.signs * s, self.log_abs + la)

    def perturbed(self, relative: np.ndarray) -> "GreenSequence":
        """Entrywise H^{n+1} * (1 + relative_k)."""
        factor = 1.0 + np.asarray(relative, dtype=np.float64)
        return GreenSequence(
            self.lambda_,
            self.signs * np.sign(factor).astype(np.int8),
            self.log_abs + np.log10(np.abs(factor)),
        )

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.log_abs[self.signs != 0])))

    def same_grid(self, other) -> bool:
        return self.lambda_ == other.lambda_ and self.signs.size == other.signs.size


@dataclass(frozen=True)
class DeltaSequence:
    """
    Splitting factors δ_n(Λ) on the odd grid.  values[0] is δ_1, whose sign is
    free; entries that could not be extracted are NaN.
    """

    lambda_: float
    values: np.ndarray

    @property
    def n_work(self) -> int:
        return 2 * self.values.size - 1

    @property
    def delta1(self) -> float:
        return float(self.values[0])

    def at(self, n: int) -> float:
        return float(self.values[(n - 1) // 2])


@dataclass(frozen=True)
class NormWeights:
    lambda_: float
    log_m: np.ndarray  # log10 M_n

    @property
    def n_work(self) -> int:
        return 2 * self.log_m.size - 1

    def at(self, n: int) -> float:
        return pow10(float(self.log_m[(n - 1) // 2]))


# ── Envelopes ────────────────────────────────────────────────
def delta_max(n: int, lambda_: float, d0: float = D0) -> float:
    _check_n(n)
    _check_lambda(lambda_)
    if n == 3:
        return 6.0 * lambda_
    x = 3.0 * lambda_ * n * (n - 1)
    return x / (1.0 + x * d0)


def delta_min(n: int, lambda_: float) -> float:
    _check_n(n)
    _check_lambda(lambda_)
    if n == 3:
        return 6.0 * lambda_ / (1.0 + 9.0 * lambda_ * (1.0 + 6.0 * lambda_**2))
    x = 3.0 * lambda_ * n * (n - 1)
    return x / (1.0 + x)


def _build_by_splitting(lambda_: float, n_work: int, h2: tuple, h4: tuple, delta_fn) -> GreenSequence:
    """H^{n+1} = δ_n C^{n+1} / 3Λn(n-1) for n >= 5, on top of the given H², H⁴."""
    size = (n_work + 1) // 2
    signs = np.zeros(size, dtype=np.int8)
    log_abs = np.full(size, NEG_INF)
    signs[0], log_abs[0] = h2
    signs[1], log_abs[1] = h4
    for n in range(5, n_work + 1, 2):
        c_sign, c_log = c_term(signs, log_abs, lambda_, n)
        k = (n - 1) // 2
        signs[k] = c_sign
        log_abs[k] = c_log + math.log10(delta_fn(n)) - math.log10(3.0 * lambda_ * n * (n - 1))
    return GreenSequence(lambda_, signs, log_abs)


def build_h_max(lambda_: float, n_work: int, d0: float = D0) -> GreenSequence:
    _check_lambda(lambda_)
    _check_n_work(n_work)
    log_h2 = 2.0 * math.log10(1.0 + 6.0 * lambda_**2)
    h4 = (-1, math.log10(6.0 * lambda_) + 3.0 * log_h2)
    return _build_by_splitting(lambda_, n_work, (1, log_h2), h4, lambda n: delta_max(n, lambda_, d0))


def build_h_min(lambda_: float, n_work: int) -> GreenSequence:
    _check_lambda(lambda_)
    _check_n_work(n_work)
    # H⁴_min = -δ_{3,min} (H²_min)³ with H²_min = 1
    h4 = (-1, math.log10(delta_min(3, lambda_)))
    return _build_by_splitting(lambda_, n_work, (1, 0.0), h4, lambda n: delta_min(n, lambda_))


def build_h0(
    lambda_: float,
    n_work: int,
    d0: float = D0,
    include_j2_zero: bool = INCLUDE_J2_ZERO,
) -> GreenSequence:
    """
    The fundamental sequence.  D_n(H_min) reads A^{n+1}_min = -ΛH^{n+3}_min,
    so the envelopes are built two entries beyond n_work.
    """
    _check_lambda(lambda_)
    _check_n_work(n_work)
    h_min = build_h_min(lambda_, n_work + 2)
    h_max = build_h_max(lambda_, n_work + 2, d0)

    size = (n_work + 1) // 2
    signs = np.zeros(size, dtype=np.int8)
    log_abs = np.full(size, NEG_INF)

    # H²_0 = 1 - ΛH⁴_min, kept in log1p form for small Λ
    x = -lambda_ * h_min.value(3)
    signs[0], log_abs[0] = 1, math.log1p(x) / math.log(10.0)

    d3 = d_term(h_min.signs, h_min.log_abs, lambda_, 3, include_j2_zero)
    if d3 is None or 1.0 + d3 <= 0.0:
        raise SingularityError(lambda_, 3, "δ_{3,0} denominator")
    delta_30 = 6.0 * lambda_ / (1.0 + d3)
    signs[1], log_abs[1] = -1, math.log10(delta_30) + 3.0 * log_abs[0]

    for n in range(5, n_work + 1, 2):
        d_n = d_term(h_min.signs, h_min.log_abs, lambda_, n, include_j2_zero, denominator=h_max.entry(n))
        if d_n is None or 1.0 + d_n <= 0.0:
            raise SingularityError(lambda_, n, "δ_{n,0} denominator")
        c_sign, c_log = c_term(signs, log_abs, lambda_, n)
        k = (n - 1) // 2
        signs[k] = c_sign
        log_abs[k] = c_log - math.log10(1.0 + d_n)

    logger.debug("built H_0 at Λ=%g up to n=%d", lambda_, n_work)
    return GreenSequence(lambda_, signs, log_abs)


def build_start(label: str, lambda_: float, n_work: int, d0: float = D0, include_j2_zero: bool = INCLUDE_J2_ZERO):
    """Start sequence for an iteration: one of max, min, h0."""
    if label == "max":
        return build_h_max(lambda_, n_work, d0)
    if label == "min":
        return build_h_min(lambda_, n_work)
    if label == "h0":
        return build_h0(lambda_, n_work, d0, include_j2_zero)
    raise UsageError(f"unknown start {label!r}; expected max, min or h0")


# ── Norm ─────────────────────────────────────────────────────
def norm_weights(lambda_: float, n_work: int, d0: float = D0) -> NormWeights:
    """M_1 = (1+6Λ²)², M_3 = δ_{3,max} M_1³, M_n = n(n-1) δ_{n,max} M_{n-2} M_1²."""
    _check_lambda(lambda_)
    size = (n_work + 1) // 2
    log_m = np.empty(size)
    log_m[0] = 2.0 * math.log10(1.0 + 6.0 * lambda_**2)
    if size > 1:
        log_m[1] = math.log10(delta_max(3, lambda_, d0)) + 3.0 * log_m[0]
    for k in range(2, size):
        n = 2 * k + 1
        log_m[k] = math.log10(n * (n - 1) * delta_max(n, lambda_, d0)) + log_m[k - 1] + 2.0 * log_m[0]
    return NormWeights(lambda_, log_m)


def _check_weights(h: GreenSequence, weights: NormWeights) -> None:
    if h.lambda_ != weights.lambda_ or h.signs.size != weights.log_m.size:
        raise UsageError(
            f"grid mismatch: sequence (Λ={h.lambda_}, n_work={h.n_work}) "
            f"vs weights (Λ={weights.lambda_}, n_work={weights.n_work})"
        )


def seq_norm(h: GreenSequence, weights: NormWeights) -> float:
    """max_n |H^{n+1}| / M_n over the stored grid."""
    _check_weights(h, weights)
    live = h.signs != 0
    if not live.any():
        return 0.0
    return pow10(float(np.max(h.log_abs[live] - weights.log_m[live])))


def difference(h: GreenSequence, g: GreenSequence) -> GreenSequence:
    """Entrywise H - G."""
    if not h.same_grid(g):
        raise UsageError(f"grid mismatch: (Λ={h.lambda_}, n_work={h.n_work}) vs (Λ={g.lambda_}, n_work={g.n_work})")
    pairs = [
        signed_add((int(sh), float(lh)), (-int(sg), float(lg)))
        for sh, lh, sg, lg in zip(h.signs, h.log_abs, g.signs, g.log_abs)
    ]
    return GreenSequence(h.lambda_, np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))


def seq_distance(h: GreenSequence, g: GreenSequence, weights: NormWeights) -> float:
    return seq_norm(difference(h, g), weights)


def envelope_table(lambda_: float, n_max: int, d0: float = D0) -> list[dict]:
    """Rows of (n, δ_max, δ_min, log10 M_n) for the envelopes subcommand."""
    weights = norm_weights(lambda_, n_max, d0)
    rows = []
    for n in range(1, n_max + 1, 2):
        rows.append(
            {
                "n": n,
                "delta_max": delta_max(n, lambda_, d0) if n >= 3 else math.nan,
                "delta_min": delta_min(n, lambda_) if n >= 3 else math.nan,
                "log10_m": float(weights.log_m[(n - 1) // 2]),
            }
        )
    return rows
