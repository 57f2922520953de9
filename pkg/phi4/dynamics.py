"""
The mapping M*, the fixed-point iteration built on it, and a numerical estimate
of its contraction constant around H_0.

    D_n(H)   = (|B^{n+1}| - |A^{n+1}|) / |H^{n+1}|
    δ_3'     = 6Λ / (1 + D_3(H))
    δ_n'     = 3Λn(n-1) / (1 + D_n(H))                      n >= 5
    H^{n+1}' = δ_n' C^{n+1}(H') / 3Λn(n-1)

C is evaluated on the primed entries already produced below n, D on the input
sequence, so one application of M* is a single bottom-up sweep that loses the
top entry (A^{n+1} reads H^{n+3}).  A denominator 1 + D_n <= 0 is a crossing:
at n = 3 it is always singular, above that it is singular up to the judged
n_max and only recorded in the truncation margin.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from config import D0, DIV_THRESHOLD, INCLUDE_J2_ZERO, NU_MAX, PAD_MARGIN, PAD_POLICY, RESIDUAL_FLOOR, TOL_CONVERGE
from errors import SingularityError, UsageError
from logmath import NEG_INF, from_log10, pow10, signed_add, signed_sum, to_log10
from phi4 import terms
from phi4.sequences import DeltaSequence, GreenSequence, NormWeights, build_h0, norm_weights, seq_distance

logger = logging.getLogger(__name__)

PAD_POLICIES = ("envelope", "zero")


# ── Term wrappers ────────────────────────────────────────────
def term_A(h: GreenSequence, n: int) -> tuple[int, float]:
    return terms.a_term(h.signs, h.log_abs, h.lambda_, n)


def term_B(h: GreenSequence, n: int, include_j2_zero: bool = INCLUDE_J2_ZERO) -> tuple[int, float]:
    return terms.b_term(h.signs, h.log_abs, h.lambda_, n, include_j2_zero)


def term_C(h: GreenSequence, n: int) -> tuple[int, float]:
    return terms.c_term(h.signs, h.log_abs, h.lambda_, n)


def equation_residual(h: GreenSequence, n: int, include_j2_zero: bool = INCLUDE_J2_ZERO) -> float:
    """
    |H^{n+1} - RHS| / max(|H^{n+1}|, |RHS|, floor), with RHS = 1 - ΛH⁴ for
    n = 1 and A + B + C otherwise.
    """
    if n == 1:
        s4, l4 = h.entry(3)
        rhs = signed_add((1, 0.0), (-s4, l4 + math.log10(h.lambda_)))
    else:
        parts = [term_A(h, n), term_B(h, n, include_j2_zero), term_C(h, n)]
        rhs = signed_sum([p[0] for p in parts], [p[1] for p in parts])
    lhs = h.entry(n)
    diff = signed_add(lhs, (-rhs[0], rhs[1]))
    if diff[0] == 0:
        return 0.0
    scale = max(lhs[1], rhs[1], math.log10(RESIDUAL_FLOOR))
    return pow10(diff[1] - scale)


# ── The mapping ──────────────────────────────────────────────
class MapEntry(NamedTuple):
    a: tuple[int, float]
    b: tuple[int, float]
    c: tuple[int, float]  # C^{n+1}(H') on the primed sequence
    d: float
    delta: float


@dataclass
class MapDiagnostics:
    delta1: float = 0.0
    entries: dict[int, MapEntry] = field(default_factory=dict)
    crossings: list[int] = field(default_factory=list)  # n with 1 + D_n <= 0 above judge_upto


def pad(h: GreenSequence, n_work: int, policy: str, source: GreenSequence | None = None) -> GreenSequence:
    """Restore the entries above h.n_work lost to the A-term lookup."""
    if n_work <= h.n_work:
        return h
    if policy == "zero":
        return h.extended(GreenSequence.zeros(h.lambda_, n_work))
    if policy == "envelope":
        if source is None or source.n_work < n_work:
            raise UsageError(f"envelope padding to n={n_work} needs a source sequence at least that long")
        return h.extended(source.truncate(n_work))
    raise UsageError(f"unknown pad policy {policy!r}; expected one of {PAD_POLICIES}")


def map_star(
    h: GreenSequence,
    include_j2_zero: bool = INCLUDE_J2_ZERO,
    pad_policy: str | None = None,
    pad_source: GreenSequence | None = None,
    judge_upto: int | None = None,
) -> tuple[GreenSequence, MapDiagnostics]:
    """
    One application of M*.  The primed sequence reaches h.n_work - 2; with a
    pad_policy it is padded back to h.n_work.

    1 + D_n <= 0 raises SingularityError at n = 3 and at every n <= judge_upto
    (default: every computed entry).  Above judge_upto the entry keeps the sign
    of C' / (1 + D_n) and n is appended to diag.crossings.
    """
    lam = h.lambda_
    n_max = h.n_work - 2
    if n_max < 3:
        raise UsageError(f"M* needs n_work >= 5, got {h.n_work}")

    if judge_upto is None:
        judge_upto = n_max
    size = (n_max + 1) // 2
    signs = np.zeros(size, dtype=np.int8)
    log_abs = np.full(size, NEG_INF)
    diag = MapDiagnostics()

    # H²' = 1 + Λδ_1', δ_1' = -H⁴
    delta1 = -h.value(3)
    x = lam * delta1
    if abs(x) < 0.5:
        signs[0], log_abs[0] = 1, math.log1p(x) / math.log(10.0)
    else:
        signs[0], log_abs[0] = to_log10(1.0 + x)
    diag.delta1 = delta1

    for n in range(3, n_max + 1, 2):
        d_n = terms.d_term(h.signs, h.log_abs, lam, n, include_j2_zero)
        if d_n is None:
            raise SingularityError(lam, n, f"|H^{n + 1}| = 0 in D_n")
        if 1.0 + d_n <= 0.0:
            if n == 3 or n <= judge_upto or d_n == -1.0:
                raise SingularityError(lam, n, f"δ_{n}' denominator 1 + D_n = {1.0 + d_n:.3g} crossed zero")
            diag.crossings.append(n)
        c_sign, c_log = terms.c_term(signs, log_abs, lam, n)
        k = (n - 1) // 2
        scale = 6.0 * lam if n == 3 else 3.0 * lam * n * (n - 1)
        delta_n = scale / (1.0 + d_n)
        # H^{n+1}' = δ_n' C' / scale = C' / (1 + D_n)
        signs[k] = c_sign * (1 if 1.0 + d_n > 0.0 else -1)
        log_abs[k] = c_log - math.log10(abs(1.0 + d_n)) if c_sign != 0 else NEG_INF
        diag.entries[n] = MapEntry(
            a=term_A(h, n), b=term_B(h, n, include_j2_zero), c=(c_sign, c_log), d=d_n, delta=delta_n
        )

    primed = GreenSequence(lam, signs, log_abs)
    if pad_policy is not None:
        primed = pad(primed, h.n_work, pad_policy, pad_source)
    return primed, diag


def extract_delta(h: GreenSequence, strict: bool = True) -> DeltaSequence:
    """
    Invert the splitting: δ_1 = (H²-1)/Λ, δ_3 = -H⁴/(H²)³,
    δ_n = 3Λn(n-1) H^{n+1} / C^{n+1}(H).  With strict=False singular entries
    become NaN instead of raising.
    """
    lam = h.lambda_
    out = np.full(h.signs.size, math.nan)

    s2, l2 = h.entry(1)
    out[0] = math.expm1(l2 * math.log(10.0)) / lam if s2 > 0 else (from_log10(s2, l2) - 1.0) / lam

    for n in range(3, h.n_work + 1, 2):
        k = (n - 1) // 2
        s_n, l_n = int(h.signs[k]), float(h.log_abs[k])
        if n == 3:
            if s2 == 0:
                if strict:
                    raise SingularityError(lam, 3, "(H²)³ = 0 in δ_3")
                continue
            out[k] = from_log10(-s_n * s2, l_n - 3.0 * l2)
            continue
        c_sign, c_log = terms.c_term(h.signs, h.log_abs, lam, n)
        if c_sign == 0:
            if strict:
                raise SingularityError(lam, n, f"C^{n + 1} = 0 in δ_n")
            continue
        out[k] = from_log10(s_n * c_sign, l_n - c_log + math.log10(3.0 * lam * n * (n - 1)))
    return DeltaSequence(lam, out)


# ── Iteration ────────────────────────────────────────────────
@dataclass(frozen=True)
class TraceStatus:
    kind: str  # running | converged | diverged | singular
    nu: int | None = None
    n: int | None = None
    reason: str = ""

    def label(self) -> str:
        if self.kind == "running":
            return "running"
        where = f"nu={self.nu}" + (f", n={self.n}" if self.n is not None else "")
        return f"{self.kind}({where})"


class Snapshot(NamedTuple):
    nu: int
    delta: DeltaSequence
    h: GreenSequence


@dataclass
class IterationTrace:
    lambda_: float
    start_label: str
    snapshots: list[Snapshot] = field(default_factory=list)
    status: TraceStatus = field(default_factory=lambda: TraceStatus("running"))

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]


def relative_delta_change(prev: DeltaSequence, cur: DeltaSequence, upto: int | None = None) -> float:
    """sup_n |δ_n^(ν) - δ_n^(ν-1)| / |δ_n^(ν)| over the first `upto` entries."""
    a = prev.values[:upto]
    b = cur.values[:upto]
    if np.any(np.isnan(a)) or np.any(np.isnan(b)):
        return math.inf
    scale = np.maximum(np.abs(b), np.finfo(float).tiny)
    with np.errstate(invalid="ignore"):
        change = np.abs(b - a) / scale
    if not np.all(np.isfinite(change)):
        return math.inf
    return float(np.max(change))


def _divergence(h: GreenSequence, delta: DeltaSequence, weights: NormWeights, div_threshold: float, upto: int):
    """(n, reason) of the first entry that left the admissible region, else None."""
    log_threshold = math.log10(div_threshold)
    for k in range(upto):
        n = 2 * k + 1
        s, la = int(h.signs[k]), float(h.log_abs[k])
        if s != 0 and not math.isfinite(la):
            return n, "non-finite entry"
        if s != 0 and la - weights.log_m[k] > log_threshold:
            return n, "exceeds div_threshold * M_n"
        if not math.isfinite(delta.values[k]):
            return n, "non-finite δ"
    return None


def iterate(
    start: GreenSequence,
    nu_max: int = NU_MAX,
    tol_converge: float = TOL_CONVERGE,
    div_threshold: float = DIV_THRESHOLD,
    pad_policy: str = PAD_POLICY,
    include_j2_zero: bool = INCLUDE_J2_ZERO,
    start_label: str = "custom",
    pad_source: GreenSequence | None = None,
    d0: float = D0,
    n_max: int | None = None,
) -> IterationTrace:
    """
    Apply M* up to nu_max times.  Padding keeps every iterate on the start's
    grid; with the envelope policy the top entry comes from pad_source, which
    defaults to the start itself (the envelope of the max, min and h0 starts).

    Convergence, divergence and denominator crossings are judged on n <= n_max
    only; the entries above it (n_max defaults to start.n_work - 2 * PAD_MARGIN)
    are carried so that truncation stays out of the judged range.
    """
    if pad_policy not in PAD_POLICIES:
        raise UsageError(f"unknown pad policy {pad_policy!r}; expected one of {PAD_POLICIES}")
    if n_max is None:
        n_max = start.n_work - 2 * PAD_MARGIN
    if n_max < 3 or n_max % 2 == 0 or n_max > start.n_work - 2:
        raise UsageError(f"n_max must be odd within 3..{start.n_work - 2} for n_work={start.n_work}, got {n_max}")
    if pad_source is None:
        pad_source = start
    weights = norm_weights(start.lambda_, start.n_work, d0)
    upto = (n_max + 1) // 2

    trace = IterationTrace(start.lambda_, start_label)
    trace.snapshots.append(Snapshot(0, extract_delta(start, strict=False), start))
    h = start
    for nu in range(1, nu_max + 1):
        try:
            h, diag = map_star(h, include_j2_zero, pad_policy, pad_source, judge_upto=n_max)
        except SingularityError as e:
            trace.status = TraceStatus("singular", nu, e.n, e.where)
            break
        if diag.crossings:
            logger.debug("Λ=%g start=%s ν=%d: margin crossings at n=%s", start.lambda_, start_label, nu, diag.crossings)
        delta = extract_delta(h, strict=False)
        trace.snapshots.append(Snapshot(nu, delta, h))

        bad = _divergence(h, delta, weights, div_threshold, upto)
        if bad is not None:
            trace.status = TraceStatus("diverged", nu, bad[0], bad[1])
            break
        change = relative_delta_change(trace.snapshots[-2].delta, delta, upto)
        logger.debug("Λ=%g start=%s ν=%d: sup relative δ change %.3e", start.lambda_, start_label, nu, change)
        if change <= tol_converge:
            trace.status = TraceStatus("converged", nu)
            break

    logger.info("Λ=%g start=%s: %s after %d iterations", start.lambda_, start_label, trace.status.label(), len(trace.snapshots) - 1)
    return trace


def trace_delta_table(trace: IterationTrace, n_list: list[int]) -> np.ndarray:
    """δ_n^(ν) as a (ν, n) array."""
    cols = [(n - 1) // 2 for n in n_list]
    return np.array([[snap.delta.values[k] for k in cols] for snap in trace.snapshots])


# ── Contraction estimate ─────────────────────────────────────
@dataclass(frozen=True)
class ContractionStats:
    lambda_: float
    max_q: float
    mean_q: float
    pairs: int
    resampled: int
    qs: tuple[float, ...]


def pair_ratio(
    h_a: GreenSequence, h_b: GreenSequence, weights: NormWeights, include_j2_zero: bool = INCLUDE_J2_ZERO
) -> float | None:
    """d(M*H_a, M*H_b) / d(H_a, H_b) on the output grid; None for a degenerate pair."""
    n_max = h_a.n_work - 2
    d_in = seq_distance(h_a.truncate(n_max), h_b.truncate(n_max), weights)
    if d_in == 0.0:
        return None
    try:
        out_a, _ = map_star(h_a, include_j2_zero, judge_upto=n_max)
        out_b, _ = map_star(h_b, include_j2_zero, judge_upto=n_max)
    except SingularityError as e:
        logger.warning("singular M* inside the sampling ball at n=%d: %s", e.n, e)
        return math.inf
    return seq_distance(out_a, out_b, weights) / d_in


def contraction_estimate(
    lambda_: float,
    n_max: int,
    rho: float,
    num_pairs: int,
    seed: int,
    include_j2_zero: bool = INCLUDE_J2_ZERO,
    d0: float = D0,
) -> ContractionStats:
    """
    Sample pairs in the norm ball S_ρ(H_0) and return the largest and mean
    Lipschitz ratio of M* over them.  Deterministic for a given seed.
    """
    if rho <= 0.0:
        raise UsageError(f"rho must be positive, got {rho}")
    if num_pairs < 1:
        raise UsageError(f"num_pairs must be >= 1, got {num_pairs}")
    n_work = n_max + 2
    h0 = build_h0(lambda_, n_work, d0, include_j2_zero)
    weights = norm_weights(lambda_, n_max, d0)
    weights_work = norm_weights(lambda_, n_work, d0)
    rng = np.random.default_rng(seed)

    def draw() -> GreenSequence:
        eps = rng.uniform(-rho, rho, size=h0.signs.size)
        h = h0.perturbed(eps)
        radius = seq_distance(h, h0, weights_work)
        if radius > rho:
            h = h0.perturbed(eps * (rho / radius))
        return h

    qs: list[float] = []
    resampled = 0
    while len(qs) < num_pairs:
        q = pair_ratio(draw(), draw(), weights, include_j2_zero)
        if q is None:
            resampled += 1
            logger.warning("degenerate pair resampled (%d so far)", resampled)
            if resampled > 100 * num_pairs:
                raise UsageError("could not draw distinct pairs; increase rho")
            continue
        qs.append(q)

    stats = ContractionStats(lambda_, max(qs), float(np.mean(qs)), len(qs), resampled, tuple(qs))
    logger.info("contraction estimate Λ=%g: max q=%.4g mean q=%.4g over %d pairs", lambda_, stats.max_q, stats.mean_q, stats.pairs)
    return stats
