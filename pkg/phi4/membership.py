"""
Φ / Φ_0 membership checks and the stability certificates built on them.

A sequence is in Φ when its signs alternate, its splitting factors are
positive and inside the [δ_min, δ_max] band, and it obeys |H^{n+1}| <= n! K0^n;
it is in Φ_0 when it additionally lies between H_min and H_max.
"""

import logging
import math

from pydantic import BaseModel
from scipy.special import gammaln

from config import (
    BAND_SLACK,
    D0,
    DIV_THRESHOLD,
    INCLUDE_J2_ZERO,
    K0,
    LAMBDA_SMALL,
    PAD_MARGIN,
    PAD_POLICY,
    TOL_CONVERGE,
)
from phi4.dynamics import extract_delta, iterate
from phi4.sequences import GreenSequence, build_h0, build_h_max, build_h_min, build_start, delta_max, delta_min

logger = logging.getLogger(__name__)

_LOG_SLACK = 1e-12


class PhiReport(BaseModel):
    lambda_: float
    k0: float
    n: list[int]
    delta: list[float]
    sign_ok: list[bool]
    delta_positive: list[bool]
    band_ok: list[bool]
    bracket_ok: list[bool]
    bound_ok: list[bool]
    phi_member: bool
    phi0_member: bool

    def failures(self) -> list[tuple[int, str]]:
        out = []
        for i, n in enumerate(self.n):
            for flag in ("sign_ok", "delta_positive", "band_ok", "bracket_ok", "bound_ok"):
                if not getattr(self, flag)[i]:
                    out.append((n, flag))
        return out


def _envelopes(lambda_: float, n_work: int, d0: float) -> tuple[GreenSequence, GreenSequence]:
    top = max(n_work, 5)
    return build_h_min(lambda_, top).truncate(n_work), build_h_max(lambda_, top, d0).truncate(n_work)


def check_phi(
    h: GreenSequence,
    k0: float = K0,
    d0: float = D0,
    h_min: GreenSequence | None = None,
    h_max: GreenSequence | None = None,
) -> PhiReport:
    """Evaluate every Φ / Φ_0 flag on h's grid; singular extractions count as failures."""
    lam = h.lambda_
    if h_min is None or h_max is None:
        h_min, h_max = _envelopes(lam, h.n_work, d0)
    else:
        h_min, h_max = h_min.truncate(h.n_work), h_max.truncate(h.n_work)
    delta = extract_delta(h, strict=False)

    report = {key: [] for key in ("n", "delta", "sign_ok", "delta_positive", "band_ok", "bracket_ok", "bound_ok")}
    for n in range(1, h.n_work + 1, 2):
        k = (n - 1) // 2
        s, la = h.entry(n)
        d = float(delta.values[k])
        finite = math.isfinite(d)

        expected_sign = 1 if n == 1 else (-1) ** ((n - 1) // 2)
        if n == 1:
            positive, band = finite, finite
        else:
            positive = finite and d > 0.0
            low = delta_min(n, lam)
            high = delta_max(n, lam, d0)
            band = finite and low - BAND_SLACK <= d <= high + BAND_SLACK
        bracket = s != 0 and h_min.log10_abs(n) - _LOG_SLACK <= la <= h_max.log10_abs(n) + _LOG_SLACK
        bound_log = float(gammaln(n + 1)) / math.log(10.0) + n * math.log10(k0)
        bound = s == 0 or la <= bound_log

        report["n"].append(n)
        report["delta"].append(d)
        report["sign_ok"].append(s == expected_sign)
        report["delta_positive"].append(positive)
        report["band_ok"].append(band)
        report["bracket_ok"].append(bool(bracket))
        report["bound_ok"].append(bool(bound))

    phi = all(
        a and b and c and e
        for a, b, c, e in zip(report["sign_ok"], report["delta_positive"], report["band_ok"], report["bound_ok"])
    )
    result = PhiReport(
        lambda_=lam, k0=k0, phi_member=phi, phi0_member=phi and all(report["bracket_ok"]), **report
    )
    if not result.phi0_member:
        logger.debug("Λ=%g: Φ_0 failures %s", lam, result.failures()[:5])
    return result


# ── Stability table ──────────────────────────────────────────
class StabilityRow(BaseModel):
    lambda_: float
    statuses: dict[str, str]
    iterates_checked: int
    first_failure: str | None = None
    stable: bool


class StabilityTable(BaseModel):
    n_max: int
    nu_max: int
    rows: list[StabilityRow]
    largest_stable_lambda: float | None


def check_stability(
    lambda_grid: list[float],
    n_max: int,
    nu_max: int,
    starts: tuple[str, ...] = ("max", "min", "h0"),
    k0: float = K0,
    d0: float = D0,
    include_j2_zero: bool = INCLUDE_J2_ZERO,
    pad_policy: str = PAD_POLICY,
    pad_margin: int = PAD_MARGIN,
    tol_converge: float = TOL_CONVERGE,
    div_threshold: float = DIV_THRESHOLD,
) -> StabilityTable:
    """
    For each Λ, iterate from every start and require every iterate, restricted
    to n <= n_max, to stay in Φ_0.  Failures are data, never exceptions.
    """
    n_work = n_max + 2 * pad_margin
    rows = []
    for lam in lambda_grid:
        h_min, h_max = _envelopes(lam, n_max, d0)
        statuses: dict[str, str] = {}
        checked = 0
        first_failure = None
        for label in starts:
            try:
                start = build_start(label, lam, n_work, d0, include_j2_zero)
            except ArithmeticError as e:
                statuses[label] = f"singular start: {e}"
                first_failure = first_failure or f"{label}: {e}"
                continue
            trace = iterate(
                start,
                nu_max=nu_max,
                tol_converge=tol_converge,
                div_threshold=div_threshold,
                pad_policy=pad_policy,
                include_j2_zero=include_j2_zero,
                start_label=label,
                d0=d0,
                n_max=n_max,
            )
            statuses[label] = trace.status.label()
            if trace.status.kind in ("diverged", "singular") and first_failure is None:
                first_failure = f"{label}: {trace.status.label()} {trace.status.reason}"
            for snap in trace.snapshots:
                checked += 1
                report = check_phi(snap.h.truncate(n_max), k0, d0, h_min, h_max)
                if not report.phi0_member and first_failure is None:
                    n_bad, flag = report.failures()[0]
                    first_failure = f"{label}: ν={snap.nu} n={n_bad} {flag}"
        stable = first_failure is None
        if not stable:
            logger.warning("Λ=%g unstable: %s", lam, first_failure)
        rows.append(
            StabilityRow(lambda_=lam, statuses=statuses, iterates_checked=checked, first_failure=first_failure, stable=stable)
        )

    stable_lambdas = [r.lambda_ for r in rows if r.stable]
    table = StabilityTable(
        n_max=n_max, nu_max=nu_max, rows=rows, largest_stable_lambda=max(stable_lambdas) if stable_lambdas else None
    )
    logger.info("largest stable Λ on the grid: %s", table.largest_stable_lambda)
    return table


# ── Small-Λ limits ───────────────────────────────────────────
class LimitRow(BaseModel):
    n: int
    measured: float  # δ_n/Λ, or δ_1 itself for n = 1
    target: float
    deviation: float  # relative for n >= 3, absolute for n = 1


def check_small_lambda_limits(
    n_list: list[int],
    lambda_small: float = LAMBDA_SMALL,
    run_iteration: bool = True,
    nu_max: int = 40,
    d0: float = D0,
    include_j2_zero: bool = INCLUDE_J2_ZERO,
    pad_margin: int = PAD_MARGIN,
) -> list[LimitRow]:
    """Compare δ_n/Λ at a small coupling with its Λ -> 0 limit, 6 for n = 3 and 3n(n-1) beyond."""
    n_top = max(max(n_list), 7)
    n_top += 1 - n_top % 2
    h = build_h0(lambda_small, n_top + 2 * pad_margin, d0, include_j2_zero)
    if run_iteration:
        trace = iterate(h, nu_max=nu_max, include_j2_zero=include_j2_zero, start_label="h0", d0=d0, n_max=n_top)
        h = trace.final.h
    delta = extract_delta(h, strict=False)

    rows = []
    for n in sorted(n_list):
        d = delta.at(n)
        if n == 1:
            rows.append(LimitRow(n=1, measured=d, target=0.0, deviation=abs(d)))
            continue
        target = 6.0 if n == 3 else 3.0 * n * (n - 1)
        measured = d / lambda_small
        rows.append(LimitRow(n=n, measured=measured, target=target, deviation=abs(measured - target) / target))
    return rows
