"""
Sweep orchestration over (Λ, start) cells.

Each cell builds its start sequence, runs the iteration and is flattened into
one SweepRow per (ν, n).  Cells run on a thread pool; files are written only
after every cell has finished.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from config import CSV_NAME, EXPECTED_STABLE_MAX, FIGURE_SET_LAMBDAS, RHO
from errors import SingularityError
from experiment.emit import emit_csv, emit_svg
from experiment.schemas import SweepConfig, SweepRow
from phi4.dynamics import ContractionStats, IterationTrace, TraceStatus, contraction_estimate, iterate
from phi4.membership import PhiReport, check_phi
from phi4.sequences import build_start

logger = logging.getLogger(__name__)


def run_cell(config: SweepConfig, lambda_: float, start: str) -> IterationTrace:
    try:
        h = build_start(start, lambda_, config.n_work, config.d0, config.include_j2_zero)
    except SingularityError as e:
        logger.warning("Λ=%g start=%s: start sequence is singular (%s)", lambda_, start, e)
        trace = IterationTrace(lambda_, start)
        trace.status = TraceStatus("singular", 0, e.n, e.where)
        return trace
    return iterate(
        h,
        nu_max=config.nu_max,
        tol_converge=config.tol_converge,
        div_threshold=config.div_threshold,
        pad_policy=config.pad_policy,
        include_j2_zero=config.include_j2_zero,
        start_label=start,
        d0=config.d0,
        n_max=config.n_max,
    )


def trace_rows(trace: IterationTrace, n_list: list[int]) -> list[SweepRow]:
    """Flatten a trace; every row is "ok" except those of the last ν, which carry the final status."""
    rows = []
    last = len(trace.snapshots) - 1
    final_status = trace.status.kind if trace.status.kind != "running" else "ok"
    for i, snap in enumerate(trace.snapshots):
        status = final_status if i == last else "ok"
        for n in n_list:
            s, la = snap.h.entry(n)
            rows.append(
                SweepRow(
                    lambda_=trace.lambda_,
                    n=n,
                    nu=snap.nu,
                    start=trace.start_label,
                    delta=snap.delta.at(n),
                    h_sign=s,
                    h_log10_abs=la,
                    status=status,
                )
            )
    return rows


def run_cells(config: SweepConfig, lambdas: list[float]) -> list[IterationTrace]:
    cells = [(lam, start) for lam in lambdas for start in config.starts]
    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        futures = [pool.submit(run_cell, config, lam, start) for lam, start in cells]
        return [f.result() for f in futures]


def membership_summary(config: SweepConfig, traces: list[IterationTrace]) -> dict[tuple[float, str], PhiReport]:
    """Φ / Φ_0 report of every cell's last iterate on n <= n_max, with the configured K0."""
    reports = {}
    for trace in traces:
        if not trace.snapshots:
            continue
        report = check_phi(trace.final.h.truncate(config.n_max), config.k0, config.d0)
        reports[(trace.lambda_, trace.start_label)] = report
        if not report.phi0_member:
            n, flag = report.failures()[0]
            logger.warning("Λ=%g start=%s: last iterate outside Φ_0 (n=%d %s)", trace.lambda_, trace.start_label, n, flag)
    return reports


def contraction_summary(config: SweepConfig, rho: float = RHO) -> dict[float, ContractionStats]:
    """Seeded contraction estimate around H_0 for every Λ of the config; empty when contraction_pairs is 0."""
    if not config.contraction_pairs:
        return {}
    return {
        lam: contraction_estimate(
            lam, config.n_max, rho, config.contraction_pairs, config.seed, config.include_j2_zero, config.d0
        )
        for lam in config.lambda_list
    }


def unexpected_divergences(rows: list[SweepRow], stable_max: float = EXPECTED_STABLE_MAX) -> list[tuple[float, str]]:
    """(Λ, start) cells that diverged or went singular at a coupling expected to converge."""
    bad = {(r.lambda_, r.start) for r in rows if r.status in ("diverged", "singular") and r.lambda_ <= stable_max}
    return sorted(bad)


def run_sweep(config: SweepConfig, figure_sets: tuple[int, ...] = (1, 2, 3)) -> list[SweepRow]:
    """
    Run every (Λ, start) cell of the config and write the requested files.

    The CSV covers config.lambda_list only.  When SVGs are requested, the
    figure-set couplings missing from lambda_list are run as extra cells whose
    rows feed the figures and nothing else.
    """
    t0 = time.perf_counter()
    logger.info(
        "sweep started ✅ Λ=%s n_max=%d nu_max=%d starts=%s",
        config.lambda_list, config.n_max, config.nu_max, ",".join(config.starts),
    )
    traces = run_cells(config, config.lambda_list)
    membership_summary(config, traces)
    contraction_summary(config)
    rows = sorted((r for t in traces for r in trace_rows(t, config.n_list)), key=SweepRow.sort_key)

    if not config.formats:
        logger.info("sweep finished in %.2fs, %d rows, no files requested", time.perf_counter() - t0, len(rows))
        return rows

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if "csv" in config.formats:
        emit_csv(rows, out / CSV_NAME)

    if "svg" in config.formats:
        wanted = sorted({lam for s in figure_sets for lam in FIGURE_SET_LAMBDAS[s]})
        extra = [lam for lam in wanted if lam not in config.lambda_list]
        figure_rows = list(rows)
        if extra:
            logger.info("running %d figure-only couplings: %s", len(extra), extra)
            figure_rows += [r for t in run_cells(config, extra) for r in trace_rows(t, config.n_list)]
            figure_rows.sort(key=SweepRow.sort_key)
        fig_dir = out / "figures"
        fig_dir.mkdir(exist_ok=True)
        for set_id in figure_sets:
            emit_svg(figure_rows, set_id, str(fig_dir / "set"))

    logger.info("sweep finished in %.2fs, %d rows", time.perf_counter() - t0, len(rows))
    return rows
