"""
CSV and SVG emitters for sweep rows.

Both outputs are byte-stable for identical rows: reals are written with 17
significant digits, and the SVG writer gets a fixed hash salt and no date.
"""

import csv
import hashlib
import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from config import FIGURE_NU_WINDOW, FIGURE_SET_LAMBDAS, SVG_HASHSALT  # noqa: E402
from errors import UsageError  # noqa: E402
from experiment.schemas import SweepRow  # noqa: E402

logger = logging.getLogger(__name__)

CSV_HEADER = ["lambda", "n", "nu", "start", "delta", "h_sign", "h_log10_abs", "status"]
START_STYLES = {"max": "-", "min": "--", "h0": ":"}
SET3_LOWER = 0.001


def _real(x: float) -> str:
    return format(x, ".17g")


# ── CSV ──────────────────────────────────────────────────────
def emit_csv(rows: list[SweepRow], path) -> Path:
    path = Path(path)
    ordered = sorted(rows, key=SweepRow.sort_key)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in ordered:
            writer.writerow(
                [_real(r.lambda_), r.n, r.nu, r.start, _real(r.delta), r.h_sign, _real(r.h_log10_abs), r.status]
            )
    logger.info("wrote %d rows to %s", len(ordered), path)
    return path


def csv_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ── SVG ──────────────────────────────────────────────────────
def _normalised(r: SweepRow) -> float:
    """δ_n / 3Λn(n-1), which tends to 1 as Λ -> 0 for every n >= 5 (6Λ for n = 3)."""
    scale = 6.0 * r.lambda_ if r.n == 3 else 3.0 * r.lambda_ * r.n * (r.n - 1)
    value = r.delta / scale
    return value if math.isfinite(value) else math.nan


def _select(rows: list[SweepRow], lambda_: float) -> list[SweepRow]:
    return [r for r in rows if math.isclose(r.lambda_, lambda_, rel_tol=1e-12) and r.nu <= FIGURE_NU_WINDOW]


def _series(rows: list[SweepRow]) -> dict[tuple[int, str], tuple[list[int], list[float]]]:
    out: dict[tuple[int, str], tuple[list[int], list[float]]] = {}
    for r in sorted(rows, key=SweepRow.sort_key):
        nus, ys = out.setdefault((r.n, r.start), ([], []))
        nus.append(r.nu)
        ys.append(_normalised(r))
    return out


def _save(fig, path: Path) -> Path:
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASHSALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def _plot_lambda(rows: list[SweepRow], lambda_: float, path: Path) -> Path:
    series = _series(rows)
    ns = sorted({n for n, _ in series})
    cmap = plt.get_cmap("viridis")
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for i, n in enumerate(ns):
        color = cmap(i / max(len(ns) - 1, 1))
        labelled = False
        for start, style in START_STYLES.items():
            if (n, start) not in series:
                continue
            nus, ys = series[(n, start)]
            ax.plot(nus, ys, style, color=color, marker=".", label=None if labelled else f"n={n}")
            labelled = True
    ax.set_xlabel("iteration ν")
    ax.set_ylabel("δ_n / 3Λn(n-1)")
    ax.set_title(f"Λ = {lambda_:g}  (solid: max start, dashed: min start)")
    ax.legend(fontsize="small", ncol=2)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def _plot_family(rows: list[SweepRow], lambdas: list[float], upper: float, path: Path) -> Path:
    cmap = plt.get_cmap("plasma")
    fig, ax = plt.subplots(figsize=(7.0, 4.8))
    for i, lam in enumerate(lambdas):
        color = cmap(i / max(len(lambdas), 1))
        series = _series(_select(rows, lam))
        first = True
        for (n, start), (nus, ys) in sorted(series.items()):
            ax.plot(nus, ys, START_STYLES.get(start, "-"), color=color, lw=0.8, label=f"Λ={lam:g}" if first else None)
            first = False
    ax.set_xlabel("iteration ν")
    ax.set_ylabel("δ_n / 3Λn(n-1)")
    ax.set_title(f"summary up to ν = {FIGURE_NU_WINDOW}, Λ in [{SET3_LOWER:g}, {upper:g}]")
    ax.legend(fontsize="small")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def emit_svg(rows: list[SweepRow], set_id: int, path_prefix: str) -> list[Path]:
    """
    One SVG per (set, Λ) for sets 1 and 2, one per Λ range for set 3.
    Couplings with no rows are skipped with a warning.
    """
    if set_id not in FIGURE_SET_LAMBDAS:
        raise UsageError(f"unknown figure set {set_id}; expected one of {sorted(FIGURE_SET_LAMBDAS)}")
    written: list[Path] = []
    if set_id in (1, 2):
        for lam in FIGURE_SET_LAMBDAS[set_id]:
            selected = _select(rows, lam)
            if not selected:
                logger.warning("figure set %d: no rows for Λ=%g, skipped", set_id, lam)
                continue
            written.append(_plot_lambda(selected, lam, Path(f"{path_prefix}{set_id}_lambda_{lam:g}.svg")))
    else:
        available = sorted({r.lambda_ for r in rows})
        for upper in FIGURE_SET_LAMBDAS[3]:
            lambdas = [lam for lam in available if SET3_LOWER - 1e-15 <= lam <= upper + 1e-15]
            if not lambdas:
                logger.warning("figure set 3: no rows with Λ in [%g, %g], skipped", SET3_LOWER, upper)
                continue
            written.append(_plot_family(rows, lambdas, upper, Path(f"{path_prefix}3_upto_{upper:g}.svg")))
    if not written:
        logger.warning("figure set %d: nothing to draw", set_id)
    return written
