"""
Command-line entry point for the zero-dimensional Φ⁴ fixed-point toolkit.

Run:  python app.py sweep --lambdas 0.001,0.01 --n-max 25 --iters 20
      python app.py verify --quick
"""

import argparse
import logging
import sys
from pathlib import Path

from config import (
    CSV_NAME,
    D0,
    DIV_THRESHOLD,
    EXPECTED_STABLE_MAX,
    GOLDEN_CHECKSUM,
    K0,
    N_MAX,
    NU_MAX,
    NUM_PAIRS,
    OUT_DIR,
    PAD_MARGIN,
    PAD_POLICY,
    RHO,
    SEED,
    TOL_CONVERGE,
)
from errors import Phi4Error, UsageError
from experiment.emit import csv_checksum
from experiment.schemas import SweepConfig
from experiment.series import perturbative_series
from experiment.sweep import run_sweep, unexpected_divergences
from experiment.verify import VerifyOptions, format_results, run_acceptance
from phi4.dynamics import contraction_estimate, iterate, trace_delta_table
from phi4.membership import check_phi
from phi4.sequences import build_start, envelope_table

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad input; here 2 means unexpected divergence."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ── Flag parsing helpers ─────────────────────────────────────
def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--d0", type=float, default=D0, help="denominator constant of δ_max")
    common.add_argument("--k0", type=float, default=K0, help="constant of the n! K0^n bound")
    common.add_argument("--j2-zero", action="store_true", help="admit (j1, j2) = (n, 0) in the B-term pair set")
    common.add_argument("--pad-policy", choices=["envelope", "zero"], default=PAD_POLICY)
    common.add_argument("--tol", type=float, default=TOL_CONVERGE, help="convergence tolerance on δ")
    common.add_argument("--div-threshold", type=float, default=DIV_THRESHOLD)
    common.add_argument("--seed", type=int, default=SEED)
    common.add_argument("--strict", action="store_true", help="exit 2 on divergence where convergence is expected")
    common.add_argument("--verbose", action="store_true")

    parser = _Parser(prog="phi4", description="Fixed-point iteration for the zero-dimensional Φ⁴ Green functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("iterate", parents=[common], help="run M* at one coupling and print the trace")
    p.add_argument("--lambda", dest="lambda_", type=float, required=True)
    p.add_argument("--n-max", type=int, default=N_MAX)
    p.add_argument("--iters", type=int, default=NU_MAX)
    p.add_argument("--start", choices=["max", "min", "h0"], default="max")

    p = sub.add_parser("sweep", parents=[common], help="run the (Λ, start) grid and write CSV/SVG")
    p.add_argument("--lambdas", type=_float_list)
    p.add_argument("--n-max", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--start", type=_str_list)
    p.add_argument("--out", default=OUT_DIR)
    p.add_argument("--format", type=_str_list)
    p.add_argument("--set", type=_int_list, default=[1, 2, 3], help="figure sets to render")
    p.add_argument("--update-golden", action="store_true", help=f"store the CSV checksum in {GOLDEN_CHECKSUM}")
    p.add_argument("--pairs", type=int, help="seeded contraction pairs per Λ (default: none)")

    p = sub.add_parser("envelopes", parents=[common], help="dump δ_max, δ_min and M_n")
    p.add_argument("--lambda", dest="lambda_", type=float, required=True)
    p.add_argument("--n-max", type=int, default=N_MAX)

    p = sub.add_parser("check-phi", parents=[common], help="Φ / Φ_0 membership of a start or its iterate")
    p.add_argument("--lambda", dest="lambda_", type=float, required=True)
    p.add_argument("--n-max", type=int, default=N_MAX)
    p.add_argument("--start", choices=["max", "min", "h0"], default="h0")
    p.add_argument("--iters", type=int, default=0, help="apply M* this many times before checking")

    p = sub.add_parser("contraction", parents=[common], help="estimate the Lipschitz constant of M* around H_0")
    p.add_argument("--lambdas", type=_float_list, required=True)
    p.add_argument("--n-max", type=int, default=N_MAX)
    p.add_argument("--rho", type=float, default=RHO)
    p.add_argument("--pairs", type=int, default=NUM_PAIRS)

    p = sub.add_parser("series-oracle", parents=[common], help="dump the perturbative series table")
    p.add_argument("--n-max", type=int, default=9)
    p.add_argument("--order", type=int, default=6)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out", default=None)
    return parser


# ── Subcommands ──────────────────────────────────────────────
def cmd_iterate(args) -> int:
    n_work = args.n_max + 2 * PAD_MARGIN
    start = build_start(args.start, args.lambda_, n_work, args.d0, args.j2_zero)
    trace = iterate(
        start,
        nu_max=args.iters,
        tol_converge=args.tol,
        div_threshold=args.div_threshold,
        pad_policy=args.pad_policy,
        include_j2_zero=args.j2_zero,
        start_label=args.start,
        d0=args.d0,
        n_max=args.n_max,
    )
    n_list = [n for n in (3, 5, 7, 9, 15, 25) if n <= args.n_max]
    table = trace_delta_table(trace, n_list)
    print("nu  " + "  ".join(f"{'δ_' + str(n):>14}" for n in n_list))
    for snap, row in zip(trace.snapshots, table):
        print(f"{snap.nu:<3} " + "  ".join(f"{v:>14.8g}" for v in row))
    print(f"status: {trace.status.label()} {trace.status.reason}".rstrip())
    if args.strict and trace.status.kind in ("diverged", "singular") and args.lambda_ <= EXPECTED_STABLE_MAX:
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = SweepConfig.build(
        lambda_list=args.lambdas,
        n_max=args.n_max,
        nu_max=args.iters,
        starts=args.start,
        d0=args.d0,
        k0=args.k0,
        include_j2_zero=args.j2_zero,
        pad_policy=args.pad_policy,
        tol_converge=args.tol,
        div_threshold=args.div_threshold,
        out_dir=args.out,
        formats=args.format,
        contraction_pairs=args.pairs,
        seed=args.seed,
    )
    rows = run_sweep(config, figure_sets=tuple(args.set))
    print(f"{len(rows)} rows")
    if args.update_golden:
        if "csv" not in config.formats:
            raise UsageError("--update-golden needs the csv format")
        golden = Path(GOLDEN_CHECKSUM)
        golden.parent.mkdir(parents=True, exist_ok=True)
        golden.write_text(f"{csv_checksum(Path(config.out_dir) / CSV_NAME)}  {CSV_NAME}\n")
        logger.info("golden checksum updated: %s", golden)
    bad = unexpected_divergences(rows)
    for lam, start in bad:
        print(f"unexpected divergence: Λ={lam:g} start={start}")
    return EXIT_DIVERGED if args.strict and bad else EXIT_OK


def cmd_envelopes(args) -> int:
    print(f"{'n':>5} {'δ_max':>22} {'δ_min':>22} {'log10 M_n':>22}")
    for row in envelope_table(args.lambda_, args.n_max, args.d0):
        print(f"{row['n']:>5} {row['delta_max']:>22.15g} {row['delta_min']:>22.15g} {row['log10_m']:>22.15g}")
    return EXIT_OK


def cmd_check_phi(args) -> int:
    h = build_start(args.start, args.lambda_, args.n_max + 2 * PAD_MARGIN, args.d0, args.j2_zero)
    if args.iters:
        h = iterate(
            h, nu_max=args.iters, tol_converge=args.tol, div_threshold=args.div_threshold,
            pad_policy=args.pad_policy, include_j2_zero=args.j2_zero, start_label=args.start, d0=args.d0,
            n_max=args.n_max,
        ).final.h
    report = check_phi(h.truncate(args.n_max), args.k0, args.d0)
    print(f"Λ={args.lambda_:g} start={args.start} ν={args.iters}: Φ={report.phi_member} Φ_0={report.phi0_member}")
    for n, flag in report.failures():
        print(f"  n={n}: {flag} failed")
    return EXIT_OK


def cmd_contraction(args) -> int:
    print(f"{'Λ':>8} {'max q':>12} {'mean q':>12}")
    for lam in args.lambdas:
        stats = contraction_estimate(lam, args.n_max, args.rho, args.pairs, args.seed, args.j2_zero, args.d0)
        print(f"{lam:>8g} {stats.max_q:>12.6g} {stats.mean_q:>12.6g}")
    return EXIT_OK


def cmd_series_oracle(args) -> int:
    table = perturbative_series(args.n_max, args.order, args.j2_zero)
    print(f"# H^(n+1) = sum_k c[n,k] Λ^k  ({'exact' if table.exact else 'mpmath'})")
    for n, k, text in table.rows():
        print(f"c[{n},{k}] = {text}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_acceptance(VerifyOptions(quick=args.quick, out_dir=args.out, seed=args.seed))
    print(format_results(results))
    failed = [r for r in results if r.passed is False]
    return EXIT_DIVERGED if args.strict and failed else EXIT_OK


COMMANDS = {
    "iterate": cmd_iterate,
    "sweep": cmd_sweep,
    "envelopes": cmd_envelopes,
    "check-phi": cmd_check_phi,
    "contraction": cmd_contraction,
    "series-oracle": cmd_series_oracle,
    "verify": cmd_verify,
}


def cli_main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        return COMMANDS[args.command](args)
    except Phi4Error as e:
        # DomainError from a bad --lambda / --n-max is a usage problem too
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error("I/O failure on %s: %s", e.filename, e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(cli_main())
