#!/usr/bin/env python3
"""
End-to-end driver: runs the default sweep, renders the three figure sets and
prints the stability and contraction summaries next to them.

This script:
1. Runs every (Λ, start) cell of the default grid and writes out/sweep.csv
2. Renders figure sets 1-3 into out/figures/
3. Scans Φ_0 stability and the contraction constant over the same couplings
"""

import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from config import LAMBDA_GRID, N_MAX, NUM_PAIRS, RHO, SEED  # noqa: E402
from experiment.schemas import SweepConfig  # noqa: E402
from experiment.sweep import run_sweep, unexpected_divergences  # noqa: E402
from phi4.dynamics import contraction_estimate  # noqa: E402
from phi4.membership import check_stability  # noqa: E402

# Color codes for terminal output
GREEN = "\033[92m"
BLUE = "\033[94m"
YELLOW = "\033[93m"
RED = "\033[91m"
RESET = "\033[0m"


def banner(title: str):
    print(f"\n{BLUE}{'=' * 70}\n{title}\n{'=' * 70}{RESET}")


def main(out_dir: str = "out"):
    banner("SWEEP + FIGURES")
    t0 = time.time()
    rows = run_sweep(SweepConfig(out_dir=out_dir))
    print(f"{len(rows)} rows in {time.time() - t0:.1f}s -> {out_dir}/")
    for lam, start in unexpected_divergences(rows):
        print(f"{RED}unexpected divergence at Λ={lam:g} ({start} start){RESET}")

    banner("Φ_0 STABILITY")
    table = check_stability(LAMBDA_GRID + [0.15], N_MAX, nu_max=20)
    for row in table.rows:
        color = GREEN if row.stable else YELLOW
        print(f"{color}Λ={row.lambda_:<7g} {'stable' if row.stable else row.first_failure}{RESET}")
    print(f"largest stable Λ: {table.largest_stable_lambda}")

    banner("CONTRACTION ESTIMATE")
    for lam in LAMBDA_GRID + [0.15]:
        stats = contraction_estimate(lam, N_MAX, RHO, NUM_PAIRS, SEED)
        color = GREEN if stats.max_q < 1.0 else RED
        print(f"{color}Λ={lam:<7g} max q={stats.max_q:.4f}  mean q={stats.mean_q:.4f}{RESET}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
