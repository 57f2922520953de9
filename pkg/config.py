# ── Splitting envelopes ──────────────────────────────────────
D0 = 0.001  # denominator constant of delta_max for n >= 5
K0 = 10.0  # universal constant of the |H^{n+1}| <= n! K0^n bound

# ── Partitions ───────────────────────────────────────────────
# Whether the B-term pair set admits (j1, j2) = (n, 0).  `verify` runs both
# variants; only the one without it keeps the iterates inside Phi_0.
INCLUDE_J2_ZERO = False
EXACT_COEFFICIENT_MAX_N = 25  # big-integer cross-check range

# ── Iteration ────────────────────────────────────────────────
NU_MAX = 20
TOL_CONVERGE = 1e-10  # sup_n relative delta change between iterates
DIV_THRESHOLD = 1e6  # |H^{n+1}| / M_n ratio that flags divergence
PAD_POLICY = "envelope"  # envelope | zero
PAD_MARGIN = 10  # extra odd entries carried above N_max; the top ones are truncation-polluted
RESIDUAL_FLOOR = 1e-300

# ── Membership ───────────────────────────────────────────────
BAND_SLACK = 1e-12  # absolute slack in delta units
LAMBDA_SMALL = 1e-8

# ── Contraction estimate ─────────────────────────────────────
RHO = 1e-3
NUM_PAIRS = 32
SEED = 20240601

# ── Sweep grids ──────────────────────────────────────────────
LAMBDA_GRID = [0.001, 0.01, 0.03, 0.05, 0.075, 0.1]
N_LIST = [7, 9, 11, 13, 15, 17, 19, 21, 23, 25]
N_MAX = 25
STARTS = ["max", "min"]
FORMATS = ["csv", "svg"]
EXPECTED_STABLE_MAX = 0.1  # cells at or below this are expected to converge
MAX_WORKERS = 4

# ── Figure sets ──────────────────────────────────────────────
FIGURE_SET_LAMBDAS = {
    1: [0.0005, 0.001, 0.01, 0.015, 0.02, 0.025, 0.03, 0.05, 0.07, 0.09, 0.1, 0.15],
    2: [0.001, 0.01, 0.02, 0.03, 0.1, 0.15],
    3: [0.01, 0.03],  # upper ends of the summary ranges starting at 0.001
}
FIGURE_NU_WINDOW = 6
SVG_HASHSALT = "phi4-zero-dim"

# ── Series oracle ────────────────────────────────────────────
SERIES_EXACT_MAX_ORDER = 8
SERIES_EXACT_MAX_N = 13
SERIES_DPS = 40

# ── Output ───────────────────────────────────────────────────
OUT_DIR = "out"
CSV_NAME = "sweep.csv"
GOLDEN_CHECKSUM = "golden/sweep_default.sha256"
