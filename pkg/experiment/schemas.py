"""
Sweep configuration and the flat row schema shared by the sweep, the CSV
emitter and the figure renderer.
"""

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config import (
    D0,
    DIV_THRESHOLD,
    FORMATS,
    INCLUDE_J2_ZERO,
    K0,
    LAMBDA_GRID,
    MAX_WORKERS,
    N_MAX,
    NU_MAX,
    OUT_DIR,
    PAD_MARGIN,
    PAD_POLICY,
    SEED,
    STARTS,
    TOL_CONVERGE,
)
from errors import UsageError

ALLOWED_STARTS = ("max", "min", "h0")
ALLOWED_FORMATS = ("csv", "svg")
ROW_STATUSES = ("ok", "converged", "diverged", "singular")


# ── Sweep configuration ──────────────────────────────────────
class SweepConfig(BaseModel):
    lambda_list: list[float] = Field(default_factory=lambda: list(LAMBDA_GRID))
    n_max: int = N_MAX
    nu_max: int = NU_MAX
    starts: list[str] = Field(default_factory=lambda: list(STARTS))
    n_list: list[int] | None = None  # defaults to 7, 9, ..., n_max
    d0: float = D0
    k0: float = K0
    include_j2_zero: bool = INCLUDE_J2_ZERO
    pad_policy: str = PAD_POLICY
    pad_margin: int = PAD_MARGIN
    tol_converge: float = TOL_CONVERGE
    div_threshold: float = DIV_THRESHOLD
    out_dir: str = OUT_DIR
    formats: list[str] = Field(default_factory=lambda: list(FORMATS))
    max_workers: int = MAX_WORKERS
    contraction_pairs: int = 0  # per-Λ contraction estimate around H_0 when > 0
    seed: int = SEED

    @field_validator("lambda_list")
    @classmethod
    def _positive_lambdas(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("lambda_list must not be empty")
        if any(not lam > 0.0 for lam in v):
            raise ValueError(f"every Λ must be positive, got {v}")
        return v

    @field_validator("n_max")
    @classmethod
    def _odd_n_max(cls, v: int) -> int:
        if v < 7 or v % 2 == 0:
            raise ValueError(f"n_max must be odd and >= 7, got {v}")
        return v

    @field_validator("nu_max")
    @classmethod
    def _nu_max(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"nu_max must be >= 1, got {v}")
        return v

    @field_validator("starts")
    @classmethod
    def _starts(cls, v: list[str]) -> list[str]:
        bad = [s for s in v if s not in ALLOWED_STARTS]
        if not v or bad:
            raise ValueError(f"starts must be a non-empty subset of {ALLOWED_STARTS}, got {v}")
        return v

    @field_validator("formats")
    @classmethod
    def _formats(cls, v: list[str]) -> list[str]:
        bad = [f for f in v if f not in ALLOWED_FORMATS]
        if bad:
            raise ValueError(f"formats must be a subset of {ALLOWED_FORMATS}, got {v}")
        return v

    @field_validator("pad_policy")
    @classmethod
    def _pad_policy(cls, v: str) -> str:
        if v not in ("envelope", "zero"):
            raise ValueError(f"pad_policy must be envelope or zero, got {v!r}")
        return v

    @model_validator(mode="after")
    def _fill_n_list(self) -> "SweepConfig":
        if self.n_list is None:
            self.n_list = list(range(7, self.n_max + 1, 2))
        bad = [n for n in self.n_list if n < 1 or n % 2 == 0 or n > self.n_max]
        if bad:
            raise ValueError(f"n_list entries must be odd and within 1..{self.n_max}, got {bad}")
        if self.pad_margin < 1:
            raise ValueError("pad_margin must be >= 1")
        if self.contraction_pairs < 0:
            raise ValueError(f"contraction_pairs must be >= 0, got {self.contraction_pairs}")
        return self

    @property
    def n_work(self) -> int:
        return self.n_max + 2 * self.pad_margin

    @classmethod
    def build(cls, **kwargs) -> "SweepConfig":
        """Construct from keyword arguments, reporting validation problems as UsageError."""
        try:
            return cls(**{k: v for k, v in kwargs.items() if v is not None})
        except ValidationError as e:
            raise UsageError(f"invalid sweep configuration: {e}") from e


# ── Rows ─────────────────────────────────────────────────────
class SweepRow(BaseModel):
    lambda_: float
    n: int
    nu: int
    start: str
    delta: float
    h_sign: int
    h_log10_abs: float
    status: str = "ok"

    @field_validator("status")
    @classmethod
    def _status(cls, v: str) -> str:
        if v not in ROW_STATUSES:
            raise ValueError(f"status must be one of {ROW_STATUSES}, got {v!r}")
        return v

    def sort_key(self) -> tuple:
        return self.lambda_, self.start, self.nu, self.n
