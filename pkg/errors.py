"""
Exception hierarchy shared by the phi4 and experiment packages.
"""


class Phi4Error(Exception):
    """Base class for every error raised by this toolkit."""


class DomainError(Phi4Error, ValueError):
    """An argument lies outside the mathematical domain (even n, n < 3, Λ <= 0...)."""


class UsageError(Phi4Error):
    """Caller-side misuse: mismatched grids, invalid configuration, bad CLI input."""


class PaddingRequiredError(Phi4Error, IndexError):
    """An A-term lookup H^{n+3} falls beyond the stored grid."""

    def __init__(self, needed: int, n_work: int):
        super().__init__(f"entry n={needed} is needed but the sequence stops at n_work={n_work}; pad it first")
        self.needed = needed
        self.n_work = n_work


class SingularityError(Phi4Error, ArithmeticError):
    """A denominator of the splitting formulas vanished."""

    def __init__(self, lambda_: float, n: int, where: str):
        super().__init__(f"singular {where} at n={n}, Λ={lambda_!r}")
        self.lambda_ = lambda_
        self.n = n
        self.where = where
