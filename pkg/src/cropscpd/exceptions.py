"""Exception hierarchy shared by the solvers, CROPS driver and CLI."""

from __future__ import annotations


class CropsError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionError(CropsError, ValueError):
    """An input violates a documented precondition."""


class NumericalError(CropsError, ArithmeticError):
    """A non-finite or inconsistent intermediate value was produced."""


class IntegrityError(CropsError):
    """A solver state is malformed (e.g. a cyclic changepoint chain)."""


class DataError(CropsError, ValueError):
    """Input data could not be parsed."""


class SolverError(CropsError):
    """A penalised solve failed; ``beta`` records the offending penalty."""

    def __init__(self, message: str, beta: float):
        super().__init__(f"{message} (beta={beta!r})")
        self.beta = beta
