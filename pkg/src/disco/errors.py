"""Exception hierarchy shared across the package."""

from __future__ import annotations


class DiscoError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DiscoError, ValueError):
    """Invalid parameters, incompatible settings or a malformed config file."""


class ContractViolation(DiscoError, ValueError):
    """A caller broke an operation's precondition (e.g. index not available)."""


class ShapeError(DiscoError, ValueError):
    """Array dimensions do not match what the model or operation expects."""


class InsufficientDataError(DiscoError, ValueError):
    """Too few rows to train or split."""


class CapabilityError(DiscoError):
    """The model cannot supply what an acquisition function needs."""


class NumericalFailure(DiscoError, FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch


class DataFormatError(DiscoError):
    """A descriptor or outcome file could not be parsed."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class RunFailure(DiscoError):
    """A run aborted; ``cycle`` names the cycle whose training or acquisition failed."""

    def __init__(self, message: str, cycle: int):
        super().__init__(f"cycle {cycle}: {message}")
        self.cycle = cycle
