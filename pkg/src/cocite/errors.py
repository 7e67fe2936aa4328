"""Exception hierarchy shared by every pipeline stage.

The CLI maps these onto exit codes: configuration problems exit 1, bad
input data exits 2, exhausted resources exit 3.
"""

from __future__ import annotations


class CociteError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 2


class ConfigError(CociteError, ValueError):
    exit_code = 1


class DataError(CociteError, ValueError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(DataError):
    pass


class ContractError(CociteError, ValueError):
    """A caller broke an operation's precondition."""

    exit_code = 2


class ResourceError(CociteError, OSError):
    exit_code = 3


class BatchFailed(CociteError):
    """A counting worker failed; ``batch`` is the zero-based batch number."""

    def __init__(self, batch: int, detail: str) -> None:
        super().__init__(batch, detail)
        self.batch = batch
        self.detail = detail

    def __str__(self) -> str:
        return f"counting batch {self.batch} failed: {self.detail}"
