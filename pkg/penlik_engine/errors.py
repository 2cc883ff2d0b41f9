from __future__ import annotations

from typing import Optional

from .constants import EXIT_INPUT, EXIT_NUMERIC


class PenlikError(Exception):
    code: str = "error"
    exit_status: int = EXIT_INPUT


class InputError(PenlikError, ValueError):
    code = "input"


class ParameterError(InputError):
    code = "parameter"


class DomainError(InputError):
    code = "domain"


class NonStationaryError(InputError):
    code = "nonstationary"


class CsvParseError(InputError):
    code = "csv"

    def __init__(self, message: str, *, row: Optional[int] = None, column: Optional[str] = None) -> None:
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.row = row
        self.column = column


class NumericError(PenlikError, ArithmeticError):
    code = "numeric"
    exit_status = EXIT_NUMERIC

    def __init__(
        self,
        message: str,
        *,
        iteration: Optional[int] = None,
        condition_number: Optional[float] = None,
    ) -> None:
        details = []
        if iteration is not None:
            details.append(f"iteration {iteration}")
        if condition_number is not None:
            details.append(f"condition number {condition_number:.3e}")
        super().__init__(f"{message} [{', '.join(details)}]" if details else message)
        self.iteration = iteration
        self.condition_number = condition_number


class DegenerateDfError(NumericError):
    code = "degenerate-df"


class ScanError(NumericError):
    code = "scan"


class ExperimentError(NumericError):
    code = "experiment"
