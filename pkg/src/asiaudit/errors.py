"""Exception hierarchy for asiaudit.

Every exception carries a short machine code (``code``) so the CLI can map it
to an exit status and a JSON-lines diagnostic without string matching.
"""

from __future__ import annotations


class AsiAuditError(Exception):
    code = "error"


class DataError(AsiAuditError):
    """Input data cannot be used (CSV problems, empty panels, bad values)."""

    code = "data_error"


class MissingColumn(DataError):
    code = "missing_column"

    def __init__(self, name: str):
        super().__init__(f"required column {name!r} not found in header")
        self.name = name


class ParseError(DataError):
    code = "parse_error"

    def __init__(self, row: int, column: str, value: str = ""):
        super().__init__(f"row {row}: cannot parse column {column!r} (value {value!r})")
        self.row = row
        self.column = column
        self.value = value


class DuplicateKey(DataError):
    code = "duplicate_key"

    def __init__(self, firm_id: str, year: int):
        super().__init__(f"duplicate (firm_id, year) = ({firm_id!r}, {year})")
        self.firm_id = firm_id
        self.year = year


class EmptyPanel(DataError):
    code = "empty_panel"

    def __init__(self, message: str = "panel has no usable records"):
        super().__init__(message)


class TooFewObservations(DataError):
    code = "too_few_observations"


class ZeroDenominator(DataError):
    code = "zero_denominator"


class DomainError(AsiAuditError, ValueError):
    code = "domain_error"


class ConfigError(AsiAuditError, ValueError):
    code = "config_error"


class ConvergenceError(AsiAuditError, ArithmeticError):
    code = "convergence_error"


class InvalidNesting(AsiAuditError, ValueError):
    code = "invalid_nesting"


class RankDeficient(AsiAuditError, ArithmeticError):
    code = "rank_deficient"

    def __init__(self, details: str, column: str | None = None):
        super().__init__(details)
        self.details = details
        self.column = column


class DegenerateDummy(RankDeficient):
    """The sign dummy is constant, so ``ducf`` is collinear with zero or ``cf``.

    ``reason`` is ``"all_positive"`` or ``"all_nonpositive"``.
    """

    code = "degenerate_dummy"

    def __init__(self, reason: str):
        super().__init__(f"sign dummy is constant ({reason}); ducf is collinear", column="ducf")
        self.reason = reason


class StageError(AsiAuditError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage: str, cause: AsiAuditError):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.code = cause.code
