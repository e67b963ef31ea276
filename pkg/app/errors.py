"""Exception hierarchy shared by services and CLI commands.

Each error carries the process exit code the CLI reports for it:
1 usage/config, 2 data, 3 internal invariant violation.
"""


class CohortError(Exception):
    exit_code = 3
    module = "cohort"


class ConfigError(CohortError, ValueError):
    exit_code = 1
    module = "config"


class DataError(CohortError, ValueError):
    exit_code = 2
    module = "data"


class InvariantViolation(CohortError):
    exit_code = 3
    module = "invariant"


# telemetry

class CsvFormatError(DataError):
    """Raised when a CSV file is missing, has the wrong header or bad rows."""
    module = "telemetry"

    def __init__(self, message, row_errors=None):
        super().__init__(message)
        self.row_errors = list(row_errors or [])


class RosterMismatchError(DataError):
    module = "telemetry"


class CohortSizeError(DataError):
    module = "telemetry"


class UnimputableSeriesError(DataError):
    module = "telemetry"


# features

class CoverageError(DataError):
    module = "features"


class SchemaMismatchError(DataError):
    module = "features"


# model

class SingleClassError(DataError):
    module = "model"


class BoostingError(DataError):
    module = "model"


# eval

class EmptyFoldPlanError(DataError):
    module = "eval"


# simulate

class ScriptOutsideExtentError(DataError):
    module = "simulate"
