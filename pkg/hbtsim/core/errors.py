"""Exception hierarchy shared by every hbtsim module.

Library code raises these; only the CLI turns them into exit codes.
"""


class HbtsimError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(HbtsimError, ValueError):
    """A configuration value violates the constraints of its target type."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)


class UnsupportedConfigurationError(ConfigurationError):
    """The configuration is valid but not supported by the requested operation."""


class UndefinedEstimateError(HbtsimError, ArithmeticError):
    """An estimator or coherence value is undefined (for example zero singles)."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class PartitionError(HbtsimError, ValueError):
    """The requested partition count does not divide the number of averaged elements."""


class InsufficientDataError(HbtsimError, ValueError):
    """Not enough pulses or windows for the requested estimator."""


class TimeTagFormatError(HbtsimError, ValueError):
    """Malformed time-tag input, addressed by byte offset or CSV line number."""

    kind = "format"

    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        elif line is not None:
            message = f"{message} (at line {line})"
        super().__init__(message)


class BadMagicError(TimeTagFormatError):
    kind = "bad_magic"


class UnsupportedVersionError(TimeTagFormatError):
    kind = "unsupported_version"


class TruncatedRecordError(TimeTagFormatError):
    kind = "truncated"


class TimestampRegressionError(TimeTagFormatError):
    kind = "timestamp_regression"


class ChannelOverflowError(TimeTagFormatError):
    kind = "channel_overflow"


class CsvFieldError(TimeTagFormatError):
    kind = "csv_field"


class TimestampOverflowError(TimeTagFormatError):
    """A time tag falls beyond the span of the window grid."""

    kind = "beyond_grid"
