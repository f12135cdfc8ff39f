"""Exception hierarchy.

``DataError`` subclasses describe problems with user-supplied data and map to
CLI exit code 1; ``UsageError`` subclasses map to exit code 2.
"""


class HsError(Exception):
    pass


class DataError(HsError):
    pass


class UsageError(HsError):
    pass


class EmptyInput(DataError):
    pass


class MalformedRow(DataError):
    def __init__(self, row: int, reason: str):
        super().__init__(f"row {row}: {reason}")
        self.row = row
        self.reason = reason


class NonMonotoneTimestamps(DataError):
    pass


class InvalidConfig(UsageError):
    pass


class MissingLag(DataError):
    pass


class EmptyHistogram(DataError):
    pass


class InvalidAlpha(UsageError):
    pass


class TooShort(DataError):
    pass


class TooFewSamples(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class NotStandardized(UsageError):
    pass


class SlotTooSmall(DataError):
    def __init__(self, hour: int, n_rows: int, required: int):
        super().__init__(f"slot {hour}: {n_rows} rows, need at least {required}")
        self.hour = hour


class MissingContext(DataError):
    pass


class OutOfWindow(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ZeroNormalizer(DataError):
    pass


class ZeroBaseline(DataError):
    pass


class ModelNotFound(UsageError):
    pass


class IoFailure(HsError):
    pass
