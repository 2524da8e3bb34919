"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map it without a lookup
table: 3 for bad input data, 4 for numerical failures.
"""


class FairlinError(Exception):
    exit_code = 1

    def to_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class DataError(FairlinError, ValueError):
    exit_code = 3


class NumericError(FairlinError, ArithmeticError):
    exit_code = 4


class _GroupError:
    """Mixin for errors tied to one group label."""

    def __init__(self, group, message=None):
        self.group = group
        super().__init__(message or f"group {group}")

    def to_dict(self):
        d = super().to_dict()
        d["group"] = self.group
        return d


# data errors
class NonFiniteInput(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class GroupTooSmall(_GroupError, DataError):
    pass


class UnknownGroup(_GroupError, DataError):
    pass


class EmptyGroup(_GroupError, DataError):
    pass


class TooFewGroups(DataError):
    pass


class MissingColumn(DataError):
    pass


class NonNumericCell(DataError):
    def __init__(self, row, col, value=None):
        self.row, self.col = row, col
        super().__init__(f"non-numeric cell at row {row}, column {col!r}: {value!r}")

    def to_dict(self):
        d = super().to_dict()
        d.update(row=self.row, column=self.col)
        return d


class SplitTooSmall(DataError):
    pass


class EpsilonOutOfRange(DataError):
    pass


class NegativeSigma(DataError):
    pass


class NotSharedSlope(DataError):
    pass


# numeric errors
class SingularDesign(NumericError):
    pass


class DegenerateScore(_GroupError, NumericError):
    pass


class ZeroSlopeGroup(_GroupError, NumericError):
    pass


class ZeroVariance(NumericError):
    pass


class ZeroOutcomeVariance(_GroupError, NumericError):
    pass


class NonPSD(NumericError):
    pass
