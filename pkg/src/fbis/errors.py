"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (the class name) and the
process exit status the command-line front end uses for it.
"""


class FBISError(Exception):
    exit_code = 4

    def __init__(self, message="", variables=None):
        super().__init__(message)
        # offending variable indices, when the failure is per-column
        self.variables = None if variables is None else list(variables)

    @property
    def code(self):
        return type(self).__name__


class UsageError(FBISError, ValueError):
    exit_code = 2


class DataError(FBISError, ValueError):
    exit_code = 3


class NumericalError(FBISError, ArithmeticError):
    exit_code = 4


class EmptyData(DataError):
    pass


class NonFinite(DataError):
    pass


class DegenerateResponse(DataError):
    pass


class InvalidDimension(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NonNumericCell(ParseError):
    pass


class MissingColumn(DataError):
    pass


class TooFewRows(DataError):
    pass


class InvalidRho(UsageError):
    pass


class DegenerateFit(NumericalError):
    pass


class DegenerateSurrogate(NumericalError):
    pass


class UnsupportedKernel(NumericalError):
    pass
