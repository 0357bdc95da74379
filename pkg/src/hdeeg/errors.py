"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage/config errors exit 2, data errors
exit 3 and degenerate-training errors exit 4.
"""


class HDError(Exception):
    exit_code = 1


class InvalidArgument(HDError, ValueError):
    exit_code = 2


class ConfigError(HDError):
    exit_code = 2


class DataError(HDError):
    exit_code = 3


class ParseError(DataError):
    pass


class DegenerateInputError(DataError):
    pass


class UndefinedDivergence(DataError):
    pass


class InsufficientData(DataError):
    pass


class DegenerateTraining(HDError):
    exit_code = 4


class SchemeMismatch(HDError, ValueError):
    exit_code = 2
