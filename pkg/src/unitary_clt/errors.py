"""Exception hierarchy shared by every module.

Each class carries the process exit code the command-line front end uses
when the error escapes a command.
"""


class UnitaryCLTError(Exception):
    exit_code = 1


class InvalidParameter(UnitaryCLTError, ValueError):
    exit_code = 2


class InvalidInput(UnitaryCLTError, ValueError):
    exit_code = 2


class ShapeError(InvalidParameter):
    pass


class DomainError(InvalidParameter):
    pass


class TruncationError(InvalidParameter):
    pass


class StatisticsError(InvalidParameter):
    pass


class NumericalFailure(UnitaryCLTError, ArithmeticError):
    exit_code = 3


class CapacityError(UnitaryCLTError):
    exit_code = 4
