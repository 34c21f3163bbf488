"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command layer can
translate failures without a lookup table.
"""


class DacspecError(Exception):
    exit_code = 1


class ParseError(DacspecError, ValueError):
    """Malformed input file or document."""

    exit_code = 2


class NoPeak(DacspecError):
    """The spectrum has no feature distinguishable from its scatter."""

    exit_code = 3


class SingularFit(DacspecError):
    """JᵀJ is not invertible at the solution (e.g. two peaks collapsed)."""

    exit_code = 3


class NotConverged(DacspecError):
    exit_code = 3


class OutOfRange(DacspecError, ValueError):
    """Input outside an operation's validity window."""

    exit_code = 4


class ExtrapolationRefused(OutOfRange):
    exit_code = 4


class CalibrationError(DacspecError, ValueError):
    exit_code = 5


class NonMonotone(CalibrationError):
    pass


class DuplicatePressure(CalibrationError):
    pass


class TooFewPoints(CalibrationError):
    pass
