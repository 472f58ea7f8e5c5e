"""Exception hierarchy shared by all pipeline stages."""


class CcevalError(Exception):
    """Base class; ``exit_code`` drives the CLI exit-code contract."""

    exit_code = 2


class InputError(CcevalError):
    exit_code = 2


class ParseError(InputError):
    pass


class MissingFile(InputError):
    def __init__(self, path, what="file"):
        super().__init__(f"missing {what}: {path}")
        self.path = str(path)


class InvariantViolation(InputError):
    pass


class ShapeMismatch(InputError):
    pass


class DimensionMismatch(ShapeMismatch):
    pass


class MismatchedKeys(InputError):
    pass


class NoOverlap(InputError):
    pass


class MissingCompetitor(InputError):
    pass


class EmptyMask(InputError):
    pass


class DegenerateComputation(CcevalError):
    exit_code = 3


class AllZeroImage(DegenerateComputation):
    pass


class DegenerateEstimate(DegenerateComputation):
    pass


class ZeroChannelIlluminant(DegenerateComputation):
    pass


class DegenerateAxis(DegenerateComputation):
    pass


class ZeroVariance(DegenerateComputation):
    pass


class InsufficientData(DegenerateComputation):
    pass


class DegenerateInputs(DegenerateComputation):
    pass


class ZeroSd(DegenerateComputation):
    pass


class ZeroMean(DegenerateComputation):
    pass


class ZeroCeiling(DegenerateComputation):
    pass


class OutOfGamut(CcevalError):
    """A colour needs linear values outside the allowed range."""

    exit_code = 4

    def __init__(self, message, *, channel=None, where=None):
        super().__init__(message)
        self.channel = channel
        self.where = where
