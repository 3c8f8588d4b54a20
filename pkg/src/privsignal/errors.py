"""Exception types raised across the package."""


class PrivSignalError(ValueError):
    """Base class for all input and contract errors."""


class NegativeMass(PrivSignalError):
    pass


class SumNotOne(PrivSignalError):
    pass


class DimensionMismatch(PrivSignalError):
    pass


class InvalidH(PrivSignalError):
    pass


class InvalidParams(PrivSignalError):
    pass


class TooManyLevels(PrivSignalError):
    pass


class ZeroMassSignal(PrivSignalError):
    pass


class IncompatibleShapes(PrivSignalError):
    pass


class ShapeMismatch(PrivSignalError):
    pass


class InvalidDomain(PrivSignalError):
    pass


class WrongInstanceShape(PrivSignalError):
    pass


class WrongMode(PrivSignalError):
    pass


class NegativeWeights(PrivSignalError):
    pass


class InvalidEps(PrivSignalError):
    pass


class SizeCapExceeded(PrivSignalError):
    pass


class SolverFailure(RuntimeError):
    """The LP backend returned without an optimal, bounded solution."""


class UnknownExperiment(PrivSignalError):
    pass


class InvalidConfig(PrivSignalError):
    pass
