"""Exception hierarchy shared by all modules."""


class FastDiffError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(FastDiffError, ValueError):
    pass


class QOutOfRange(ParameterError):
    pass


class LambdaOutOfRange(ParameterError):
    pass


class BadGridSpec(ParameterError):
    pass


class GridMismatch(FastDiffError, ValueError):
    pass


class QuadratureFailure(FastDiffError, ArithmeticError):
    pass


class BracketFailure(FastDiffError, ArithmeticError):
    pass


# the fixed-point C search uses the same bracketing machinery
BisectionFailure = BracketFailure


class NoConvergence(FastDiffError, ArithmeticError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class GammaDomain(FastDiffError, ArithmeticError):
    pass


class StepTooLarge(FastDiffError, ArithmeticError):
    def __init__(self, message, dt_max=None):
        super().__init__(message)
        self.dt_max = dt_max


class NonFiniteState(FastDiffError, ArithmeticError):
    pass


class InsufficientSamples(FastDiffError, ValueError):
    pass


class MassMismatch(FastDiffError, ValueError):
    pass


class MassNotZero(FastDiffError, ValueError):
    pass


class DegenerateWeight(FastDiffError, ValueError):
    pass


class ZeroProfile(FastDiffError, ValueError):
    pass


class ConstraintViolated(FastDiffError, ValueError):
    pass


class TooFewSamples(InsufficientSamples):
    pass


class NonPositiveValues(FastDiffError, ValueError):
    pass
