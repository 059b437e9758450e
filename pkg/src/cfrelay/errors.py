"""
Exceptions raised by cfrelay

"""


class CFRelayError(Exception):
    """Base class for all package errors"""


class PreconditionError(CFRelayError, ValueError):
    """Input violates a documented precondition"""


class SingularityError(PreconditionError):
    """Matrix required to be positive definite is (numerically) singular"""


class ChannelFormatError(PreconditionError):
    """Malformed channel text file"""


class ConfigError(PreconditionError):
    """Malformed key=value configuration"""


class NumericalError(CFRelayError):
    """Internal numerical failure"""


class ConvergenceError(NumericalError):
    """
    Iterative solver hit its iteration limit

    Attributes:
        iterate: Last iterate reached by the solver
        trace (list[float]): Objective values recorded along the way

    """

    def __init__(self, message, iterate=None, trace=None):
        super().__init__(message)
        self.iterate = iterate
        self.trace = list(trace or [])


class MonotonicityError(NumericalError):
    """Coordinate ascent decreased its objective"""


class AuditViolation(CFRelayError):
    """
    Constant-gap audit found a trial above the bound

    Attributes:
        seed (int): Seed of the offending trial
        gap (float): Observed gap in bits
        bound (float): Theoretical bound in bits

    """

    def __init__(self, seed, gap, bound):
        super().__init__(
            f"Trial with seed {seed} has gap {gap!r} > bound {bound!r}"
        )
        self.seed = seed
        self.gap = gap
        self.bound = bound
