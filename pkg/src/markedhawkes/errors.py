"""Exception hierarchy shared by every module."""


class HawkesError(Exception):
    """Base class for all errors raised by markedhawkes."""


class InvalidSpec(HawkesError, ValueError):
    """A ModelSpec (or one of its parts) violates a declared invariant."""


class InvalidKernel(InvalidSpec):
    """A kernel produced a non-finite norm or is otherwise unusable."""


class InvalidParams(InvalidSpec):
    """Microbe parameters are malformed or a required integral diverges."""


class ConditionViolated(InvalidSpec):
    """A moment condition required by a specific result does not hold."""


class Unstable(HawkesError, ArithmeticError):
    """Branching ratio (continuous or discrete) is not below one."""


class StepTooCoarse(HawkesError, ArithmeticError):
    """Grid step too large for the implicit trapezoid update."""


class GridMismatch(HawkesError, ValueError):
    """Two grid functions do not share step size and length."""


class HorizonTooShort(HawkesError, ArithmeticError):
    """Grid horizon does not capture enough of the tail mass."""


class IntensityBlowup(HawkesError, ArithmeticError):
    """Thinning bound exceeded the configured cap."""


class OutOfRange(HawkesError, ValueError):
    """Requested time lies outside the simulated horizon."""


class BadReference(HawkesError, ValueError):
    """Reference distribution for a statistical test is degenerate."""


class NotStandardForm(HawkesError, ValueError):
    """Model is not a standard (constant base rate) marked Hawkes process."""


class ConfigError(HawkesError, ValueError):
    """Configuration file failed schema validation."""
