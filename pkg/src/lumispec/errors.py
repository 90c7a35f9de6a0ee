"""Exception hierarchy shared by all lumispec modules."""


class LumispecError(Exception):
    """Base class for every error raised by lumispec."""


class ParameterError(LumispecError, ValueError):
    """A physical parameter is out of its admissible range."""


class InconsistentSteadyStateError(ParameterError):
    """The steady-state balance equations have no finite solution."""


class ConfigError(LumispecError, ValueError):
    """A configuration file or command-line override is malformed."""


class NumericalError(LumispecError, ArithmeticError):
    """A computation produced a result that violates an internal consistency check."""


class SingularResolventError(NumericalError):
    """``(-i*omega*I - A)`` cannot be inverted at some grid frequency."""

    def __init__(self, omega, message=None):
        self.omega = omega
        super().__init__(message or f"resolvent is singular at omega={omega!r}")


class BudgetError(LumispecError, ValueError):
    """A Monte Carlo budget (step size, ensemble size) violates a precondition."""


class UnstableSystemError(LumispecError, ValueError):
    """The drift matrix has an eigenvalue with non-negative real part."""
