"""Exception hierarchy shared across the package."""


class FrictionlessError(Exception):
    """Base class for every error raised by this package."""


class DesignError(FrictionlessError, ValueError):
    """Invalid trajectory-design input."""


class PositivityViolation(DesignError):
    """The interpolated scaling factor b(t) is not strictly positive."""


class SingularSystem(DesignError):
    """The boundary-condition linear system could not be solved."""


class InvalidCoupling(FrictionlessError, ValueError):
    """A coupling constant outside the admissible range."""


class GridUnderflow(FrictionlessError):
    """A resampling request reaches outside the stored grid."""


class GridMismatch(FrictionlessError, ValueError):
    """Two wavefunctions live on different grids."""


class NumericalFailure(FrictionlessError):
    """Base class for failures during numerical propagation."""


class NoConvergence(NumericalFailure):
    """Imaginary-time relaxation did not converge."""


class GridOverflow(NumericalFailure):
    """Too much norm reached the edge of the simulation box."""


class NonFinite(NumericalFailure):
    """NaN or Inf appeared in the wavefunction."""


class ConfigError(FrictionlessError, ValueError):
    """Malformed or inconsistent run configuration."""
