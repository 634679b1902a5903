"""Exception types shared across the library."""


class FcthermError(Exception):
    """Base class for library-specific failures."""


class SingularSupportError(FcthermError):
    """A logarithmic-derivative equation has no solution on the state's support.

    Raised when a direction with (lambda_i + lambda_j) ~ 0 carries a
    non-negligible derivative component, i.e. the state family leaves the
    support of the state itself.
    """


class CouplingTooStrongError(FcthermError):
    """The assembled second-order state left the physical regime.

    Raised when the truncated coupling expansion produces a state with an
    eigenvalue below the positivity floor: the requested coupling/temperature
    combination is outside the validity of the expansion.
    """


class ConfigError(FcthermError):
    """A run configuration failed validation."""
