"""Exception hierarchy.

``ConfigError`` subclasses map to CLI exit code 2, ``NumericalError``
subclasses to exit code 3.
"""


class AdoptnetError(Exception):
    """Base class for all package errors."""


class ConfigError(AdoptnetError, ValueError):
    """Invalid parameters or configuration."""


class ConstructionError(AdoptnetError, RuntimeError):
    """A network generator could not satisfy its postconditions."""


class StabilityError(ConfigError):
    """Integrator step violates the explicit-Euler stability bound."""

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(f"dt={dt:g} violates the stability bound; use dt < {dt_max:.6g}")


class NegativeRateError(ConfigError):
    """The combined operator has negative off-diagonal rates (not a walk generator)."""


class IngestionError(ConfigError):
    """Malformed input file."""


class NumericalError(AdoptnetError, ArithmeticError):
    """A numerical precondition failed at run time."""


class IndefiniteOperatorError(NumericalError):
    """``kappa*I - A`` is singular or not positive definite."""

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"resolvent operator is not positive definite (smallest eigenvalue {min_eigenvalue:.6g})"
        )


class CollinearityError(NumericalError):
    pass


class DegenerateSampleError(NumericalError):
    pass


class UndefinedCorrelationError(NumericalError):
    pass
