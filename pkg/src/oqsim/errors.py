"""Exception hierarchy shared by all oqsim modules."""


class OqsimError(Exception):
    """Base class for all oqsim errors."""


class ValidationError(OqsimError):
    """A parameter set violates a structural invariant."""


class NonPositiveMass(ValidationError):
    pass


class NonPositiveHbar(ValidationError):
    pass


class NegativeRate(ValidationError):
    """nu, d0 or d2 below zero."""


class PositivityViolation(ValidationError):
    """Strict complete-positivity bound m^2 (nu^2 + 4 xi^2) <= 2 d0 d2 failed."""

    def __init__(self, lhs: float, rhs: float):
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(
            f"positivity bound violated: m^2 (nu^2 + 4 xi^2) = {lhs:.17g} "
            f"> 2 d0 d2 = {rhs:.17g}"
        )


class ZeroFriction(OqsimError):
    """Quantity is singular at nu = 0 (no finite frictionless limit)."""


class ZeroDecoherence(OqsimError):
    """Long-time asymptote is singular when d0 = 0."""


class ZeroNorm(OqsimError):
    """Observable undefined for a state with vanishing norm."""


class DomainEscape(OqsimError):
    """Characteristic argument left the representable domain of the profile."""


class StabilityViolation(OqsimError):
    """Requested time step exceeds the explicit Runge-Kutta stability bound."""


class BoundaryLeak(OqsimError):
    """Field magnitude at the domain edge exceeded the configured threshold."""


class GridMismatch(OqsimError):
    """Grids of two objects are not conjugate / not identical."""


class FitFailure(OqsimError):
    """Envelope is not Gaussian-dominated; quadratic fit rejected."""


class InvalidLabel(OqsimError):
    """Angular momentum labels are inconsistent (|m| > l, non-half-integer, ...)."""


class ShapeMismatch(OqsimError):
    """Operator block has a shape incompatible with the tensor basis."""


class ConfigError(OqsimError):
    """Scenario configuration unparseable or containing unknown keys."""
