"""Exception hierarchy for the contact-discontinuity duct solver."""


class ContactDuctError(Exception):
    """Base class for all solver failures."""


class DomainError(ContactDuctError, ValueError):
    """Argument outside the mathematical domain of a formula."""


class SubsonicityError(ContactDuctError):
    """A state or gradient left the subsonic regime."""


class FarFieldError(ContactDuctError):
    """The far-field algebraic problem has no admissible solution."""


class EllipticityError(ContactDuctError):
    """Linearized coefficients lost symmetry or positive definiteness."""


class LinearSolveError(ContactDuctError):
    """The iterative linear solver did not reach its tolerance."""

    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = list(residuals)


class DivergenceError(ContactDuctError):
    """The nonlinear fixed-point iteration stopped contracting."""


class ConfigError(ContactDuctError, ValueError):
    """Invalid run configuration."""
