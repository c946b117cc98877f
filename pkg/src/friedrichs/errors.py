"""Exception hierarchy for the friedrichs package.

ModelValidityError subclasses indicate that the requested total
quasi-momentum p violates the model hypotheses (no unique non-degenerate
band maximum); the CLI maps them to exit code 2.  ConfigError subclasses
indicate an unusable model configuration and map to exit code 1.
"""


class FriedrichsError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FriedrichsError, ValueError):
    """Raised on non-finite or otherwise malformed numeric input."""


class ConfigError(FriedrichsError, ValueError):
    """Raised when a model configuration cannot be used."""


class TrivialFormFactorError(ConfigError):
    """Form factor is identically zero."""


class InvalidDispersionError(ConfigError):
    """Dispersion coefficients are unusable (e.g. non-positive hopping)."""


class UnsupportedFamilyError(FriedrichsError, ValueError):
    """Operation requires a different model family."""


class ModelValidityError(FriedrichsError):
    """The model hypotheses fail at the requested quasi-momentum."""


class DegenerateMaximumError(ModelValidityError):
    """The band maximum has a Hessian that is not negative definite."""


class NonUniqueMaximumError(ModelValidityError):
    """Two distinct maximizers attain the band edge within tolerance."""


class NewtonConvergenceError(ModelValidityError):
    """Newton polishing of a critical point did not converge."""


class QuadratureError(FriedrichsError):
    """Base class for quadrature failures."""


class BelowThresholdError(QuadratureError, ValueError):
    """Spectral parameter z lies below the band edge M(p)."""


class QuadratureNotConvergedError(QuadratureError):
    """Refinement did not reach the target tolerance."""


class ExpansionFitError(FriedrichsError):
    """Least-squares fit of the edge expansion failed its residual gate."""


class BracketingError(FriedrichsError):
    """Internal error: root bracketing failed (should be impossible)."""
