"""Exception types shared across the solver kit.

The categories matter: callers distinguish miscoded reaction mechanisms
(StructuralViolationError) from bad solver inputs (PreconditionError),
bad configuration (ConfigurationError), and states that left the
physically admissible set (AdmissibilityError).
"""


class MPDGError(Exception):
    """Base class for all solver-kit errors."""


class StructuralViolationError(MPDGError):
    """A rate evaluator broke the production-destruction structure
    (negative rate, destruction of an absent species, non-finite entry)."""


class PreconditionError(MPDGError, ValueError):
    """Stepper input violated a documented precondition (e.g. nonpositive
    history where strictly positive states are required)."""


class BootstrapError(PreconditionError):
    """A multistep scheme was invoked with too few history levels."""


class ConfigurationError(MPDGError, ValueError):
    """Scheme or case parameters outside their valid set."""


class AdmissibilityError(MPDGError):
    """A state left the admissible set (rho > 0, p > 0, fractions in
    [0, 1]) where admissibility was required. Never patched silently."""


class InternalSolverError(MPDGError):
    """A condition the theory rules out for valid inputs (singular
    Patankar stage system, non-finite solve result)."""
