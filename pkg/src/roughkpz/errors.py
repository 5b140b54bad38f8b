"""Exception types raised across the package."""


class RoughKPZError(Exception):
    """Base class for all package errors."""


class InvalidScale(RoughKPZError, ValueError):
    """Mollification scale must be strictly positive."""


class InvalidDuration(RoughKPZError, ValueError):
    """Time increments must be nonnegative (or positive where stated)."""


class InvalidExponent(RoughKPZError, ValueError):
    """Fractional exponent outside its admissible range."""


class OutOfRegime(RoughKPZError, ValueError):
    """Noise exponent at or below the subcritical threshold 1/4."""


class CutoffTooSmall(RoughKPZError, ValueError):
    """Mode cutoff does not cover the decay threshold of the mollifier."""


class TestFunctionTooWide(RoughKPZError, ValueError):
    """Test function bandwidth exceeds the available trajectory modes."""

    __test__ = False


class QuadratureFailure(RoughKPZError, RuntimeError):
    """Requested quadrature tolerance was not reached."""


class DealiasViolation(RoughKPZError, ValueError):
    """Padded grid too small to dealias a quadratic product."""


class StepTooLarge(RoughKPZError, RuntimeError):
    """Step-halving defect above the configured tolerance."""


class Blowup(RoughKPZError, RuntimeError):
    """Solution sup norm exceeded the configured guard."""


class PositivityLoss(RoughKPZError, RuntimeError):
    """Cole-Hopf variable reached the positivity floor."""


class InsufficientReplicas(RoughKPZError, RuntimeError):
    """Standard error too large for the requested tolerance."""
