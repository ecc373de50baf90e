"""Exception hierarchy.

Every error raised by the library derives from TriganError so callers can
catch library failures without masking programming errors.
"""


class TriganError(Exception):
    """Base class for all library errors."""


class NonPositiveDensity(TriganError):
    """A density value is zero or negative where strict positivity is required."""


class BoxOutOfDomain(TriganError):
    """An integration box exceeds the unit cube."""


class ZeroMarginal(TriganError):
    """A prefix marginal vanished; unreachable for strictly positive densities."""


class InsufficientResolution(TriganError):
    """Grid too coarse for the requested finite-difference order."""


class DegenerateJacobian(TriganError):
    """A Jacobian (or diagonal partial) is at or below the positivity floor."""


class RootNotBracketed(TriganError):
    """Monotone solve failed to bracket its root; signals an internal bug."""


class ParamsOutOfBox(TriganError):
    """Parameter vector leaves the certified parameter box."""


class NetTooLarge(TriganError):
    """Requested net cardinality exceeds the configured cap."""


class NonConvergence(TriganError):
    """Iterative optimizer hit its iteration cap. Carries the partial result."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class DiscriminatorOutOfRange(TriganError):
    """Discriminator evaluated outside (0, 1)."""


class ConfigInvalid(TriganError):
    """Run configuration failed schema validation."""


class IntegralDivergent(TriganError):
    """Entropy integral diverges: d / (2(alpha + k - 1)) >= 1."""
