"""Exception types shared across the package."""


class GLLabError(Exception):
    """Base class for all errors raised by gllab."""


# --- geometry ---

class SlopeExceedsOne(GLLabError):
    """|alpha'| > 1 somewhere, so no arclength completion exists."""


class NegativeRadius(GLLabError):
    """Profile radius alpha is negative in the interior."""


class BadParameter(GLLabError):
    """A builtin-surface or solver parameter violates its constraints."""


# --- conformal ---

class ShootingFailed(GLLabError):
    """No shooting constant reproduces the profile length within tolerance."""


class NonMonotone(GLLabError):
    """The chart function S(phi) failed to be strictly increasing."""


class PoleAtInfinity(GLLabError):
    """s = 0 maps to the point at infinity and has no planar coordinates."""


class OriginUndefined(GLLabError):
    """Evaluation too close to the chart origin where 1/r^2 factors blow up."""


# --- renorm ---

class ConfigurationInvalid(GLLabError):
    """Vortex configuration violates its invariants."""


class QuadratureNotConverged(GLLabError):
    """Successive refinements of the limit-definition quadrature disagree."""


# --- fields ---

class AtVortexCenter(GLLabError):
    """Phase evaluation requested at a vortex center."""


class VortexTooCloseToBoundary(GLLabError):
    """A prescribed vortex sits closer than 3 core radii to the boundary."""


class DegreesDoNotCancel(GLLabError):
    """Prescribed degrees do not sum to zero."""


class ZeroOnLoop(GLLabError):
    """The winding-measurement loop crosses a zero of the field."""


# --- flow ---

class CFLViolated(GLLabError):
    """Time step exceeds the stability bound of the integrator."""


class NonFinite(GLLabError):
    """A field node became non-finite during integration."""


# --- cli ---

class ConfigError(GLLabError):
    """Run-config file is malformed; message carries the JSON path."""
