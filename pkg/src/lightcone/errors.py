"""Exception and warning types raised by the engine."""

from __future__ import annotations


class LightconeError(Exception):
    """Base class for all engine errors."""


class ConfigError(LightconeError, ValueError):
    """Invalid configuration: unknown chart name, bad order, bad tolerance."""


class DimensionError(LightconeError, ValueError):
    """Ambient vectors of mismatched length."""


class DomainError(LightconeError, ValueError):
    """A parameter point or box lies outside the chart domain."""


class FDStencilError(DomainError):
    """A finite-difference stencil would leave the chart domain."""


class DegenerateTangentError(LightconeError):
    """The tangent vectors do not span an n-dimensional subspace."""


class SpacelikeViolation(LightconeError):
    """Induced metric is not positive definite at a point."""

    def __init__(self, message: str, eigenvalue: float = float("nan"), point=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.point = point


class DualUndefinedError(LightconeError):
    """No normal completion pairs non-trivially with p."""


class DualDegenerateError(LightconeError):
    """The dual map fails to be a spacelike immersion at a sample point."""


class SPrecondError(LightconeError):
    """A formula stated only for scalar-flat charts was called on a curved one."""


class SpecError(LightconeError, ValueError):
    """A variation specification violates its defining conditions."""


class StencilRangeError(LightconeError):
    """The volume function could not be evaluated on a t-stencil point."""


class InversionError(LightconeError):
    """Newton inversion of a reparametrization failed to converge."""

    def __init__(self, message: str, t: float = float("nan"), x=None):
        super().__init__(message)
        self.t = t
        self.x = x


class TubularRangeWarning(UserWarning):
    """The ruled map lost rank along the base directions."""


class ConditioningWarning(UserWarning):
    """The metric is badly conditioned at a sample point."""
