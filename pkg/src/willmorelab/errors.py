"""Exception types shared across the package."""


class WillmoreLabError(Exception):
    """Base class for all package-specific failures."""


class ValidationError(WillmoreLabError, ValueError):
    """Invalid user input (bad grid sizes, radii, configs)."""


class ImmersionDegenerate(WillmoreLabError):
    """The sampled map is not an immersion on the grid (det g too small)."""


class InversionSingularity(WillmoreLabError):
    """A point passed too close to a sphere-inversion center."""


class PoleSingularity(WillmoreLabError):
    """Stereographic projection evaluated at (or too close to) the pole."""


class FocalRadiusExceeded(WillmoreLabError):
    """Normal offset larger than the focal-radius safety bound."""


class NotInNeighborhood(WillmoreLabError):
    """Target surface is not a graph in the tubular neighborhood of the base."""


class NoConvergence(WillmoreLabError):
    """An iterative solver exhausted its iteration budget."""


class StepCollapse(WillmoreLabError):
    """Adaptive time step fell below the configured minimum."""
