"""Exception types raised across the package."""


class SynsphereError(Exception):
    """Base class for all package errors."""


class InvalidConfig(SynsphereError, ValueError):
    """A configuration value violates a documented bound."""


class DegenerateGeodesic(SynsphereError, ValueError):
    """The geodesic direction toward the target is undefined (x0 = +/- r)."""


class TooFewSamples(SynsphereError, ValueError):
    pass


class OutsideDomain(SynsphereError, ValueError):
    """(x, y) = (r, r), where the potential is undefined."""


class LogicVarOutsideY(SynsphereError, ValueError):
    """The logic variable violates r^T y <= gamma."""


class NotInFlowSet(SynsphereError, ValueError):
    pass


class NotAJumpStart(SynsphereError, ValueError):
    pass


class NoBracket(SynsphereError, ValueError):
    """Event location was called without a sign change of the jump margin."""


class ZenoSuspected(SynsphereError, RuntimeError):
    pass


class NonFiniteState(SynsphereError, FloatingPointError):
    pass


class ZeroCommandedThrust(SynsphereError, ValueError):
    pass


class NotStabilizable(SynsphereError, ValueError):
    pass


class NoConvergence(SynsphereError, RuntimeError):
    pass


class Infeasible(SynsphereError, RuntimeError):
    """No gain in the search range satisfies the ellipsoid containments."""
