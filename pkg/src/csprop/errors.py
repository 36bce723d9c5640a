"""Exception hierarchy for csprop."""


class CSPropError(Exception):
    """Base class for all library errors."""


class IntegratorFailure(CSPropError):
    """Raised when a trajectory integration produces non-finite values."""


class CausticDivergence(CSPropError):
    """Raised when |M_vv| falls below the caustic threshold."""


class NoRealTrajectory(CSPropError):
    """Raised when a mixed boundary problem has no real solution in the scan window."""


class NewtonDivergence(CSPropError):
    """Raised when the complex root search fails to converge."""


class TruncationInsufficient(CSPropError):
    """Raised when a Fock-space truncation cannot meet its tail bound."""


class ConfigError(CSPropError):
    """Raised for invalid sweep configurations."""


class WindowEmpty(CSPropError):
    """Raised when a comparison window contains no shared grid points."""
