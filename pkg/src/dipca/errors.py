"""Exception types raised across the package."""


class DipcaError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(DipcaError, ValueError):
    """Malformed input file (message carries the offending line number)."""


class DegenerateDirectionError(DipcaError, ArithmeticError):
    """The weight vector is annihilated by every kernel quadratic form (|c| ~ 0)."""


class ZeroDirectionError(DipcaError, ArithmeticError):
    """A power step produced a numerically zero direction (|d| ~ 0)."""


class ZeroScoreError(DipcaError, ArithmeticError):
    """Score vector too small to deflate against (t.t below threshold)."""


class NotAFixedPointError(DipcaError, ValueError):
    """Second-order classification requested away from the stationary set."""


class RankDeficiencyError(DipcaError, ValueError):
    """Constraint Jacobian lost full row rank; no null-space basis."""


class OracleSizeError(DipcaError, ValueError):
    """Brute-force oracle called beyond its tiny-instance size guard."""


class ARStabilityError(DipcaError, RuntimeError):
    """Rejection sampling failed to draw a stable AR coefficient vector."""
