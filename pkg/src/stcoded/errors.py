"""Exception types shared across the toolkit.

Everything raised on purpose by this package derives from StcodedError so
callers can catch one base class at the CLI boundary.
"""


class StcodedError(Exception):
    pass


# --- field / linear algebra ---

class InverseOfZero(StcodedError):
    """Multiplicative inverse of 0 requested."""


class EvenFieldDivision(StcodedError):
    """Division by 2 (or 4) requested over F_2."""


class ShapeMismatch(StcodedError):
    pass


class FieldMismatch(StcodedError):
    """Operands live over different prime fields."""


class SingularMatrix(StcodedError):
    pass


class NoSolution(StcodedError):
    """Inconsistent linear system."""


class DuplicatePoint(StcodedError):
    """Repeated interpolation node."""


# --- source mappings ---

class NoConsistentK(StcodedError):
    """Embedded-sum decoder received messages no input pair can produce."""


class InconsistentOffDiagonals(StcodedError):
    """Square-embedding cross-validation failed."""


class DivisibilityViolation(StcodedError):
    pass


class LengthMismatch(StcodedError):
    pass


class ScaleExceeded(StcodedError):
    """Enumeration or simulation size above the supported bound."""


class OutOfRange(StcodedError):
    pass


# --- coded computation ---

class UnknownScheme(StcodedError):
    pass


class DegenerateDenominator(StcodedError):
    pass


class SpecViolation(StcodedError):
    """Code parameters are structurally undecodable."""


class MalformedBundle(StcodedError):
    pass


class InsufficientOutputs(StcodedError):
    pass


class DuplicateEvaluationPoint(StcodedError):
    pass


class ConfigError(StcodedError):
    pass


class AsymmetryDetected(StcodedError):
    """A symmetric-product decoder was fed a provably asymmetric product."""
