"""Exception types shared across the package."""


class StaircaseError(Exception):
    """Base class for all package-specific errors."""


class DegenerateMatrix(StaircaseError):
    """Matrix data does not define a disk-preserving element (|a|^2 - |b|^2 <= 0)."""


class DegenerateTriple(StaircaseError):
    """A triple of circle points has (nearly) coincident entries."""


class OrientationMismatch(StaircaseError):
    """Source and target triples have opposite cyclic orientation."""


class ArityError(StaircaseError):
    """Operand arities are incompatible with the requested operation."""


class ArityMismatch(ArityError):
    """Cochain degrees do not line up (e.g. primitive vs cocycle)."""


class QuadratureOverflow(StaircaseError):
    """A quadrature node evaluation returned a non-finite value."""


class NonFiniteSample(StaircaseError):
    """A finite-difference stencil evaluation returned a non-finite value."""


class TailBudgetExceeded(StaircaseError):
    """Sampled integrand magnitude violates the truncation bound assumption."""


class IntegrabilityViolation(StaircaseError):
    """Strict-mode check: the compatibility condition residual is too large."""


class DegenerateLeadingTriple(StaircaseError):
    """The first three angles of a tuple are too close to define a basepoint."""


class DegreeTooSmall(StaircaseError):
    """The staircase construction requires cocycle degree n > 2."""


class ConfigError(StaircaseError):
    """Invalid run configuration (CLI exit code 2)."""
