"""Exception hierarchy.

All errors raised deliberately by the package derive from :class:`JSpecError`
so callers (and the CLI) can map them to exit codes.
"""


class JSpecError(Exception):
    """Base class for package errors."""


class StructuralError(JSpecError, ValueError):
    """Inputs have incompatible shapes or sizes."""


class ValidationError(JSpecError, ValueError):
    """Inputs are well formed but violate a mathematical precondition."""


class DomainError(JSpecError, ValueError):
    """An argument lies outside the domain of the operation."""


class BoundedSemigroupError(ValidationError):
    """The tuple does not generate a bounded semigroup."""


class ConvergenceError(JSpecError, RuntimeError):
    """A numerical procedure failed to reach its target accuracy."""


class MeasureOverflowError(ConvergenceError):
    """A convolution power exceeded the atom budget."""
