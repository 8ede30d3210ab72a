"""Exception types shared across the package.

The CLI maps these onto exit codes: schema problems -> 2, numerical
tolerance failures -> 3, resource guard -> 4.
"""


class DwellError(Exception):
    """Base class for package errors."""


class DomainError(DwellError, ValueError):
    """Input outside the physically meaningful domain."""


class SchemaError(DwellError, ValueError):
    """Config document does not validate against the published schema."""


class ToleranceError(DwellError, RuntimeError):
    """A numerical invariant (norm, energy, positivity, ...) was violated."""


class ResourceGuardError(DwellError, RuntimeError):
    """Requested run exceeds the configured memory/work ceiling."""
