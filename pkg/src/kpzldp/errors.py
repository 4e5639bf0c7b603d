"""Exception hierarchy shared by all modules."""


class KPZError(Exception):
    """Base class for every error raised by kpzldp."""


class DomainError(KPZError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(DomainError):
    """A scenario or simulation configuration is invalid.

    ``field`` names the offending entry when one can be singled out.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class MalformedEnsembleError(DomainError):
    pass


class AmbiguityError(KPZError):
    """Raised when a query point sits on a shock and has two characteristic feet."""

    def __init__(self, message, feet):
        super().__init__(message)
        self.feet = tuple(feet)


class NumericalError(KPZError, ArithmeticError):
    """An iterative solve failed or produced non-finite values.

    ``diagnostics`` is a plain dict suitable for JSON output.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
