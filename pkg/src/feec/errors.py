class FeecError(ValueError):
    """Domain error raised by the library (bad input, violated precondition)."""


class ParseError(FeecError):
    """Ill-formed mesh, form or cochain document."""


class InvariantError(FeecError):
    """A computed quantity violated a certified invariant.

    ``diagnostics`` carries the offending data (plain JSON-able values) so
    callers can dump it for inspection.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
