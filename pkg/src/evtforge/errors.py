"""Exception types shared across the package."""


class EvtForgeError(Exception):
    pass


class ParseError(EvtForgeError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{line}:{col}: {message}"
        super().__init__(message)


class SortError(EvtForgeError):
    """Structural error: ill-sorted term/formula, unknown symbol, bad morphism."""


class SpecError(EvtForgeError):
    """Semantic error at the specification level (environments, imports, refinements)."""


class EnumerationLimit(EvtForgeError):
    """A bounded enumeration would exceed the configured ceiling."""
