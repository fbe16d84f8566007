class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ParseError(ValueError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class InvariantViolation(RuntimeError):
    """An internal consistency check failed. Always a bug."""


class DegenerateRefinement(Exception):
    """Refinement would produce classes that are too small or an oversized C0."""
