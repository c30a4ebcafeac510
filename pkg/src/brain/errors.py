"""Exception hierarchy shared by all engine layers."""


class BrainError(Exception):
    """Base class for all engine errors."""


class ValidationError(BrainError):
    """Input failed a precondition (empty name, bad trust value, ...)."""


class NotFoundError(BrainError):
    """A handle, edge id or file does not resolve to a live object."""


class EdgeTypeError(BrainError):
    """Edge type is not present in the registry."""


class FeedError(ValidationError):
    """A feed file is malformed or violates feed invariants."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class StoreError(BrainError):
    """Log or snapshot level failure."""


class RqlSyntaxError(BrainError):
    """Parse failure with position information."""

    def __init__(self, message, line, col, expected=()):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(expected)


class RqlEvalError(BrainError):
    """Runtime failure while evaluating a query."""
