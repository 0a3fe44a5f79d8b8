"""Exception hierarchy shared by all modules."""


class TodaForgeError(Exception):
    """Base class for every error raised by this package."""


class StructureError(TodaForgeError, ValueError):
    """Shape, order, index or count mismatch."""


class SingularityError(TodaForgeError, ArithmeticError):
    """Division by a jet with vanishing constant term, or similar."""

    def __init__(self, message, base_point=None):
        if base_point is not None:
            message = f"{message} (at base point {base_point!r})"
        super().__init__(message)
        self.base_point = base_point


class DomainError(TodaForgeError, ValueError):
    """A real-branch function was asked for a value outside its domain."""

    def __init__(self, message, base_point=None):
        if base_point is not None:
            message = f"{message} (at base point {base_point!r})"
        super().__init__(message)
        self.base_point = base_point


class ParseError(TodaForgeError, ValueError):
    def __init__(self, message, offset, expected=()):
        self.offset = offset
        self.expected = tuple(sorted(set(expected)))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += f"; expected one of: {', '.join(self.expected)}"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    pass


class EvalError(TodaForgeError, ValueError):
    """Evaluation failure carrying the offending subexpression."""

    def __init__(self, message, subexpr=None, at=None):
        self.subexpr = subexpr
        self.at = at
        parts = [message]
        if subexpr is not None:
            parts.append(f"in '{subexpr}'")
        if at is not None:
            parts.append(f"at t={at!r}")
        super().__init__(" ".join(parts))


class PreconditionError(TodaForgeError, ValueError):
    pass


class DegeneracyError(TodaForgeError, ArithmeticError):
    """Rank deficiency of a derivative frame at a sample point."""


class InconsistencyError(TodaForgeError, ArithmeticError):
    pass


class SingularPointError(TodaForgeError, ArithmeticError):
    """A tau value left the real branch needed for log/sqrt."""

    def __init__(self, x, y, index, message="nonpositive tau"):
        self.x, self.y, self.index = x, y, index
        super().__init__(f"{message}: index {index} at (x, y) = ({x!r}, {y!r})")


class ConfigError(TodaForgeError, ValueError):
    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
