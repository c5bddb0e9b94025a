"""Exception types.  Each subclasses the builtin it most resembles."""


class UrnError(Exception):
    """Base class for every error raised by this package."""


class OutOfRange(UrnError, ValueError):
    def __init__(self, field, message=None):
        self.field = field
        super().__init__(message or f"{field} out of range")


class TheoremPreconditionViolated(UrnError, ValueError):
    pass


class DomainError(UrnError, ValueError):
    pass


class InvalidCheckpoints(UrnError, ValueError):
    pass


class CapExceeded(UrnError, ValueError):
    pass


class DivergenceDetected(UrnError, ArithmeticError):
    pass


class GridError(UrnError, ValueError):
    pass


class CltConditionViolated(TheoremPreconditionViolated):
    pass


class LilConditionViolated(TheoremPreconditionViolated):
    pass


class InsufficientExceedances(UrnError, RuntimeError):
    pass


class ParseError(UrnError, ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class ValidationError(UrnError, ValueError):
    pass
