"""Exception hierarchy shared by all rrpo modules."""


class RRPOError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(RRPOError, ValueError):
    pass


class NonpositivePrice(RRPOError, ValueError):
    pass


class EmptyInput(RRPOError, ValueError):
    pass


class CapExceeded(RRPOError):
    """An enumeration would exceed its configured cap.

    ``cardinality`` carries the exact size that was refused.
    """

    def __init__(self, what: str, cardinality: int, cap: int):
        super().__init__(f"{what}: cardinality {cardinality} exceeds cap {cap}")
        self.cardinality = cardinality
        self.cap = cap


class MethodFamilyMismatch(RRPOError, ValueError):
    pass


class NumericalFailure(RRPOError, ArithmeticError):
    pass


class IterationLimit(RRPOError):
    """Iteration budget exhausted; ``result`` holds the best bracket found so far."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ParseError(RRPOError, ValueError):
    """Malformed input file; ``field`` and ``line`` locate the problem when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


class SchemaVersionMismatch(ParseError):
    pass


class SupportMismatch(RRPOError, ValueError):
    pass


class InconsistentInputs(RRPOError, ValueError):
    pass
