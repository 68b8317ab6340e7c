"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class CineforgeError(Exception):
    """Base class for all pipeline errors."""


class ParseError(CineforgeError):
    """Raised when a descriptor document cannot be turned into typed data."""


class DescriptorSyntaxError(ParseError):
    """Malformed structured text (not decodable or not valid JSON)."""


class SchemaError(ParseError):
    """Missing field or value of the wrong kind."""


class EnumError(ParseError):
    """Unknown enum token in strict mode."""


class IntervalError(ParseError):
    """Segment with negative start or end <= start."""


class ValidationFailure(CineforgeError):
    """Strict validation found rule violations."""

    def __init__(self, report):
        self.report = report
        lines = "; ".join(v.message for v in report.violations)
        super().__init__(f"{len(report.violations)} violation(s): {lines}")


class ProviderError(CineforgeError):
    """A generation or analysis provider failed (transport, HTTP, IO)."""

    def __init__(self, message: str, *, kind: str = "transport", attempts: int = 1):
        super().__init__(message)
        self.kind = kind
        self.attempts = attempts


class DurationMismatch(CineforgeError):
    pass


class OutOfRange(CineforgeError):
    pass


class MissingFloor(CineforgeError):
    pass


class NotASurface(CineforgeError):
    pass


class UnresolvableMesh(CineforgeError):
    pass


class ZoneEmpty(CineforgeError):
    pass


class MissingAnchor(CineforgeError):
    pass


class NonPositiveSize(CineforgeError, ValueError):
    pass


class EmptyKeywords(CineforgeError, ValueError):
    pass
