"""Exception hierarchy. Every error carries a stable diagnostic code for the CLI."""

from __future__ import annotations


class PPLError(Exception):
    code = "E_INTERNAL"

    def __init__(self, message: str, line: int = 0, col: int = 0, code: str | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        if code is not None:
            self.code = code

    def __str__(self) -> str:
        if self.line:
            return f"{self.line}:{self.col}: {self.message}"
        return self.message


class ParseError(PPLError):
    code = "E_SYNTAX"


class UnknownDistribution(ParseError):
    code = "E_DIST"


class DuplicateModel(ParseError):
    code = "E_DUP"


class EmptyProgram(ParseError):
    code = "E_EMPTY"


class ValidationError(PPLError):
    """Raised by `validate`; `code` distinguishes the failing invariant."""

    code = "E_VALIDATE"


class TranslationError(PPLError):
    code = "E_TRANSLATE"


class DomainError(PPLError, ValueError):
    code = "E_DOMAIN"


class ShapeMismatch(PPLError, ValueError):
    code = "E_SHAPE"


class StreamExhausted(PPLError):
    code = "E_STREAM"


class NonFiniteSupport(PPLError):
    code = "E_NONFINITE"


class UnsupportedStructure(PPLError):
    code = "E_UNSUPPORTED"


class UnwhitelistedPrimitive(PPLError):
    code = "E_CERT"

    def __init__(self, name: str):
        super().__init__(f"primitive `{name}` has no measurability lemma")
        self.name = name


class EventSyntaxError(PPLError):
    code = "E_EVENT"
