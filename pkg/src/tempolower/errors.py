"""Error types shared across the package.

Parse and model errors carry a SourceSpan whenever one is known; the CLI
renders them as file:line:column diagnostics.
"""

from __future__ import annotations


class TempoLowerError(Exception):
    """Base class; span is a SourceSpan or None."""

    def __init__(self, message: str, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.span}: {self.message}"
        return self.message


class ParseError(TempoLowerError):
    pass


class ModelError(TempoLowerError):
    pass


class EvaluationError(TempoLowerError):
    pass


class InputError(TempoLowerError):
    """Bad tool input (malformed plan, missing file, wrong mode)."""
    pass
