"""Exception hierarchy.

Everything a caller can reasonably trigger with bad input derives from
``FolimError``; the CLI maps these to exit code 1 with a structured error.
"""

from __future__ import annotations


class FolimError(Exception):
    """Base class for domain errors."""

    kind = "domain_error"

    def to_dict(self) -> dict:
        return {"error": self.kind, "message": str(self)}


class StructureError(FolimError):
    """A structure file or value violates a structural invariant."""

    kind = "structure_error"


class FormulaSyntaxError(FolimError):
    kind = "syntax_error"

    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)

    def to_dict(self) -> dict:
        d = super().to_dict()
        if self.position is not None:
            d["position"] = self.position
        return d


class SignatureError(FolimError):
    """A formula or scheme mentions a symbol the signature lacks, or arities clash."""

    kind = "signature_error"


class EvaluationError(FolimError):
    kind = "evaluation_error"


class CapExceeded(FolimError):
    """An exhaustive computation would exceed its configured size cap."""

    kind = "cap_exceeded"


class SchemeError(FolimError):
    """An interpretation scheme is malformed or fails its side conditions."""

    kind = "scheme_error"

    def __init__(self, message: str, counterexample=None):
        self.counterexample = counterexample
        super().__init__(message)

    def to_dict(self) -> dict:
        d = super().to_dict()
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        return d
