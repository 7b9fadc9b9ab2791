"""Error types and the violation record shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Violation:
    """One machine-readable rule violation found in a document.

    Attributes:
        code: stable identifier for the rule that was broken.
        message: human-readable explanation.
        location: where in the document the problem sits, as a slash path.
    """

    code: str
    message: str
    location: str = ""

    def __str__(self) -> str:
        loc = f" at {self.location}" if self.location else ""
        return f"[{self.code}]{loc} {self.message}"

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "location": self.location}


class FedkgError(Exception):
    """Base class for all errors raised by this package."""


class TemplateSyntax(FedkgError):
    """A request template string could not be parsed."""

    def __init__(self, position: int, reason: str):
        super().__init__(f"template syntax error at offset {position}: {reason}")
        self.position = position
        self.reason = reason


class DocumentInvalid(FedkgError):
    """An annotation document violates the documented rules."""

    def __init__(self, api_id: str, violations: list[Violation]):
        summary = "; ".join(str(v) for v in violations) or "no detail"
        super().__init__(f"annotation document {api_id!r} invalid: {summary}")
        self.api_id = api_id
        self.violations = list(violations)


class QuerySyntax(FedkgError):
    """A query document is structurally malformed."""

    def __init__(self, path: str, reason: str):
        super().__init__(f"query syntax error at {path or '<root>'}: {reason}")
        self.path = path
        self.reason = reason


class QueryInvalid(FedkgError):
    """A well-formed query graph breaks a semantic rule."""

    def __init__(self, violations: list[Violation]):
        summary = "; ".join(str(v) for v in violations) or "no detail"
        super().__init__(f"query invalid: {summary}")
        self.violations = list(violations)


class UnknownType(FedkgError):
    """A constraint names a semantic type outside the vocabulary."""

    def __init__(self, name: str):
        super().__init__(f"unknown semantic type: {name!r}")
        self.name = name


class HierarchyInvalid(FedkgError):
    """The type hierarchy is not a forest."""


class ScenarioInvalid(FedkgError):
    """A simulated-network scenario document is malformed."""


class ResolverUnavailable(FedkgError):
    """The identifier resolution provider failed to answer."""


class MalformedResponse(FedkgError):
    """An API response body is not a structured document."""


class NoUsableInputs(FedkgError):
    """No input entity carries an alias in the namespace an operation needs."""


class DomainError(FedkgError):
    """Numeric inputs violate the preconditions of a formula."""


class TransportTimeout(FedkgError):
    """A request did not complete within its deadline."""


class TransportError(FedkgError):
    """A request failed below the HTTP layer."""


class ConfigError(FedkgError):
    """Engine configuration is incomplete or inconsistent."""
