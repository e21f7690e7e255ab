"""Exception types shared by every module."""

from __future__ import annotations


class DomainError(Exception):
    """Base class for all workbench errors."""


class ValidationError(DomainError):
    """A structure failed one of its defining conditions.

    ``kind`` is a short machine-readable tag and ``witness`` carries whatever
    evidence the check found (a pair, a subset, a list of violations).
    """

    def __init__(self, kind: str, message: str, witness=None):
        super().__init__(message)
        self.kind = kind
        self.witness = witness


class UnknownToken(DomainError, KeyError):
    def __init__(self, token, basis_name: str = ""):
        where = f" in basis {basis_name!r}" if basis_name else ""
        super().__init__(f"unknown token {token!r}{where}")
        self.token = token

    def __str__(self) -> str:
        return self.args[0]


class InconsistentError(DomainError):
    """A set of tokens (or ideals) has no upper bound."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class GuardExceeded(DomainError):
    """An exhaustive search was refused because the input is too large."""


class BasisMismatch(DomainError):
    pass


class TypeCheckError(DomainError):
    def __init__(self, message: str, path: tuple = ()):
        loc = "/".join(str(p) for p in path) or "<root>"
        super().__init__(f"{message} at {loc}")
        self.path = path


class ParseError(DomainError):
    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


class TruncationError(DomainError):
    """A construction needs trees deeper than the truncation allows."""

    def __init__(self, message: str, required_depth: int):
        super().__init__(f"{message}; requires depth {required_depth}")
        self.required_depth = required_depth
