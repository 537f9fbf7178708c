"""Exception types raised by the audit library."""

from __future__ import annotations


class AuditError(Exception):
    """Base class for all library errors."""


class EmptyName(AuditError, ValueError):
    pass


class MalformedVersion(AuditError, ValueError):
    def __init__(self, text: str):
        super().__init__(f"malformed version: {text!r}")
        self.text = text


class MalformedSpecifier(AuditError, ValueError):
    def __init__(self, text: str, reason: str = ""):
        msg = f"malformed specifier: {text!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.text = text


class MalformedRecord(AuditError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicatePackage(AuditError, ValueError):
    def __init__(self, name: str, line: int):
        super().__init__(f"line {line}: duplicate package {name!r}")
        self.name = name
        self.line = line


class UnknownPackage(AuditError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown package: {self.name!r}"


class UnknownMaintainer(AuditError, KeyError):
    def __init__(self, email: str):
        super().__init__(email)
        self.email = email

    def __str__(self) -> str:
        return f"unknown maintainer: {self.email!r}"


class NotADependent(AuditError, ValueError):
    pass


class NoFixDate(AuditError, ValueError):
    pass
