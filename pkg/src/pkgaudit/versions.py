"""Reduced version grammar and specifier matching.

Versions are ``N(.N)*`` optionally followed by an ``a``/``b``/``rc`` pre-release
tag with a number.  Epochs, post/dev releases and local labels are rejected.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field
from typing import Iterable

from .errors import MalformedSpecifier, MalformedVersion

PHASES = ("a", "b", "rc")
OPERATORS = ("==", "!=", "<=", ">=", "<", ">")

_VERSION_RE = re.compile(r"^(\d+(?:\.\d+)*)(?:(a|b|rc)(\d+))?$")
_CLAUSE_RE = re.compile(r"^(===|~=|==|!=|<=|>=|<|>)\s*(\S+)$")


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class Version:
    release: tuple[int, ...]
    pre: tuple[str, int] | None = None

    def __post_init__(self) -> None:
        if not self.release or any(n < 0 for n in self.release):
            raise MalformedVersion(repr(self.release))
        if self.pre is not None and self.pre[0] not in PHASES:
            raise MalformedVersion(str(self.pre))

    @property
    def sort_key(self) -> tuple:
        release = list(self.release)
        while len(release) > 1 and release[-1] == 0:
            release.pop()
        if self.pre is None:
            pre_key = (len(PHASES), 0)
        else:
            pre_key = (PHASES.index(self.pre[0]), self.pre[1])
        return (tuple(release), pre_key)

    def padded(self, width: int) -> tuple[int, ...]:
        return self.release + (0,) * max(0, width - len(self.release))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.sort_key == other.sort_key

    def __lt__(self, other: Version) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return _compare(self, other) < 0

    def __hash__(self) -> int:
        return hash(self.sort_key)

    def __str__(self) -> str:
        text = ".".join(str(n) for n in self.release)
        if self.pre is not None:
            text += f"{self.pre[0]}{self.pre[1]}"
        return text

    def __repr__(self) -> str:
        return f"Version('{self}')"


def _compare(a: Version, b: Version) -> int:
    width = max(len(a.release), len(b.release))
    ra, rb = a.padded(width), b.padded(width)
    if ra != rb:
        return -1 if ra < rb else 1
    ka, kb = a.sort_key[1], b.sort_key[1]
    if ka == kb:
        return 0
    return -1 if ka < kb else 1


def parse_version(text: str) -> Version:
    """Parse ``text`` into a :class:`Version`, accepting an optional leading ``v``."""
    raw = text
    text = text.strip().lower()
    if text.startswith("v"):
        text = text[1:]
    m = _VERSION_RE.match(text)
    if not m:
        raise MalformedVersion(raw)
    release = tuple(int(part) for part in m.group(1).split("."))
    pre = (m.group(2), int(m.group(3))) if m.group(2) else None
    return Version(release, pre)


@dataclass(frozen=True)
class Clause:
    op: str
    version: Version
    wildcard: bool = False

    def matches(self, v: Version) -> bool:
        if self.wildcard:
            prefix = self.version.release
            hit = v.padded(len(prefix))[: len(prefix)] == prefix
            return hit if self.op == "==" else not hit
        c = _compare(v, self.version)
        return {
            "==": c == 0,
            "!=": c != 0,
            "<": c < 0,
            "<=": c <= 0,
            ">": c > 0,
            ">=": c >= 0,
        }[self.op]

    def __str__(self) -> str:
        return f"{self.op}{self.version}{'.*' if self.wildcard else ''}"


@dataclass(frozen=True)
class SpecifierSet:
    """Conjunction of version clauses; no clauses matches every version."""

    clauses: tuple[Clause, ...] = field(default_factory=tuple)

    def __contains__(self, v: Version) -> bool:
        return version_matches(v, self)

    def __bool__(self) -> bool:
        return bool(self.clauses)

    def __and__(self, other: SpecifierSet) -> SpecifierSet:
        merged = list(self.clauses)
        merged.extend(c for c in other.clauses if c not in merged)
        return SpecifierSet(tuple(merged))

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.clauses)


def _parse_clause(text: str, whole: str) -> list[Clause]:
    m = _CLAUSE_RE.match(text)
    if not m:
        raise MalformedSpecifier(whole, f"bad clause {text!r}")
    op, ver = m.groups()
    if op == "===":
        raise MalformedSpecifier(whole, "arbitrary equality is not supported")
    wildcard = ver.endswith(".*")
    if wildcard:
        if op not in ("==", "!="):
            raise MalformedSpecifier(whole, f"wildcard not allowed with {op}")
        ver = ver[:-2]
    try:
        version = parse_version(ver)
    except MalformedVersion as exc:
        raise MalformedSpecifier(whole, str(exc)) from None
    if wildcard and version.pre is not None:
        raise MalformedSpecifier(whole, "wildcard on a pre-release")
    if op == "~=":
        # compatible release: >=X.Y.Z, ==X.Y.*
        if len(version.release) < 2:
            raise MalformedSpecifier(whole, "~= needs at least two segments")
        prefix = Version(version.release[:-1])
        return [Clause(">=", version), Clause("==", prefix, wildcard=True)]
    return [Clause(op, version, wildcard)]


def parse_specifier(text: str) -> SpecifierSet:
    """Parse a comma-separated clause list such as ``">=1.0,<2.0"``."""
    stripped = text.strip()
    if not stripped:
        return SpecifierSet()
    clauses: list[Clause] = []
    for part in stripped.split(","):
        part = part.strip()
        if not part:
            raise MalformedSpecifier(text, "empty clause")
        clauses.extend(_parse_clause(part, text))
    return SpecifierSet(tuple(clauses))


def version_matches(v: Version, s: SpecifierSet) -> bool:
    return all(c.matches(v) for c in s.clauses)


def latest(versions: Iterable[Version]) -> Version | None:
    return max(versions, default=None)
