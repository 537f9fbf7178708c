"""Vulnerability advisories joined against a snapshot and its dependency graph.

Advisory file: one JSON object per line::

    {"id": "SA-1", "package": "django", "affected": "<1.8.10",
     "cves": ["CVE-2016-2512"], "severity": 6.1,
     "published": "2016-02-01", "fixed": "2016-03-01"}

``severity`` and ``fixed`` are optional.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import statistics
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable

from .depgraph import DEFAULT_DEPTH, DepGraph, package_reach
from .errors import (
    AuditError,
    MalformedRecord,
    NoFixDate,
    NotADependent,
    UnknownPackage,
)
from .snapshot import Snapshot, canonical_name
from .versions import SpecifierSet, Version, parse_specifier

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Advisory:
    id: str
    package: str
    affected: SpecifierSet
    published: dt.date
    cves: tuple[str, ...] = ()
    severity: float | None = None
    fixed: dt.date | None = None
    in_snapshot: bool | None = None

    def __post_init__(self) -> None:
        if self.fixed is not None and self.fixed < self.published:
            raise ValueError(f"advisory {self.id}: fixed date precedes published date")
        if self.severity is not None and not 0 <= self.severity <= 10:
            raise ValueError(f"advisory {self.id}: severity outside [0, 10]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "package": self.package,
            "affected": str(self.affected),
            "cves": list(self.cves),
            "severity": self.severity,
            "published": self.published.isoformat(),
            "fixed": self.fixed.isoformat() if self.fixed else None,
        }


def parse_advisory(obj: Any) -> Advisory:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in ("id", "package", "published"):
        if not isinstance(obj.get(key), str):
            raise ValueError(f"missing or non-string {key!r}")
    affected = obj.get("affected", "")
    if not isinstance(affected, str):
        raise ValueError("'affected' must be a specifier string")
    cves = obj.get("cves", [])
    if not isinstance(cves, list) or not all(isinstance(c, str) for c in cves):
        raise ValueError("'cves' must be a list of strings")
    severity = obj.get("severity")
    if severity is not None and (isinstance(severity, bool) or not isinstance(severity, (int, float))):
        raise ValueError("'severity' must be a number")
    fixed = obj.get("fixed")
    if fixed is not None and not isinstance(fixed, str):
        raise ValueError("'fixed' must be a YYYY-MM-DD string")
    return Advisory(
        id=obj["id"],
        package=canonical_name(obj["package"]),
        affected=parse_specifier(affected),
        published=dt.date.fromisoformat(obj["published"]),
        cves=tuple(cves),
        severity=float(severity) if severity is not None else None,
        fixed=dt.date.fromisoformat(fixed) if fixed else None,
    )


def load_advisories(path: str | Path, snapshot: Snapshot | None = None) -> list[Advisory]:
    """Parse an advisory file; any bad line raises :class:`MalformedRecord`.

    With a snapshot, advisories on packages it lacks are kept with
    ``in_snapshot=False``.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                adv = parse_advisory(json.loads(line))
            except (ValueError, AuditError) as exc:
                raise MalformedRecord(lineno, str(exc)) from exc
            if snapshot is not None:
                known = adv.package in snapshot
                if not known:
                    logger.warning("advisory %s names unknown package %r", adv.id, adv.package)
                adv = replace(adv, in_snapshot=known)
            out.append(adv)
    return out


def affected_releases(snap: Snapshot, a: Advisory) -> list[tuple[Version, dt.date]]:
    rec = snap.packages.get(a.package)
    if rec is None:
        raise UnknownPackage(a.package)
    return [(r.version, r.date) for r in rec.releases if r.version in a.affected]


@dataclass(frozen=True)
class ExposureRecord:
    advisory_id: str
    package: str
    exposed: frozenset[str]
    depth: int | None

    def by_domain(self, g: DepGraph) -> dict[str, int]:
        """Exposed packages per maintainer email domain (a package counts once per domain)."""
        counts: dict[str, set[str]] = defaultdict(set)
        for pkg in self.exposed:
            for email in g.owned_by.get(pkg, ()):
                domain = email.rsplit("@", 1)[-1] if "@" in email else email
                counts[domain].add(pkg)
        return dict(sorted(((d, len(p)) for d, p in counts.items()), key=lambda kv: (-kv[1], kv[0])))

    def to_dict(self, g: DepGraph | None = None) -> dict[str, Any]:
        out: dict[str, Any] = {
            "advisory": self.advisory_id,
            "package": self.package,
            "depth": self.depth,
            "size": len(self.exposed),
            "exposed": sorted(self.exposed),
        }
        if g is not None:
            out["by_domain"] = self.by_domain(g)
        return out


def exposure_set(g: DepGraph, a: Advisory, depth: int | None = DEFAULT_DEPTH) -> ExposureRecord:
    reach = package_reach(g, a.package, depth)
    return ExposureRecord(a.id, a.package, reach.members, depth)


def patch_lag(snap: Snapshot, a: Advisory, dependent: str) -> int | None:
    """Days from the fix to the dependent's first release strictly after it.

    ``dependent`` must name ``a.package`` in at least one of its releases.
    Returns None when the dependent has not released since the fix.
    """
    if a.fixed is None:
        raise NoFixDate(f"advisory {a.id} has no fix date")
    rec = snap.packages.get(dependent)
    if rec is None:
        raise UnknownPackage(dependent)
    if not any(a.package in rel.requires_names for rel in rec.releases):
        raise NotADependent(f"{dependent!r} does not depend on {a.package!r}")
    for rel in rec.releases:
        if rel.date > a.fixed:
            return (rel.date - a.fixed).days
    return None


@dataclass(frozen=True)
class LagSummary:
    advisory_id: str
    lags: dict[str, int | None]

    @property
    def patched(self) -> dict[str, int]:
        return {k: v for k, v in self.lags.items() if v is not None}

    @property
    def unpatched(self) -> list[str]:
        return sorted(k for k, v in self.lags.items() if v is None)

    @property
    def mean_days(self) -> float | None:
        values = list(self.patched.values())
        return statistics.fmean(values) if values else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "advisory": self.advisory_id,
            "dependents": len(self.lags),
            "patched": len(self.patched),
            "unpatched": len(self.unpatched),
            "mean_lag_days": self.mean_days,
            "lags": dict(sorted(self.lags.items())),
        }


def lag_summary(snap: Snapshot, a: Advisory) -> LagSummary:
    """Patch lag for every direct dependent; the mean skips still-unpatched ones."""
    if a.fixed is None:
        raise NoFixDate(f"advisory {a.id} has no fix date")
    if a.package not in snap:
        raise UnknownPackage(a.package)
    dependents = sorted(
        name
        for name, rec in snap.packages.items()
        if any(a.package in rel.requires_names for rel in rec.releases)
    )
    return LagSummary(a.id, {d: patch_lag(snap, a, d) for d in dependents})


@dataclass(frozen=True)
class TimelineRow:
    advisory: str
    published: dt.date
    fixed: dt.date | None
    severity: float | None
    open_window_days: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "advisory": self.advisory,
            "published": self.published.isoformat(),
            "fixed": self.fixed.isoformat() if self.fixed else None,
            "severity": self.severity,
            "open_window_days": self.open_window_days,
        }


def attack_window(a: Advisory, snapshot_date: dt.date) -> int:
    """Days the advisory stayed open: until its fix, or until the snapshot if unfixed.

    An unfixed advisory published after the snapshot date counts as 0.
    """
    end = a.fixed if a.fixed is not None else snapshot_date
    return max(0, (end - a.published).days)


def vulnerability_timeline(snap: Snapshot, advisories: Iterable[Advisory], p: str) -> list[TimelineRow]:
    """One row per advisory on ``p``; unfixed ones stay open until the snapshot date."""
    if p not in snap:
        raise UnknownPackage(p)
    rows = []
    for a in sorted((a for a in advisories if a.package == p), key=lambda a: (a.published, a.id)):
        rows.append(TimelineRow(a.id, a.published, a.fixed, a.severity, attack_window(a, snap.snapshot_date)))
    return rows
