"""Registry snapshot model and loader.

A snapshot file holds one JSON object per line, one per package::

    {"name": "Django", "maintainers": ["a@b.org"], "license": "BSD",
     "downloads": 2000000, "classifiers": ["Framework :: Django"],
     "releases": [{"version": "1.8.9", "date": "2016-02-01",
                   "requires": ["pytz>=2015.7"]}]}

``description`` is accepted as an optional free-text field.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping

from .errors import (
    AuditError,
    DuplicatePackage,
    EmptyName,
    MalformedRecord,
    MalformedSpecifier,
    MalformedVersion,
)
from .versions import SpecifierSet, Version, parse_specifier, parse_version

logger = logging.getLogger(__name__)

_SEPARATORS = re.compile(r"[-_.]+")
_VALID_NAME = re.compile(r"^[a-z0-9]+(?:-[a-z0-9]+)*$")
_REQUIREMENT = re.compile(
    r"^\s*(?P<name>[A-Za-z0-9][A-Za-z0-9._-]*)\s*(?:\[[^\]]*\])?\s*(?P<spec>.*)$"
)

EPOCH = dt.date(1970, 1, 1)


class InvalidName(AuditError, ValueError):
    pass


def canonical_name(raw: str) -> str:
    """Lowercase ``raw`` and collapse each run of ``-``, ``_`` or ``.`` to one ``-``."""
    text = raw.strip().lower()
    text = _SEPARATORS.sub("-", text).strip("-")
    if not text:
        raise EmptyName(f"empty package name: {raw!r}")
    if not _VALID_NAME.match(text):
        raise InvalidName(f"invalid package name: {raw!r}")
    return text


def parse_requirement(text: str) -> tuple[str, SpecifierSet]:
    """Split ``"Name[extra] (>=1.0); marker"`` into a canonical name and specifier."""
    body = text.split(";", 1)[0]
    m = _REQUIREMENT.match(body)
    if not m:
        raise MalformedSpecifier(text, "no package name")
    spec = m.group("spec").strip()
    if spec.startswith("(") and spec.endswith(")"):
        spec = spec[1:-1]
    return canonical_name(m.group("name")), parse_specifier(spec)


@dataclass(frozen=True)
class ReleaseRecord:
    version: Version
    date: dt.date
    requires: tuple[tuple[str, SpecifierSet], ...] = ()

    @property
    def requires_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.requires)


@dataclass(frozen=True)
class PackageRecord:
    name: str
    maintainers: frozenset[str] = frozenset()
    license_text: str = ""
    releases: tuple[ReleaseRecord, ...] = ()
    downloads: int | None = None
    classifiers: tuple[str, ...] = ()
    description: str = ""

    @property
    def first_release_date(self) -> dt.date | None:
        return self.releases[0].date if self.releases else None

    @property
    def latest_release(self) -> ReleaseRecord | None:
        """Release with the highest version (not necessarily the newest date)."""
        if not self.releases:
            return None
        return max(self.releases, key=lambda r: (r.version, r.date))

    @property
    def dependencies(self) -> tuple[str, ...]:
        rel = self.latest_release
        return rel.requires_names if rel else ()


@dataclass
class LoadReport:
    loaded: int = 0
    skipped: list[tuple[int, str]] = field(default_factory=list)
    dangling: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "loaded": self.loaded,
            "skipped": [{"line": ln, "reason": r} for ln, r in self.skipped],
            "dangling": {k: list(v) for k, v in sorted(self.dangling.items())},
        }


@dataclass(frozen=True)
class Snapshot:
    packages: Mapping[str, PackageRecord]
    snapshot_date: dt.date
    report: LoadReport = field(default_factory=LoadReport, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.packages, MappingProxyType):
            object.__setattr__(self, "packages", MappingProxyType(dict(self.packages)))

    def __contains__(self, name: str) -> bool:
        return name in self.packages

    def __getitem__(self, name: str) -> PackageRecord:
        return self.packages[name]

    def __len__(self) -> int:
        return len(self.packages)

    def names(self) -> list[str]:
        return sorted(self.packages)

    @classmethod
    def from_records(
        cls,
        records: Iterable[Mapping[str, Any]],
        *,
        snapshot_date: dt.date | None = None,
        strict: bool = False,
    ) -> Snapshot:
        """Build a snapshot from already-decoded record dicts (1-based line numbers)."""
        return _build(enumerate(records, 1), snapshot_date=snapshot_date, strict=strict)


def _parse_date(value: Any, what: str) -> dt.date:
    if not isinstance(value, str):
        raise ValueError(f"{what} must be a YYYY-MM-DD string")
    return dt.date.fromisoformat(value)


def parse_record(obj: Mapping[str, Any]) -> PackageRecord:
    """Validate one decoded JSON object; raises ValueError subclasses on bad input."""
    if not isinstance(obj, Mapping):
        raise ValueError("record is not a JSON object")
    name_raw = obj.get("name")
    if not isinstance(name_raw, str):
        raise ValueError("missing or non-string 'name'")
    name = canonical_name(name_raw)

    maintainers_raw = obj.get("maintainers", [])
    if not isinstance(maintainers_raw, list) or not all(isinstance(m, str) for m in maintainers_raw):
        raise ValueError("'maintainers' must be a list of strings")
    maintainers = frozenset(m.strip().lower() for m in maintainers_raw if m.strip())

    license_text = obj.get("license") or ""
    if not isinstance(license_text, str):
        raise ValueError("'license' must be a string")

    downloads = obj.get("downloads")
    if downloads is not None and (
        isinstance(downloads, bool) or not isinstance(downloads, int) or downloads < 0
    ):
        raise ValueError("'downloads' must be a non-negative integer")

    classifiers = obj.get("classifiers", [])
    if not isinstance(classifiers, list) or not all(isinstance(c, str) for c in classifiers):
        raise ValueError("'classifiers' must be a list of strings")

    description = obj.get("description") or ""
    if not isinstance(description, str):
        raise ValueError("'description' must be a string")

    releases_raw = obj.get("releases", [])
    if not isinstance(releases_raw, list):
        raise ValueError("'releases' must be a list")
    releases = []
    for rel in releases_raw:
        if not isinstance(rel, Mapping):
            raise ValueError("release entries must be objects")
        version_raw = rel.get("version")
        if not isinstance(version_raw, str):
            raise ValueError("release without a version string")
        version = parse_version(version_raw)
        date = _parse_date(rel.get("date"), "release date")
        reqs_raw = rel.get("requires", [])
        if not isinstance(reqs_raw, list) or not all(isinstance(r, str) for r in reqs_raw):
            raise ValueError("'requires' must be a list of strings")
        merged: dict[str, SpecifierSet] = {}
        for req in reqs_raw:
            dep, spec = parse_requirement(req)
            if dep == name:
                continue
            merged[dep] = merged[dep] & spec if dep in merged else spec
        releases.append(ReleaseRecord(version, date, tuple(merged.items())))
    releases.sort(key=lambda r: (r.date, r.version))

    return PackageRecord(
        name=name,
        maintainers=maintainers,
        license_text=license_text,
        releases=tuple(releases),
        downloads=downloads,
        classifiers=tuple(classifiers),
        description=description,
    )


def _build(
    numbered: Iterable[tuple[int, Any]],
    *,
    snapshot_date: dt.date | None,
    strict: bool,
) -> Snapshot:
    report = LoadReport()
    packages: dict[str, PackageRecord] = {}
    for lineno, obj in numbered:
        try:
            rec = parse_record(obj)
        except (ValueError, MalformedVersion, MalformedSpecifier) as exc:
            if strict:
                raise MalformedRecord(lineno, str(exc)) from exc
            report.skipped.append((lineno, str(exc)))
            continue
        if rec.name in packages:
            if strict:
                raise DuplicatePackage(rec.name, lineno)
            report.skipped.append((lineno, f"duplicate package {rec.name!r}"))
            continue
        packages[rec.name] = rec

    for name, rec in packages.items():
        missing = tuple(sorted(d for d in rec.dependencies if d not in packages))
        if missing:
            report.dangling[name] = missing
    report.loaded = len(packages)
    if report.skipped:
        logger.warning("skipped %d malformed or duplicate records", len(report.skipped))

    if snapshot_date is None:
        dates = [r.date for rec in packages.values() for r in rec.releases]
        snapshot_date = max(dates, default=EPOCH)
    return Snapshot(packages, snapshot_date, report)


def _read_lines(path: Path, strict: bool, report_errors: list[tuple[int, str]]):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                if strict:
                    raise MalformedRecord(lineno, f"invalid JSON: {exc.msg}") from exc
                report_errors.append((lineno, f"invalid JSON: {exc.msg}"))


def load_snapshot(
    path: str | Path,
    *,
    strict: bool = False,
    snapshot_date: dt.date | None = None,
) -> Snapshot:
    """Load a newline-delimited snapshot file.

    Invalid or duplicate records are skipped and listed in ``snapshot.report``;
    with ``strict=True`` the first one raises instead.  ``snapshot_date``
    defaults to the newest release date in the file.
    """
    json_errors: list[tuple[int, str]] = []
    snap = _build(_read_lines(Path(path), strict, json_errors), snapshot_date=snapshot_date, strict=strict)
    if json_errors:
        snap.report.skipped[:0] = json_errors
        snap.report.skipped.sort()
    return snap


@dataclass
class YearlyStats:
    new_packages: dict[int, int] = field(default_factory=dict)
    new_maintainers: dict[int, int] = field(default_factory=dict)
    new_releases: dict[int, int] = field(default_factory=dict)

    @property
    def years(self) -> list[int]:
        return sorted(set(self.new_packages) | set(self.new_maintainers) | set(self.new_releases))

    def to_dict(self) -> dict[str, Any]:
        return {
            str(y): {
                "new_packages": self.new_packages.get(y, 0),
                "new_maintainers": self.new_maintainers.get(y, 0),
                "new_releases": self.new_releases.get(y, 0),
            }
            for y in self.years
        }


def ecosystem_stats(snap: Snapshot) -> YearlyStats:
    """Per-year growth: each package and maintainer counts once, at its earliest release."""
    packages: Counter[int] = Counter()
    releases: Counter[int] = Counter()
    maintainer_first: dict[str, dt.date] = {}
    for rec in snap.packages.values():
        if not rec.releases:
            continue
        first = rec.first_release_date
        packages[first.year] += 1
        for rel in rec.releases:
            releases[rel.date.year] += 1
        for m in rec.maintainers:
            if m not in maintainer_first or first < maintainer_first[m]:
                maintainer_first[m] = first
    maintainers = Counter(d.year for d in maintainer_first.values())
    return YearlyStats(dict(packages), dict(maintainers), dict(releases))


def classifier_breakdown(snap: Snapshot) -> dict[str, dict[str, dict[str, int]]]:
    """Package and download totals per ``Category :: Value`` classifier pair."""
    table: dict[str, dict[str, dict[str, int]]] = defaultdict(dict)
    for rec in snap.packages.values():
        seen = set()
        for classifier in rec.classifiers:
            parts = [p.strip() for p in classifier.split("::")]
            if len(parts) < 2 or (parts[0], parts[1]) in seen:
                continue
            seen.add((parts[0], parts[1]))
            cell = table[parts[0]].setdefault(parts[1], {"packages": 0, "downloads": 0})
            cell["packages"] += 1
            cell["downloads"] += rec.downloads or 0
    return {cat: dict(sorted(vals.items())) for cat, vals in sorted(table.items())}
