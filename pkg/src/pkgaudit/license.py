"""License normalization and dependency license-violation detection.

Licenses are placed on a restrictiveness scale; a package importing a
dependency with a strictly higher rank is a violation.  Every package that
reaches the violating importer inherits the violation.
"""

from __future__ import annotations

import json
import re
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .depgraph import DEFAULT_DEPTH, DepGraph
from .snapshot import PackageRecord, Snapshot


class LicenseId(str, Enum):
    PUBLIC_DOMAIN = "PUBLIC_DOMAIN"
    MIT = "MIT"
    BSD = "BSD"
    APACHE_2 = "APACHE_2"
    MPL_2 = "MPL_2"
    LGPL_2 = "LGPL_2"
    LGPL_3 = "LGPL_3"
    GPL_2 = "GPL_2"
    GPL_3 = "GPL_3"
    AGPL_3 = "AGPL_3"
    PROPRIETARY = "PROPRIETARY"
    UNKNOWN = "UNKNOWN"

    @property
    def rank(self) -> int | None:
        return RANKS.get(self)

    @property
    def label(self) -> str:
        return LABELS.get(self, self.value)


RANKS: dict[LicenseId, int] = {
    LicenseId.PUBLIC_DOMAIN: 0,
    LicenseId.MIT: 1,
    LicenseId.BSD: 1,
    LicenseId.APACHE_2: 2,
    LicenseId.MPL_2: 3,
    LicenseId.LGPL_2: 4,
    LicenseId.LGPL_3: 4,
    LicenseId.GPL_2: 5,
    LicenseId.GPL_3: 5,
    LicenseId.AGPL_3: 6,
}

LABELS = {
    LicenseId.PUBLIC_DOMAIN: "Public Domain",
    LicenseId.APACHE_2: "Apache 2.0",
    LicenseId.MPL_2: "MPL 2.0",
    LicenseId.LGPL_2: "LGPLv2",
    LicenseId.LGPL_3: "LGPLv3",
    LicenseId.GPL_2: "GPLv2",
    LicenseId.GPL_3: "GPLv3",
    LicenseId.AGPL_3: "AGPLv3",
}


class Compat(str, Enum):
    OK = "OK"
    VIOLATION = "VIOLATION"
    INDETERMINATE = "INDETERMINATE"


# Tier 1: whole-string aliases, compared after lowercasing and squeezing whitespace.
EXACT_ALIASES: dict[str, LicenseId] = {
    "mit": LicenseId.MIT,
    "mit license": LicenseId.MIT,
    "the mit license": LicenseId.MIT,
    "expat": LicenseId.MIT,
    "bsd": LicenseId.BSD,
    "bsd license": LicenseId.BSD,
    "new bsd": LicenseId.BSD,
    "new bsd license": LicenseId.BSD,
    "bsd-2-clause": LicenseId.BSD,
    "bsd-3-clause": LicenseId.BSD,
    "3-clause bsd": LicenseId.BSD,
    "simplified bsd": LicenseId.BSD,
    "apache": LicenseId.APACHE_2,
    "apache 2": LicenseId.APACHE_2,
    "apache 2.0": LicenseId.APACHE_2,
    "apache-2.0": LicenseId.APACHE_2,
    "apache license 2.0": LicenseId.APACHE_2,
    "apache license, version 2.0": LicenseId.APACHE_2,
    "asl 2.0": LicenseId.APACHE_2,
    "mpl": LicenseId.MPL_2,
    "mpl 2.0": LicenseId.MPL_2,
    "mpl-2.0": LicenseId.MPL_2,
    "lgpl": LicenseId.LGPL_3,
    "lgplv2": LicenseId.LGPL_2,
    "lgplv2+": LicenseId.LGPL_2,
    "lgpl-2.1": LicenseId.LGPL_2,
    "lgplv3": LicenseId.LGPL_3,
    "lgplv3+": LicenseId.LGPL_3,
    "lgpl-3.0": LicenseId.LGPL_3,
    "gpl": LicenseId.GPL_3,
    "gplv2": LicenseId.GPL_2,
    "gplv2+": LicenseId.GPL_2,
    "gpl-2.0": LicenseId.GPL_2,
    "gplv3": LicenseId.GPL_3,
    "gplv3+": LicenseId.GPL_3,
    "gpl-3.0": LicenseId.GPL_3,
    "gnu general public license v3": LicenseId.GPL_3,
    "gnu general public license v2": LicenseId.GPL_2,
    "agpl": LicenseId.AGPL_3,
    "agplv3": LicenseId.AGPL_3,
    "agpl-3.0": LicenseId.AGPL_3,
    "public domain": LicenseId.PUBLIC_DOMAIN,
    "unlicense": LicenseId.PUBLIC_DOMAIN,
    "the unlicense": LicenseId.PUBLIC_DOMAIN,
    "cc0": LicenseId.PUBLIC_DOMAIN,
    "cc0 1.0": LicenseId.PUBLIC_DOMAIN,
    "proprietary": LicenseId.PROPRIETARY,
    "commercial": LicenseId.PROPRIETARY,
    "all rights reserved": LicenseId.PROPRIETARY,
}

_V2 = r"(?:v(?:ersion)?\s*)?2"

# Tier 2: substring rules; when several match, the most restrictive wins.
SUBSTRING_RULES: list[tuple[re.Pattern[str], LicenseId]] = [
    (re.compile(r"affero|\bagpl"), LicenseId.AGPL_3),
    (re.compile(rf"(?:lesser|library) general public license\W*{_V2}|\blgpl\W*{_V2}"), LicenseId.LGPL_2),
    (re.compile(r"(?:lesser|library) general public license|\blgpl"), LicenseId.LGPL_3),
    (re.compile(rf"(?<!lesser )(?<!library )(?<!affero )general public license\W*{_V2}|(?<![la])gpl\W*{_V2}"), LicenseId.GPL_2),
    (re.compile(r"(?<!lesser )(?<!library )(?<!affero )general public license|(?<![la])gpl"), LicenseId.GPL_3),
    (re.compile(r"mozilla|\bmpl\b"), LicenseId.MPL_2),
    (re.compile(r"apache"), LicenseId.APACHE_2),
    (re.compile(r"\bbsd\b"), LicenseId.BSD),
    (re.compile(r"\bmit\b|\bexpat\b"), LicenseId.MIT),
    (re.compile(r"public domain|unlicense|\bcc0\b"), LicenseId.PUBLIC_DOMAIN),
    (re.compile(r"proprietary|all rights reserved"), LicenseId.PROPRIETARY),
]


def _squeeze(text: str) -> str:
    return " ".join(text.lower().split())


def normalize_license(freetext: str, aliases: Mapping[str, LicenseId] | None = None) -> LicenseId:
    """Map a free-text license field to a :class:`LicenseId` (UNKNOWN if nothing matches)."""
    key = _squeeze(freetext or "")
    if not key:
        return LicenseId.UNKNOWN
    if aliases and key in aliases:
        return aliases[key]
    if key in EXACT_ALIASES:
        return EXACT_ALIASES[key]
    hits = [lic for pattern, lic in SUBSTRING_RULES if pattern.search(key)]
    if not hits:
        return LicenseId.UNKNOWN
    ranked = [h for h in hits if h.rank is not None]
    if ranked:
        return max(ranked, key=lambda h: h.rank)
    return hits[0]


def load_aliases(path: str | Path) -> dict[str, LicenseId]:
    """Read a JSON object mapping alias strings to LicenseId names."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("license alias file must contain a JSON object")
    return {_squeeze(k): LicenseId(v) for k, v in raw.items()}


def package_license(rec: PackageRecord, aliases: Mapping[str, LicenseId] | None = None) -> LicenseId:
    """License from the free-text field, falling back to ``License ::`` classifiers."""
    lic = normalize_license(rec.license_text, aliases)
    if lic is not LicenseId.UNKNOWN:
        return lic
    hinted = [
        normalize_license(c.split("::")[-1], aliases)
        for c in rec.classifiers
        if c.strip().lower().startswith("license ::")
    ]
    ranked = [h for h in hinted if h.rank is not None]
    if ranked:
        return max(ranked, key=lambda h: h.rank)
    return next((h for h in hinted if h is not LicenseId.UNKNOWN), LicenseId.UNKNOWN)


def compatible(importer: LicenseId, dep: LicenseId) -> Compat:
    ri, rd = importer.rank, dep.rank
    if ri is None or rd is None:
        return Compat.INDETERMINATE
    return Compat.VIOLATION if rd > ri else Compat.OK


class Kind(str, Enum):
    DIRECT = "DIRECT"
    INHERITED = "INHERITED"


@dataclass(frozen=True)
class Violation:
    importer: str
    importer_license: LicenseId
    dependency: str
    dependency_license: LicenseId
    kind: Kind
    path: tuple[tuple[str, str], ...]

    @property
    def type_label(self) -> str:
        return f"{self.importer_license.label} importing {self.dependency_license.label}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "importer": self.importer,
            "importer_license": self.importer_license.value,
            "dependency": self.dependency,
            "dependency_license": self.dependency_license.value,
            "kind": self.kind.value,
            "path": [list(e) for e in self.path],
        }


def license_map(snap: Snapshot, aliases: Mapping[str, LicenseId] | None = None) -> dict[str, LicenseId]:
    return {name: package_license(rec, aliases) for name, rec in snap.packages.items()}


@dataclass
class LicenseReport:
    direct: list[Violation]
    inherited: list[Violation]
    indeterminate: int

    @property
    def violations(self) -> list[Violation]:
        return self.direct + self.inherited

    def table(self) -> list[tuple[str, int]]:
        return violation_table(self.direct)

    def to_dict(self) -> dict[str, Any]:
        return {
            "direct": [v.to_dict() for v in self.direct],
            "inherited": [v.to_dict() for v in self.inherited],
            "indeterminate": self.indeterminate,
            "table": [{"violation_type": t, "occurrences": n} for t, n in self.table()],
        }


def _edge_verdicts(g: DepGraph, licenses: Mapping[str, LicenseId]):
    for importer, dep in g.edges():
        li = licenses.get(importer, LicenseId.UNKNOWN)
        ld = licenses.get(dep, LicenseId.UNKNOWN)
        yield importer, li, dep, ld, compatible(li, ld)


def find_violations(
    g: DepGraph,
    snap: Snapshot,
    aliases: Mapping[str, LicenseId] | None = None,
) -> list[Violation]:
    """One DIRECT violation per graph edge whose licenses are incompatible."""
    licenses = license_map(snap, aliases)
    return [
        Violation(i, li, d, ld, Kind.DIRECT, ((i, d),))
        for i, li, d, ld, verdict in _edge_verdicts(g, licenses)
        if verdict is Compat.VIOLATION
    ]


def count_indeterminate(g: DepGraph, snap: Snapshot, aliases: Mapping[str, LicenseId] | None = None) -> int:
    licenses = license_map(snap, aliases)
    return sum(1 for *_, verdict in _edge_verdicts(g, licenses) if verdict is Compat.INDETERMINATE)


def violation_table(violations: Iterable[Violation]) -> list[tuple[str, int]]:
    """Occurrences per "X importing Y" type, most frequent first."""
    counts = Counter(v.type_label for v in violations)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _paths_to(g: DepGraph, target: str, depth: int | None) -> dict[str, list[str]]:
    """Shortest forward path from every package that reaches ``target``."""
    paths = {target: [target]}
    frontier = deque([target])
    while frontier:
        node = frontier.popleft()
        if depth is not None and len(paths[node]) - 1 >= depth:
            continue
        for up in sorted(g.reverse[node]):
            if up not in paths:
                paths[up] = [up] + paths[node]
                frontier.append(up)
    del paths[target]
    return paths


def transitive_violations(
    g: DepGraph,
    direct: Iterable[Violation],
    depth: int | None = DEFAULT_DEPTH,
    licenses: Mapping[str, LicenseId] | None = None,
) -> list[Violation]:
    """Propagate each DIRECT violation to every package that reaches its importer.

    Duplicates per (package, offending dependency) keep the shortest witness
    path, ties broken by the path itself.  ``licenses`` supplies the
    inheriting packages' own licenses for the report (UNKNOWN if omitted).
    """
    licenses = licenses or {}
    best: dict[tuple[str, str], Violation] = {}
    for v in sorted(direct, key=lambda v: (v.importer, v.dependency)):
        for pkg, nodes in _paths_to(g, v.importer, depth).items():
            if pkg == v.dependency:
                continue
            nodes = nodes + [v.dependency]
            path = tuple(zip(nodes, nodes[1:]))
            key = (pkg, v.dependency)
            current = best.get(key)
            if current is None or (len(path), path) < (len(current.path), current.path):
                best[key] = Violation(
                    pkg,
                    licenses.get(pkg, LicenseId.UNKNOWN),
                    v.dependency,
                    v.dependency_license,
                    Kind.INHERITED,
                    path,
                )
    return [best[k] for k in sorted(best)]


def check_licenses(
    g: DepGraph,
    snap: Snapshot,
    *,
    transitive: bool = False,
    depth: int | None = DEFAULT_DEPTH,
    aliases: Mapping[str, LicenseId] | None = None,
) -> LicenseReport:
    licenses = license_map(snap, aliases)
    direct = find_violations(g, snap, aliases)
    inherited = transitive_violations(g, direct, depth, licenses) if transitive else []
    return LicenseReport(direct, inherited, count_indeterminate(g, snap, aliases))
