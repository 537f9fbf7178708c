"""Package-impersonation detection over a snapshot's name universe.

Detectors emit :class:`SquatCandidate` pairs oriented suspect -> target by
popularity.  :func:`scan_all` merges them (a pair hit by several rules keeps
every rule tag) and classifies each as offensive or defensive.
"""

from __future__ import annotations

import datetime as dt
import itertools
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable

from .errors import AuditError, UnknownPackage
from .fuzzy import FuzzyIndex, build_name_index
from .snapshot import Snapshot, canonical_name

logger = logging.getLogger(__name__)

DEFAULT_WARNING_PHRASES = ("did you mean to install",)


class Rule(str, Enum):
    EDIT_DISTANCE = "EDIT_DISTANCE"
    WORD_REORDER = "WORD_REORDER"
    SEPARATOR_COLLAPSE = "SEPARATOR_COLLAPSE"
    VERSION_SUFFIX = "VERSION_SUFFIX"
    BUILTIN_SHADOW = "BUILTIN_SHADOW"


class Verdict(str, Enum):
    OFFENSIVE_SUSPECT = "OFFENSIVE_SUSPECT"
    DEFENSIVE = "DEFENSIVE"
    WARNING_STUB = "WARNING_STUB"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class SquatCandidate:
    suspect: str
    target: str
    rules: tuple[Rule, ...]
    distance: int = 0
    verdict: Verdict = Verdict.UNKNOWN

    @property
    def rule(self) -> Rule:
        return self.rules[0]

    @property
    def key(self) -> tuple[str, str]:
        return (self.suspect, self.target)


def load_reserved(path: str | Path | None = None) -> frozenset[str]:
    """Read a builtin-module list (one name per line, ``#`` comments)."""
    if path is None:
        text = resources.files("pkgaudit").joinpath("data/builtins.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    names = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            names.add(canonical_name(line))
        except AuditError:
            logger.warning("ignoring reserved name %r", line)
    return frozenset(names)


def _popularity(snap: Snapshot, name: str) -> tuple[int | None, dt.date]:
    rec = snap.packages.get(name)
    if rec is None:
        return None, dt.date.max
    return rec.downloads, rec.first_release_date or dt.date.max


def orient(a: str, b: str, snap: Snapshot) -> tuple[str, str]:
    """Return ``(suspect, target)``: the more popular name is the target.

    Strictly higher downloads wins; if downloads are equal or either side is
    missing them, the earlier first release wins; then the smaller name.
    """
    (da, fa), (db, fb) = _popularity(snap, a), _popularity(snap, b)
    if da is not None and db is not None and da != db:
        return (b, a) if da > db else (a, b)
    if fa != fb:
        return (b, a) if fa < fb else (a, b)
    return (b, a) if a < b else (a, b)


def find_typosquats(idx: FuzzyIndex, snap: Snapshot, max_d: int | None = None) -> list[SquatCandidate]:
    out = []
    for (a, b), dist in idx.all_pairs(max_d).items():
        if a not in snap or b not in snap:
            continue
        suspect, target = orient(a, b, snap)
        out.append(SquatCandidate(suspect, target, (Rule.EDIT_DISTANCE,), dist))
    return out


def _group_pairs(groups: Iterable[list[str]]) -> Iterable[tuple[str, str]]:
    for members in groups:
        if len(members) > 1:
            yield from itertools.combinations(sorted(members), 2)


def _suffix_reductions(name: str) -> set[str]:
    """Names obtained by dropping a '3' marker or turning a ``python3`` prefix into ``python``/``py``."""
    out = set()
    tokens = name.split("-")
    for i, tok in enumerate(tokens):
        if tok == "3" and len(tokens) > 1:
            out.add("-".join(tokens[:i] + tokens[i + 1 :]))
    if name.endswith("3") and len(name) > 1 and name[-2] != "-":
        out.add(name[:-1])
    if name.startswith("python3") and len(name) > len("python3"):
        rest = name[len("python3") :]
        out.add("python" + rest)
        out.add("py" + rest)
    out.discard(name)
    return {n for n in out if n and not n.startswith("-") and "--" not in n}


def detect_rename_variants(snap: Snapshot) -> list[SquatCandidate]:
    names = snap.names()
    found: set[tuple[Rule, str, str]] = set()

    by_tokens: dict[tuple[str, ...], list[str]] = defaultdict(list)
    by_collapsed: dict[str, list[str]] = defaultdict(list)
    for name in names:
        tokens = name.split("-")
        if len(tokens) > 1:
            by_tokens[tuple(sorted(tokens))].append(name)
        by_collapsed[name.replace("-", "")].append(name)
    for a, b in _group_pairs(by_tokens.values()):
        found.add((Rule.WORD_REORDER, a, b))
    for a, b in _group_pairs(by_collapsed.values()):
        found.add((Rule.SEPARATOR_COLLAPSE, a, b))

    for name in names:
        for reduced in _suffix_reductions(name):
            if reduced in snap:
                a, b = sorted((name, reduced))
                found.add((Rule.VERSION_SUFFIX, a, b))

    out = []
    for rule, a, b in sorted(found):
        suspect, target = orient(a, b, snap)
        out.append(SquatCandidate(suspect, target, (rule,)))
    return out


def detect_builtin_shadow(snap: Snapshot, reserved: Iterable[str]) -> list[SquatCandidate]:
    reserved_names = set()
    for r in reserved:
        try:
            reserved_names.add(canonical_name(r))
        except AuditError:
            continue
    return [
        SquatCandidate(name, name, (Rule.BUILTIN_SHADOW,))
        for name in snap.names()
        if name in reserved_names
    ]


def classify_candidate(
    c: SquatCandidate,
    snap: Snapshot,
    warning_phrases: Iterable[str] = DEFAULT_WARNING_PHRASES,
) -> SquatCandidate:
    """Fill in the verdict.

    Shared maintainer -> DEFENSIVE; warning phrase in the suspect's
    description or classifiers -> WARNING_STUB; missing maintainer data ->
    UNKNOWN; otherwise OFFENSIVE_SUSPECT.  A builtin shadow's target is a
    stdlib module, never a snapshot package, so it only gets the last three.
    """
    suspect = snap.packages.get(c.suspect)
    if suspect is None:
        raise UnknownPackage(c.suspect)
    builtin_only = c.rules == (Rule.BUILTIN_SHADOW,)
    target = None
    if not builtin_only:
        target = snap.packages.get(c.target)
        if target is None:
            raise UnknownPackage(c.target)

    if target is not None and suspect.maintainers & target.maintainers:
        verdict = Verdict.DEFENSIVE
    else:
        text = " ".join((suspect.description, *suspect.classifiers)).lower()
        if any(phrase.lower() in text for phrase in warning_phrases):
            verdict = Verdict.WARNING_STUB
        elif not suspect.maintainers or (target is not None and not target.maintainers):
            verdict = Verdict.UNKNOWN
        else:
            verdict = Verdict.OFFENSIVE_SUSPECT
    return replace(c, verdict=verdict)


@dataclass
class SquatConfig:
    max_distance: int = 3
    reserved: frozenset[str] | None = None
    warning_phrases: tuple[str, ...] = DEFAULT_WARNING_PHRASES


@dataclass
class SquatReport:
    candidates: list[SquatCandidate] = field(default_factory=list)

    @property
    def rule_counts(self) -> dict[str, int]:
        counts = Counter(r.value for c in self.candidates for r in c.rules)
        return {r.value: counts.get(r.value, 0) for r in Rule}

    @property
    def verdict_counts(self) -> dict[str, int]:
        counts = Counter(c.verdict.value for c in self.candidates)
        return {v.value: counts.get(v.value, 0) for v in Verdict}

    def has_offensive(self) -> bool:
        return any(c.verdict is Verdict.OFFENSIVE_SUSPECT for c in self.candidates)

    def rows(self, snap: Snapshot) -> list[dict[str, Any]]:
        """One flat row per (candidate, rule), matching the CSV layout."""
        rows = []
        for c in self.candidates:
            for rule in c.rules:
                rows.append(
                    {
                        "suspect": c.suspect,
                        "target": c.target,
                        "rule": rule.value,
                        "distance": c.distance if rule is Rule.EDIT_DISTANCE else 0,
                        "verdict": c.verdict.value,
                        "suspect_downloads": _downloads(snap, c.suspect),
                        "target_downloads": _downloads(snap, c.target),
                    }
                )
        return rows

    def to_dict(self, snap: Snapshot) -> dict[str, Any]:
        return {
            "candidates": [
                {
                    "suspect": c.suspect,
                    "target": c.target,
                    "rules": [r.value for r in c.rules],
                    "distance": c.distance,
                    "verdict": c.verdict.value,
                    "suspect_downloads": _downloads(snap, c.suspect),
                    "target_downloads": _downloads(snap, c.target),
                }
                for c in self.candidates
            ],
            "rule_counts": self.rule_counts,
            "verdict_counts": self.verdict_counts,
        }


CSV_COLUMNS = ("suspect", "target", "rule", "distance", "verdict", "suspect_downloads", "target_downloads")


def _downloads(snap: Snapshot, name: str) -> int | None:
    rec = snap.packages.get(name)
    return rec.downloads if rec else None


def scan_all(snap: Snapshot, config: SquatConfig | None = None) -> SquatReport:
    config = config or SquatConfig()
    reserved = config.reserved if config.reserved is not None else load_reserved()
    idx = build_name_index(snap.names(), config.max_distance)

    merged: dict[tuple[str, str], tuple[set[Rule], int]] = {}
    for c in itertools.chain(
        find_typosquats(idx, snap, config.max_distance),
        detect_rename_variants(snap),
        detect_builtin_shadow(snap, reserved),
    ):
        rules, dist = merged.get(c.key, (set(), 0))
        rules.add(c.rule)
        if c.rule is Rule.EDIT_DISTANCE:
            dist = c.distance
        merged[c.key] = (rules, dist)

    order = list(Rule)
    candidates = []
    for (suspect, target), (rules, dist) in sorted(merged.items()):
        cand = SquatCandidate(suspect, target, tuple(sorted(rules, key=order.index)), dist)
        candidates.append(classify_candidate(cand, snap, config.warning_phrases))
    return SquatReport(candidates)
