"""Dependency and ownership graph with reach and implicit-trust metrics.

``forward[p]`` holds the packages ``p`` requires; ``reverse[p]`` holds the
packages requiring ``p``.  All traversals are breadth-first with a visited
set, so cycles are safe.  ``depth=None`` means unlimited.
"""

from __future__ import annotations

import datetime as dt
from collections import defaultdict, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import UnknownMaintainer, UnknownPackage
from .snapshot import Snapshot

DEFAULT_DEPTH = 5
MEMBERS_LIMIT = 10_000

METRICS = ("package_reach", "maintainer_reach", "itp", "itm")


@dataclass(frozen=True)
class DepGraph:
    forward: Mapping[str, frozenset[str]]
    reverse: Mapping[str, frozenset[str]]
    owners: Mapping[str, frozenset[str]]
    owned_by: Mapping[str, frozenset[str]]
    edge_dates: Mapping[tuple[str, str], dt.date] = field(default_factory=dict)
    first_release: Mapping[str, dt.date] = field(default_factory=dict)
    snapshot_date: dt.date | None = None
    dangling: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def nodes(self) -> list[str]:
        return sorted(self.forward)

    @property
    def maintainers(self) -> list[str]:
        return sorted(self.owners)

    def __contains__(self, name: str) -> bool:
        return name in self.forward

    def edges(self) -> list[tuple[str, str]]:
        return [(u, v) for u in sorted(self.forward) for v in sorted(self.forward[u])]

    @classmethod
    def from_edges(
        cls,
        nodes: Iterable[str],
        edges: Iterable[tuple[str, str]],
        owned_by: Mapping[str, Iterable[str]] | None = None,
    ) -> DepGraph:
        """Build a graph directly from an edge list (self-loops dropped)."""
        fwd: dict[str, set[str]] = {n: set() for n in nodes}
        for u, v in edges:
            fwd.setdefault(u, set())
            fwd.setdefault(v, set())
            if u != v:
                fwd[u].add(v)
        return _assemble(fwd, {p: set(ms) for p, ms in (owned_by or {}).items()})


def _assemble(
    fwd: dict[str, set[str]],
    owned: dict[str, set[str]],
    **extra,
) -> DepGraph:
    rev: dict[str, set[str]] = {n: set() for n in fwd}
    for u, vs in fwd.items():
        for v in vs:
            rev[v].add(u)
    owners: dict[str, set[str]] = defaultdict(set)
    for pkg, ms in owned.items():
        for m in ms:
            owners[m].add(pkg)
    return DepGraph(
        forward={k: frozenset(v) for k, v in fwd.items()},
        reverse={k: frozenset(v) for k, v in rev.items()},
        owners={k: frozenset(v) for k, v in owners.items()},
        owned_by={k: frozenset(v) for k, v in owned.items() if k in fwd},
        **extra,
    )


def build_graph(snap: Snapshot) -> DepGraph:
    """Name-level graph from each package's latest release.

    Edges to packages absent from the snapshot are left out and listed in
    ``graph.dangling``.  Each edge is dated by the earliest release of the
    dependent that already named the dependency.
    """
    fwd: dict[str, set[str]] = {name: set() for name in snap.packages}
    dangling: dict[str, tuple[str, ...]] = {}
    edge_dates: dict[tuple[str, str], dt.date] = {}
    first_release: dict[str, dt.date] = {}
    for name, rec in snap.packages.items():
        if rec.first_release_date is not None:
            first_release[name] = rec.first_release_date
        missing = []
        for dep in rec.dependencies:
            if dep == name:
                continue
            if dep in fwd:
                fwd[name].add(dep)
            else:
                missing.append(dep)
        if missing:
            dangling[name] = tuple(sorted(missing))
        for rel in rec.releases:  # sorted by date
            for dep in rel.requires_names:
                if dep in fwd[name] and (name, dep) not in edge_dates:
                    edge_dates[(name, dep)] = rel.date
    owned = {name: set(rec.maintainers) for name, rec in snap.packages.items()}
    return _assemble(
        fwd,
        owned,
        edge_dates=edge_dates,
        first_release=first_release,
        snapshot_date=snap.snapshot_date,
        dangling=dangling,
    )


def _bfs(adj: Mapping[str, frozenset[str]], start: str, depth: int | None, allowed=None) -> set[str]:
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        node, d = frontier.popleft()
        if depth is not None and d >= depth:
            continue
        for nxt in adj[node]:
            if nxt in seen or (allowed is not None and not allowed(node, nxt)):
                continue
            seen.add(nxt)
            frontier.append((nxt, d + 1))
    seen.discard(start)
    return seen


@dataclass(frozen=True)
class ReachResult:
    origin: str
    members: frozenset[str]
    depth_limit: int | None

    @property
    def size(self) -> int:
        return len(self.members)

    def to_dict(self, members_limit: int = MEMBERS_LIMIT) -> dict:
        out = {"origin": self.origin, "depth": self.depth_limit, "size": self.size}
        if self.size <= members_limit:
            out["members"] = sorted(self.members)
        return out


def _require(g: DepGraph, p: str) -> None:
    if p not in g.forward:
        raise UnknownPackage(p)


def package_reach(g: DepGraph, p: str, depth: int | None = DEFAULT_DEPTH) -> ReachResult:
    """Packages that require ``p`` directly or transitively, within ``depth`` hops."""
    _require(g, p)
    return ReachResult(p, frozenset(_bfs(g.reverse, p, depth)), depth)


def maintainer_reach(g: DepGraph, m: str, depth: int | None = DEFAULT_DEPTH) -> ReachResult:
    """Union of the maintainer's packages and their reach, minus the maintainer's own packages."""
    key = m.strip().lower()
    own = g.owners.get(key)
    if not own:
        raise UnknownMaintainer(m)
    members: set[str] = set()
    for pkg in own:
        members.add(pkg)
        members |= _bfs(g.reverse, pkg, depth)
    return ReachResult(key, frozenset(members - own), depth)


def implicit_trust_packages(g: DepGraph, p: str, depth: int | None = DEFAULT_DEPTH) -> frozenset[str]:
    """Packages ``p`` pulls in at install time (distinct nodes reachable downstream)."""
    _require(g, p)
    return frozenset(_bfs(g.forward, p, depth))


def implicit_trust_maintainers(g: DepGraph, p: str, depth: int | None = DEFAULT_DEPTH) -> frozenset[str]:
    itp = implicit_trust_packages(g, p, depth)
    trusted: set[str] = set()
    for pkg in itp | {p}:
        trusted |= g.owned_by.get(pkg, frozenset())
    return frozenset(trusted - g.owned_by.get(p, frozenset()))


def reach_series(g: DepGraph, p: str, depth: int | None = DEFAULT_DEPTH) -> dict[int, int]:
    """Package reach of ``p`` at the end of each year from its first release to the snapshot year.

    Only edges and packages that existed by December 31 of a year take part in
    that year's traversal; edges are never removed once they appear.
    """
    _require(g, p)
    start = g.first_release.get(p)
    if start is None or g.snapshot_date is None:
        return {}
    series = {}
    for year in range(start.year, g.snapshot_date.year + 1):
        cutoff = dt.date(year, 12, 31)

        def allowed(node: str, nxt: str, cutoff=cutoff) -> bool:
            born = g.first_release.get(nxt)
            edge = g.edge_dates.get((nxt, node))
            return born is not None and born <= cutoff and edge is not None and edge <= cutoff

        series[year] = len(_bfs(g.reverse, p, depth, allowed))
    return series


def metric_size(g: DepGraph, metric: str, key: str, depth: int | None = DEFAULT_DEPTH) -> int:
    if metric == "package_reach":
        return package_reach(g, key, depth).size
    if metric == "maintainer_reach":
        return maintainer_reach(g, key, depth).size
    if metric == "itp":
        return len(implicit_trust_packages(g, key, depth))
    if metric == "itm":
        return len(implicit_trust_maintainers(g, key, depth))
    raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")


def top_k(
    g: DepGraph,
    metric: str,
    k: int,
    depth: int | None = DEFAULT_DEPTH,
    workers: int | None = None,
) -> list[tuple[str, int]]:
    """Rank keys by metric size, descending; ties broken by key."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(METRICS)}")
    keys = g.maintainers if metric == "maintainer_reach" else g.nodes
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sizes = list(pool.map(lambda key: metric_size(g, metric, key, depth), keys))
    else:
        sizes = [metric_size(g, metric, key, depth) for key in keys]
    ranked = sorted(zip(keys, sizes), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]
