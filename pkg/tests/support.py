"""Builders and independent oracles shared by the test modules."""

from __future__ import annotations

import random
from typing import Iterable, Mapping

import numpy as np

from pkgaudit.depgraph import DepGraph
from pkgaudit.snapshot import Snapshot


def record(
    name: str,
    requires: Iterable[str] = (),
    *,
    maintainers: Iterable[str] = ("owner@example.org",),
    license: str = "MIT",
    downloads: int | None = None,
    date: str = "2018-01-01",
    version: str = "1.0",
    description: str = "",
    classifiers: Iterable[str] = (),
) -> dict:
    return {
        "name": name,
        "maintainers": list(maintainers),
        "license": license,
        "downloads": downloads,
        "classifiers": list(classifiers),
        "description": description,
        "releases": [{"version": version, "date": date, "requires": list(requires)}],
    }


def snapshot_of(records: Iterable[dict], **kw) -> Snapshot:
    return Snapshot.from_records(list(records), **kw)


def random_graph(rng: random.Random, n: int, density: float, maintainers: int = 6) -> DepGraph:
    nodes = [f"p{i}" for i in range(n)]
    edges = [(u, v) for u in nodes for v in nodes if u != v and rng.random() < density]
    owned = {p: {f"m{rng.randrange(maintainers)}@x.org" for _ in range(rng.randint(0, 2))} for p in nodes}
    return DepGraph.from_edges(nodes, edges, {p: ms for p, ms in owned.items() if ms})


class ClosureOracle:
    """Reachability within k hops from boolean matrix powers of (I + A)."""

    def __init__(self, g: DepGraph):
        self.nodes = g.nodes
        self.index = {n: i for i, n in enumerate(self.nodes)}
        size = len(self.nodes)
        adj = np.zeros((size, size), dtype=np.int64)
        for u, v in g.edges():
            adj[self.index[u], self.index[v]] = 1
        self.step = ((adj + np.eye(size, dtype=np.int64)) > 0).astype(np.int64)
        self.owned_by = g.owned_by
        self.owners = g.owners
        self._cache: dict[int | None, np.ndarray] = {}

    def _mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return ((a @ b) > 0).astype(np.int64)

    def within(self, depth: int | None) -> np.ndarray:
        if depth in self._cache:
            return self._cache[depth]
        size = len(self.nodes)
        if depth is None:
            m = self.step
            while True:
                nxt = self._mul(m, m)
                if np.array_equal(nxt, m):
                    break
                m = nxt
        else:
            m = np.eye(size, dtype=np.int64)
            base, k = self.step, depth
            while k:
                if k & 1:
                    m = self._mul(m, base)
                base = self._mul(base, base)
                k >>= 1
        self._cache[depth] = m
        return m

    def reach(self, p: str, depth: int | None) -> set[str]:
        col = self.within(depth)[:, self.index[p]]
        return {self.nodes[i] for i in np.flatnonzero(col)} - {p}

    def itp(self, p: str, depth: int | None) -> set[str]:
        row = self.within(depth)[self.index[p], :]
        return {self.nodes[i] for i in np.flatnonzero(row)} - {p}

    def maintainer_reach(self, m: str, depth: int | None) -> set[str]:
        own = set(self.owners[m])
        out: set[str] = set()
        for x in own:
            out |= {x} | self.reach(x, depth)
        return out - own

    def itm(self, p: str, depth: int | None) -> set[str]:
        out: set[str] = set()
        for q in self.itp(p, depth) | {p}:
            out |= set(self.owned_by.get(q, ()))
        return out - set(self.owned_by.get(p, ()))


def naive_pairs(names: Iterable[str], d: int, distance) -> dict[tuple[str, str], int]:
    names = sorted(set(names))
    out = {}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            if abs(len(a) - len(b)) > d:
                continue
            dist = distance(a, b)
            if dist <= d:
                out[(a, b)] = dist
    return out


def synthetic_names(n: int, seed: int = 0) -> set[str]:
    """Registry-shaped names: dictionary-like words joined by separators,
    with a few single-character variants of earlier names."""
    rng = random.Random(seed)
    letters = "etaoinshrdlcumwfgypbvkjxqz"
    weights = [12.7, 9.1, 8.2, 7.5, 7.0, 6.7, 6.3, 6.1, 6.0, 4.3, 4.0, 2.8, 2.8,
               2.4, 2.4, 2.2, 2.0, 2.0, 1.9, 1.5, 1.0, 0.8, 0.15, 0.15, 0.1, 0.07]
    vocab = ["".join(rng.choices(letters, weights, k=rng.randint(3, 10))) for _ in range(max(1, n // 4))]
    names: set[str] = set()
    pool: list[str] = []
    while len(names) < n:
        if pool and rng.random() < 0.04:
            base = list(rng.choice(pool))
            base[rng.randrange(len(base))] = rng.choice(letters)
            name = "".join(base)
        else:
            k = rng.choice((1, 2, 2, 2, 3, 3))
            name = rng.choice(("-", "-", "")).join(rng.choice(vocab) for _ in range(k))
        if 3 <= len(name) <= 30 and name not in names:
            names.add(name)
            pool.append(name)
    return names


def mapping_sets(m: Mapping) -> dict:
    return {k: set(v) for k, v in m.items()}
