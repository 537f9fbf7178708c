"""Levenshtein distance and an index for all-pairs near-duplicate name search.

The index partitions every indexed name of length ``L`` into ``max_d + 1``
contiguous segments.  If ``lev(s, r) <= d`` then at least one segment of ``s``
survives the edits untouched and occurs in ``r`` shifted by at most
``(d + |len(r) - L|) / 2`` positions, so probing those few substrings of ``r``
yields a complete candidate set.  Candidates are then verified exactly.
Choosing the segment whose preceding edits number at most its index (such a
segment always exists when there are more segments than edits) narrows the
shift further.  Names shorter than ``max_d + 1`` cannot be partitioned and
are compared directly.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable


def edit_distance(a: str, b: str) -> int:
    """Unit-cost Levenshtein distance (two-row dynamic programme)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def fast_edit_distance(a: str, b: str) -> int:
    """Levenshtein distance via Myers/Hyyro bit-parallel columns."""
    if a == b:
        return 0
    if len(a) > len(b):
        a, b = b, a
    m = len(a)
    if m == 0:
        return len(b)
    peq: dict[str, int] = {}
    for i, ch in enumerate(a):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    full = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, score = full, 0, m
    for ch in b:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = (mv | ~(xh | pv)) & full
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = ((ph << 1) | 1) & full
        mh = (mh << 1) & full
        pv = (mh | ~(xv | ph)) & full
        mv = ph & xv
    return score


def _segments(length: int, parts: int) -> list[tuple[int, int]]:
    """(start, size) of ``parts`` contiguous segments; the longer ones go last."""
    base, extra = divmod(length, parts)
    out, pos = [], 0
    for i in range(parts):
        size = base + (1 if i >= parts - extra else 0)
        out.append((pos, size))
        pos += size
    return out


def _bounded_matcher(r: str):
    """Return ``f(s, d)`` giving ``lev(r, s)`` if it is at most ``d``, else None.

    Same recurrence as :func:`fast_edit_distance` with ``r`` as the bit
    pattern, so the per-character masks are built once per probe string.
    """
    m = len(r)
    peq: dict[str, int] = {}
    for i, ch in enumerate(r):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    full = (1 << m) - 1
    top = 1 << (m - 1) if m else 0

    def match(s: str, d: int) -> int | None:
        n = len(s)
        if m == 0:
            return n if n <= d else None
        pv, mv, score = full, 0, m
        for j, ch in enumerate(s, 1):
            eq = peq.get(ch, 0)
            xv = eq | mv
            xh = (((eq & pv) + pv) ^ pv) | eq
            ph = (mv | ~(xh | pv)) & full
            mh = pv & xh
            if ph & top:
                score += 1
            elif mh & top:
                score -= 1
            if score - (n - j) > d:
                return None
            ph = ((ph << 1) | 1) & full
            mh = (mh << 1) & full
            pv = (mh | ~(xv | ph)) & full
            mv = ph & xv
        return score if score <= d else None

    return match


def _charmask(name: str) -> int:
    mask = 0
    for ch in name:
        mask |= 1 << (ord(ch) & 127)
    return mask


class _SegmentTable:
    """Names bucketed by (length, segment index, segment text)."""

    def __init__(self, parts: int):
        self.parts = parts
        self.layout: dict[int, list[tuple[int, int]]] = {}
        self.buckets: dict[tuple[int, int, str], list[str]] = defaultdict(list)
        self.short: dict[int, list[str]] = defaultdict(list)

    def insert(self, name: str) -> None:
        n = len(name)
        if n < self.parts:
            self.short[n].append(name)
            return
        layout = self.layout.get(n)
        if layout is None:
            layout = self.layout[n] = _segments(n, self.parts)
        buckets = self.buckets
        for i, (start, size) in enumerate(layout):
            buckets[(n, i, name[start : start + size])].append(name)

    def probe(self, r: str, d: int, lengths: Iterable[int]) -> set[str]:
        rlen = len(r)
        found: set[str] = set()
        get = self.buckets.get
        for n in lengths:
            if n < self.parts:
                found.update(self.short.get(n, ()))
                continue
            layout = self.layout.get(n)
            if layout is None:
                continue
            delta = rlen - n
            lo, hi = -((d - delta) // 2), (d + delta) // 2
            for i, (start, size) in enumerate(layout):
                # some untouched segment i has <= i edits before it and
                # <= d - i after it, bounding its shift from both sides
                left = max(lo, -i, delta - (d - i))
                right = min(hi, i, delta + (d - i))
                for q in range(max(0, start + left), min(rlen - size, start + right) + 1):
                    bucket = get((n, i, r[q : q + size]))
                    if bucket:
                        found.update(bucket)
        return found


class FuzzyIndex:
    """Near-duplicate lookup over a fixed name set for distances up to ``max_d``."""

    def __init__(self, names: Iterable[str], max_d: int = 3):
        if max_d not in (1, 2, 3):
            raise ValueError("max_d must be 1, 2 or 3")
        self.max_d = max_d
        self.names = frozenset(names)
        self._table = _SegmentTable(max_d + 1)
        for name in sorted(self.names):
            self._table.insert(name)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def neighbors(self, name: str, d: int | None = None) -> dict[str, int]:
        """Indexed names within distance ``d`` of ``name`` (excluding itself)."""
        d = self.max_d if d is None else d
        if not 0 <= d <= self.max_d:
            raise ValueError(f"distance must be within 0..{self.max_d}")
        lengths = range(max(0, len(name) - d), len(name) + d + 1)
        match = _bounded_matcher(name)
        rmask = _charmask(name)
        out = {}
        for cand in self._table.probe(name, d, lengths):
            if cand == name:
                continue
            cmask = _charmask(cand)
            if (rmask & ~cmask).bit_count() > d or (cmask & ~rmask).bit_count() > d:
                continue
            dist = match(cand, d)
            if dist is not None:
                out[cand] = dist
        return dict(sorted(out.items()))

    def all_pairs(self, d: int | None = None) -> dict[tuple[str, str], int]:
        """Every unordered pair within distance ``d``, keyed ``(smaller, larger)``.

        Names are probed shortest first against a table holding only the
        names already visited, so each pair is examined once.
        """
        d = self.max_d if d is None else d
        if not 1 <= d <= self.max_d:
            raise ValueError(f"distance must be within 1..{self.max_d}")
        table = _SegmentTable(d + 1)
        masks = {name: _charmask(name) for name in self.names}
        pairs: dict[tuple[str, str], int] = {}
        for r in sorted(self.names, key=lambda s: (len(s), s)):
            lengths = range(max(0, len(r) - d), len(r) + 1)
            match = _bounded_matcher(r)
            rmask = masks[r]
            for cand in table.probe(r, d, lengths):
                # each character present on only one side costs an edit
                cmask = masks[cand]
                if (rmask & ~cmask).bit_count() > d or (cmask & ~rmask).bit_count() > d:
                    continue
                dist = match(cand, d)
                if dist is not None:
                    pairs[(cand, r) if cand < r else (r, cand)] = dist
            table.insert(r)
        return dict(sorted(pairs.items()))


def build_name_index(names: Iterable[str], max_d: int = 3) -> FuzzyIndex:
    return FuzzyIndex(names, max_d)
