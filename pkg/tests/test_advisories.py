from __future__ import annotations

import datetime as dt
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pkgaudit.advisories import (
    Advisory,
    affected_releases,
    attack_window,
    exposure_set,
    lag_summary,
    load_advisories,
    parse_advisory,
    patch_lag,
    vulnerability_timeline,
)
from pkgaudit.depgraph import DepGraph, build_graph, package_reach
from pkgaudit.errors import MalformedRecord, NoFixDate, NotADependent, UnknownPackage
from pkgaudit.versions import parse_specifier

from support import random_graph, record, snapshot_of

D = dt.date


def adv(**kw):
    base = {"id": "SA-1", "package": "django", "affected": "<1.8.10", "published": "2016-02-01"}
    base.update(kw)
    return parse_advisory(base)


def django_snapshot():
    dj = record("Django", maintainers=["sec@djangoproject.com"])
    dj["releases"] = [
        {"version": "1.8.9", "date": "2016-01-02"},
        {"version": "1.8.10", "date": "2016-03-01"},
    ]
    ext = record("django-ext", ["django>=1.8"], maintainers=["a@corp.com", "b@corp.com"])
    ext["releases"] = [
        {"version": "1.0", "date": "2015-06-01", "requires": ["django"]},
        {"version": "1.1", "date": "2017-01-01", "requires": ["django"]},
        {"version": "1.2", "date": "2017-02-01", "requires": ["django"]},
    ]
    stale = record("stale", ["django"], maintainers=["c@corp.com"], date="2016-12-01")
    site = record("site", ["django-ext"], maintainers=["x@other.org"], date="2018-01-01")
    loner = record("loner", date="2015-01-01")
    return snapshot_of([dj, ext, stale, site, loner], snapshot_date=D(2019, 12, 9))


def write(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")
    return path


def test_load_and_flag_unknown(tmp_path):
    path = write(tmp_path / "a.jsonl", [
        {"id": "SA-1", "package": "Django", "affected": "<1.8.10", "published": "2016-02-01", "cves": ["CVE-2016-2512"]},
        {"id": "SA-2", "package": "left_pad", "affected": "", "published": "2017-01-01", "severity": 3},
    ])
    items = load_advisories(path, django_snapshot())
    assert [a.package for a in items] == ["django", "left-pad"]
    assert [a.in_snapshot for a in items] == [True, False]
    assert items[0].affected == parse_specifier("<1.8.10")
    assert items[1].severity == 3.0
    assert load_advisories(path)[0].in_snapshot is None


def test_fixed_before_published_is_malformed(tmp_path):
    path = write(tmp_path / "a.jsonl", [{"id": "X", "package": "p", "published": "2018-01-02", "fixed": "2018-01-01"}])
    with pytest.raises(MalformedRecord) as exc:
        load_advisories(path)
    assert exc.value.line == 1


@pytest.mark.parametrize("bad", [
    {"id": "X", "package": "p"},
    {"id": "X", "package": "p", "published": "2018-13-01"},
    {"id": "X", "package": "p", "published": "2018-01-01", "severity": 11},
    {"id": "X", "package": "p", "published": "2018-01-01", "affected": ">=1.*"},
    {"id": "X", "package": "p", "published": "2018-01-01", "cves": "CVE-1"},
])
def test_malformed_records(tmp_path, bad):
    with pytest.raises(MalformedRecord):
        load_advisories(write(tmp_path / "a.jsonl", [bad]))


def test_empty_file(tmp_path):
    path = tmp_path / "a.jsonl"
    path.write_text("\n", encoding="utf-8")
    assert load_advisories(path) == []


def test_affected_releases():
    snap = django_snapshot()
    assert [str(v) for v, _ in affected_releases(snap, adv())] == ["1.8.9"]
    assert len(affected_releases(snap, adv(affected=""))) == 2
    assert affected_releases(snap, adv(affected="<1.0")) == []
    with pytest.raises(UnknownPackage):
        affected_releases(snap, adv(package="nope"))


def test_exposure():
    snap = django_snapshot()
    g = build_graph(snap)
    exp = exposure_set(g, adv())
    assert exp.exposed == {"django-ext", "stale", "site"}
    assert exposure_set(g, adv(), 1).exposed == {"django-ext", "stale"}
    assert exposure_set(g, adv(package="loner")).exposed == frozenset()
    assert exp.by_domain(g) == {"corp.com": 2, "other.org": 1}
    assert exp.to_dict(g)["size"] == 3
    with pytest.raises(UnknownPackage):
        exposure_set(g, adv(package="nope"))


def test_chain_exposure():
    g = DepGraph.from_edges(["a", "django"], [("a", "django")])
    assert exposure_set(g, adv()).exposed == {"a"}


def test_patch_lag_examples():
    snap = django_snapshot()
    a = adv(fixed="2017-01-01")
    assert patch_lag(snap, a, "django-ext") == 31
    assert patch_lag(snap, a, "stale") is None
    assert patch_lag(snap, adv(fixed="2016-03-01"), "django-ext") == 306
    with pytest.raises(NotADependent):
        patch_lag(snap, a, "site")
    with pytest.raises(NoFixDate):
        patch_lag(snap, adv(), "django-ext")
    with pytest.raises(UnknownPackage):
        patch_lag(snap, a, "nope")


def test_lag_summary_excludes_unpatched_from_mean():
    summary = lag_summary(django_snapshot(), adv(fixed="2016-12-01"))
    assert summary.lags == {"django-ext": 31, "stale": None}
    assert summary.mean_days == 31 and summary.unpatched == ["stale"]
    data = summary.to_dict()
    assert data["patched"] == 1 and data["unpatched"] == 1


def test_timeline():
    snap = django_snapshot()
    items = [
        adv(id="SA-1", published="2015-01-01", fixed="2018-02-01", severity=7.5),
        adv(id="SA-2", published="2019-01-01"),
        adv(id="SA-3", package="stale", published="2019-01-01"),
    ]
    rows = vulnerability_timeline(snap, items, "django")
    assert [(r.advisory, r.open_window_days) for r in rows] == [("SA-1", 1127), ("SA-2", (D(2019, 12, 9) - D(2019, 1, 1)).days)]
    assert rows[0].open_window_days > 3 * 365
    assert vulnerability_timeline(snap, items, "loner") == []
    with pytest.raises(UnknownPackage):
        vulnerability_timeline(snap, items, "nope")


def test_window_never_negative():
    assert attack_window(adv(published="2020-01-01"), D(2019, 12, 9)) == 0


def test_advisory_invariants():
    with pytest.raises(ValueError):
        Advisory("x", "p", parse_specifier(""), D(2018, 1, 2), fixed=D(2018, 1, 1))
    with pytest.raises(ValueError):
        Advisory("x", "p", parse_specifier(""), D(2018, 1, 2), severity=-1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 40), st.floats(0.01, 0.3))
def test_exposure_monotone_in_depth(seed, n, density):
    g = random_graph(random.Random(seed), n, density)
    a = adv(package="p0")
    previous = frozenset()
    for depth in range(0, 8):
        current = exposure_set(g, a, depth).exposed
        assert previous <= current
        previous = current
    assert previous <= exposure_set(g, a, None).exposed == package_reach(g, "p0", None).members


dates = st.dates(D(2010, 1, 1), D(2019, 12, 31))


@given(st.lists(dates, min_size=1, max_size=6), dates)
def test_patch_lag_non_negative_and_strict(release_dates, fixed):
    dep = record("dep", ["vuln"])
    dep["releases"] = [{"version": f"{i + 1}.0", "date": d.isoformat(), "requires": ["vuln"]} for i, d in enumerate(release_dates)]
    snap = snapshot_of([dep, record("vuln")])
    published = min(fixed, min(release_dates))
    a = adv(package="vuln", published=published.isoformat(), fixed=fixed.isoformat())
    lag = patch_lag(snap, a, "dep")
    later = [d for d in release_dates if d > fixed]
    if later:
        assert lag == (min(later) - fixed).days and lag > 0
    else:
        assert lag is None
