from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from pkgaudit.cli import build_parser, run

from support import record

CORPUS = Path(__file__).parent / "fixtures" / "scripts"


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def write_snapshot(path, recs):
    path.write_text("".join(json.dumps(r) + "\n" for r in recs), encoding="utf-8")
    return str(path)


@pytest.fixture
def chain(tmp_path):
    return write_snapshot(tmp_path / "chain.jsonl", [
        record("A", ["B"], maintainers=["ma@x.org"]),
        record("B", ["C"], maintainers=["mb@x.org"]),
        record("C", maintainers=["mc@x.org", "mb@x.org"]),
    ])


def test_defaults():
    args = build_parser().parse_args(["stats"])
    assert (args.format, args.depth, args.max_distance) == ("table", 5, 3)


def test_trust_on_chain(chain):
    code, out, _ = invoke("trust", "a", "--snapshot", chain, "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert data["itp"] == {"size": 2, "members": ["b", "c"]}
    assert data["itm"] == {"size": 2, "members": ["mb@x.org", "mc@x.org"]}
    code, out, _ = invoke("trust", "a", "--snapshot", chain)
    assert "itp: 2" in out


def test_reach_variants(chain):
    code, out, _ = invoke("reach", "c", "--snapshot", chain, "--format", "json", "--series")
    data = json.loads(out)
    assert data["members"] == ["a", "b"] and data["kind"] == "package" and data["series"] == {"2018": 2}
    code, out, _ = invoke("reach", "--maintainer", "MC@x.org", "--snapshot", chain, "--format", "json", "--depth", "1")
    assert json.loads(out)["members"] == ["b"]
    code, out, _ = invoke("reach", "c", "--snapshot", chain, "--depth", "inf", "--format", "csv")
    assert list(csv.DictReader(io.StringIO(out))) == [{"member": "a"}, {"member": "b"}]


def test_top(chain):
    code, out, _ = invoke("top", "--metric", "package_reach", "--k", "2", "--snapshot", chain, "--format", "json")
    assert json.loads(out)["ranking"] == [{"rank": 1, "key": "c", "size": 2}, {"rank": 2, "key": "b", "size": 1}]


def test_license_check_exit_codes(tmp_path, chain):
    code, out, _ = invoke("license-check", "--snapshot", chain)
    assert code == 0 and "direct: 0" in out
    bad = write_snapshot(tmp_path / "bad.jsonl", [record("app", ["lib"], license="MIT"), record("lib", license="GPLv3"),
                                                  record("top", ["app"], license="GPL")])
    code, out, _ = invoke("license-check", "--snapshot", bad, "--transitive", "--format", "json")
    data = json.loads(out)
    assert code == 1
    assert len(data["direct"]) == 1 and len(data["inherited"]) == 1
    assert data["table"] == [{"violation_type": "MIT importing GPLv3", "occurrences": 1}]
    code, out, _ = invoke("license-check", "--snapshot", bad, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["path"] == "app > lib" and rows[0]["importer_license"] == "MIT"


def test_license_aliases_flag(tmp_path):
    snap = write_snapshot(tmp_path / "s.jsonl", [record("app", ["lib"], license="MIT"), record("lib", license="House Rules")])
    aliases = tmp_path / "aliases.json"
    aliases.write_text(json.dumps({"house rules": "AGPL_3"}), encoding="utf-8")
    assert invoke("license-check", "--snapshot", snap)[0] == 0
    assert invoke("license-check", "--snapshot", snap, "--license-aliases", str(aliases))[0] == 1


def test_squat_exit_codes(tmp_path):
    clean = write_snapshot(tmp_path / "clean.jsonl", [record("flask"), record("matplotlib")])
    assert invoke("squat", "--snapshot", clean)[0] == 0
    dirty = write_snapshot(tmp_path / "dirty.jsonl", [
        record("numpy", maintainers=["a@x.org"], downloads=100), record("numpi", maintainers=["b@x.org"], downloads=1)])
    code, out, _ = invoke("squat", "--snapshot", dirty, "--format", "csv")
    assert code == 1
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows == [{"suspect": "numpi", "target": "numpy", "rule": "EDIT_DISTANCE", "distance": "1",
                     "verdict": "OFFENSIVE_SUSPECT", "suspect_downloads": "1", "target_downloads": "100"}]
    builtins = tmp_path / "b.txt"
    builtins.write_text("flask\n", encoding="utf-8")
    assert invoke("squat", "--snapshot", clean, "--builtins", str(builtins))[0] == 1
    assert invoke("squat", "--snapshot", dirty, "--max-distance", "1")[0] == 1


def test_scan_setup(tmp_path):
    code, out, _ = invoke("scan-setup", str(CORPUS / "post_install_shell"), "--format", "json")
    data = json.loads(out)
    assert code == 1
    (script,) = data["scripts"]
    assert {"CMDCLASS_OVERRIDE", "NETWORK_AT_INSTALL", "DANGEROUS_IMPORT"} <= {f["kind"] for f in script["flags"]}
    code, out, _ = invoke("scan-setup", str(CORPUS / "post_install_shell"))
    assert "CMDCLASS_OVERRIDE" in out
    assert invoke("scan-setup", str(CORPUS / "minimal_setup"))[0] == 0
    assert invoke("scan-setup", str(tmp_path))[0] == 0
    weights = tmp_path / "w.json"
    weights.write_text(json.dumps({"NETWORK_AT_INSTALL": 100}), encoding="utf-8")
    code, out, _ = invoke("scan-setup", str(CORPUS / "raw_ip_port"), "--weights", str(weights), "--format", "json")
    assert json.loads(out)["scripts"][0]["risk_score"] == 100


def test_advisories(tmp_path):
    snap = tmp_path / "s.jsonl"
    dj = record("django")
    dj["releases"] = [{"version": "1.8.9", "date": "2016-01-01"}, {"version": "1.8.10", "date": "2016-03-01"}]
    dep = record("dep", ["django"], date="2015-01-01")
    dep["releases"].append({"version": "2.0", "date": "2016-04-01", "requires": ["django"]})
    write_snapshot(snap, [dj, dep, record("alone")])
    advs = tmp_path / "a.jsonl"
    advs.write_text(
        json.dumps({"id": "A1", "package": "django", "affected": "<1.8.10", "published": "2016-02-01", "fixed": "2016-03-01"}) + "\n"
        + json.dumps({"id": "A2", "package": "alone", "affected": "", "published": "2015-01-01", "fixed": "2018-02-01"}) + "\n",
        encoding="utf-8",
    )
    code, out, _ = invoke("advisories", "--snapshot", str(snap), "--advisories", str(advs), "--exposure", "--lag", "--format", "json")
    data = json.loads(out)
    assert code == 1
    first, second = data["advisories"]
    assert second["window_days"] == 29 and second["exposure"]["exposed"] == ["dep"]
    assert second["lag"]["lags"] == {"dep": 31} and second["affected_releases"] == ["1.8.9"]
    assert first["window_days"] == 1127 and first["exposed_count"] == 0
    code, out, _ = invoke("advisories", "--snapshot", str(snap), "--advisories", str(advs), "--package", "alone")
    assert code == 0 and "A1" not in out


def test_stats(chain):
    code, out, _ = invoke("stats", "--snapshot", chain, "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["packages"] == 3 and data["edges"] == 2
    assert data["yearly"] == {"2018": {"new_packages": 3, "new_maintainers": 3, "new_releases": 3}}


@pytest.mark.parametrize("argv,fragment", [
    (["stats"], "--snapshot is required"),
    (["trust", "missing", "--demo"], "unknown package"),
    (["reach", "--demo"], "exactly one"),
    (["reach", "numpy", "--maintainer", "a@b", "--demo"], "exactly one"),
    (["reach", "--maintainer", "nobody@x.org", "--demo"], "unknown maintainer"),
    (["advisories", "--snapshot", "/definitely/not/here.jsonl"], "error"),
    (["scan-setup", "/definitely/not/here"], "no such file"),
])
def test_usage_and_io_errors(argv, fragment):
    code, out, err = invoke(*argv)
    assert code == 2 and out == ""
    assert fragment in err


@pytest.mark.parametrize("argv", [["stats", "--depth", "-1"], ["nope"], ["top", "--k", "0", "--demo"], []])
def test_argparse_errors_exit_2(argv, capsys):
    assert invoke(*argv)[0] == 2


def test_strict_flag(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text(json.dumps(record("a")) + "\n{broken\n", encoding="utf-8")
    code, out, err = invoke("stats", "--snapshot", str(path), "--format", "json")
    assert code == 0 and json.loads(out)["load_report"]["skipped"][0]["line"] == 2
    code, _, err = invoke("stats", "--snapshot", str(path), "--strict")
    assert code == 2 and "line 2" in err


def test_demo_outputs_have_documented_keys():
    schemas = {
        ("stats",): {"snapshot_date", "packages", "maintainers", "releases", "edges", "load_report", "yearly", "classifiers"},
        ("reach", "numpy"): {"kind", "origin", "depth", "size", "members"},
        ("trust", "demo-site"): {"package", "depth", "itp", "itm"},
        ("top",): {"metric", "depth", "k", "ranking"},
        ("squat",): {"candidates", "rule_counts", "verdict_counts"},
        ("license-check",): {"direct", "inherited", "indeterminate", "table", "licenses"},
        ("advisories",): {"snapshot_date", "depth", "advisories"},
    }
    for argv, keys in schemas.items():
        code, out, _ = invoke(*argv, "--demo", "--format", "json")
        assert code in (0, 1)
        assert set(json.loads(out)) == keys, argv
