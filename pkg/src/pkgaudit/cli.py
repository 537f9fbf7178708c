"""``pkgaudit`` command line.

Exit status: 0 when the analysis ran and found nothing, 1 when it reported
findings (offensive squat suspects, license violations, scanner flags or
exposed dependents), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

from . import advisories as adv
from . import installscan
from .depgraph import (
    DEFAULT_DEPTH,
    METRICS,
    DepGraph,
    build_graph,
    implicit_trust_maintainers,
    implicit_trust_packages,
    maintainer_reach,
    package_reach,
    reach_series,
    top_k,
)
from .errors import AuditError
from .license import check_licenses, load_aliases, package_license
from .snapshot import Snapshot, canonical_name, classifier_breakdown, ecosystem_stats, load_snapshot
from .squat import CSV_COLUMNS as SQUAT_COLUMNS
from .squat import SquatConfig, load_reserved, scan_all

logger = logging.getLogger("pkgaudit")

EXIT_OK, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class Result:
    payload: Any
    columns: Sequence[str] = ()
    rows: list[dict[str, Any]] = field(default_factory=list)
    summary: list[tuple[str, Any]] = field(default_factory=list)
    findings: bool = False


# -- argument types ---------------------------------------------------------


def _depth(text: str) -> int | None:
    if text.lower() in ("inf", "unlimited", "none", "all"):
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"depth must be a non-negative integer or 'inf', not {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("depth must be non-negative")
    return value


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}")


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _demo_path(name: str) -> Path:
    return Path(str(resources.files("pkgaudit").joinpath(f"data/{name}")))


# -- shared loading ---------------------------------------------------------


def _snapshot(args: argparse.Namespace) -> Snapshot:
    if args.snapshot is None:
        if not args.demo:
            raise UsageError("--snapshot is required (or pass --demo for the bundled sample)")
        path = _demo_path("demo_snapshot.jsonl")
    else:
        path = Path(args.snapshot)
    snap = load_snapshot(path, strict=args.strict, snapshot_date=args.snapshot_date)
    for lineno, reason in snap.report.skipped:
        logger.warning("%s:%d skipped: %s", path, lineno, reason)
    return snap


def _graph(args: argparse.Namespace) -> tuple[Snapshot, DepGraph]:
    snap = _snapshot(args)
    return snap, build_graph(snap)


def _advisory_list(args: argparse.Namespace, snap: Snapshot) -> list[adv.Advisory]:
    if args.advisories is None:
        if not args.demo:
            raise UsageError("--advisories is required (or pass --demo for the bundled sample)")
        path = _demo_path("demo_advisories.jsonl")
    else:
        path = Path(args.advisories)
    return adv.load_advisories(path, snap)


def _package(snap: Snapshot, raw: str) -> str:
    name = canonical_name(raw)
    if name not in snap:
        raise UsageError(f"unknown package: {raw!r}")
    return name


# -- subcommands ------------------------------------------------------------


def cmd_stats(args: argparse.Namespace) -> Result:
    snap, g = _graph(args)
    yearly = ecosystem_stats(snap)
    payload = {
        "snapshot_date": snap.snapshot_date.isoformat(),
        "packages": len(snap),
        "maintainers": len(g.maintainers),
        "releases": sum(len(r.releases) for r in snap.packages.values()),
        "edges": len(g.edges()),
        "load_report": snap.report.to_dict(),
        "yearly": yearly.to_dict(),
        "classifiers": classifier_breakdown(snap),
    }
    rows = [{"year": year, **counts} for year, counts in payload["yearly"].items()]
    summary = [(k, payload[k]) for k in ("snapshot_date", "packages", "maintainers", "releases", "edges")]
    return Result(payload, ("year", "new_packages", "new_maintainers", "new_releases"), rows, summary)


def cmd_reach(args: argparse.Namespace) -> Result:
    snap, g = _graph(args)
    if (args.package is None) == (args.maintainer is None):
        raise UsageError("give exactly one of PACKAGE or --maintainer EMAIL")
    if args.maintainer is not None:
        result = maintainer_reach(g, args.maintainer, args.depth)
        payload = {"kind": "maintainer", **result.to_dict()}
    else:
        result = package_reach(g, _package(snap, args.package), args.depth)
        payload = {"kind": "package", **result.to_dict()}
        if args.series:
            payload["series"] = {str(y): n for y, n in reach_series(g, result.origin, args.depth).items()}
    rows = [{"member": m} for m in sorted(result.members)]
    summary = [("origin", result.origin), ("depth", _depth_label(args.depth)), ("size", result.size)]
    return Result(payload, ("member",), rows, summary)


def cmd_trust(args: argparse.Namespace) -> Result:
    snap, g = _graph(args)
    name = _package(snap, args.package)
    itp = implicit_trust_packages(g, name, args.depth)
    itm = implicit_trust_maintainers(g, name, args.depth)
    payload = {
        "package": name,
        "depth": args.depth,
        "itp": {"size": len(itp), "members": sorted(itp)},
        "itm": {"size": len(itm), "members": sorted(itm)},
    }
    rows = [{"kind": "package", "name": p} for p in sorted(itp)]
    rows += [{"kind": "maintainer", "name": m} for m in sorted(itm)]
    summary = [("package", name), ("depth", _depth_label(args.depth)), ("itp", len(itp)), ("itm", len(itm))]
    return Result(payload, ("kind", "name"), rows, summary)


def cmd_top(args: argparse.Namespace) -> Result:
    _, g = _graph(args)
    ranked = top_k(g, args.metric, args.k, args.depth, args.jobs)
    rows = [{"rank": i, "key": key, "size": size} for i, (key, size) in enumerate(ranked, 1)]
    payload = {"metric": args.metric, "depth": args.depth, "k": args.k, "ranking": rows}
    return Result(payload, ("rank", "key", "size"), rows, [("metric", args.metric)])


def cmd_squat(args: argparse.Namespace) -> Result:
    snap = _snapshot(args)
    reserved = load_reserved(args.builtins) if args.builtins else load_reserved()
    report = scan_all(snap, SquatConfig(max_distance=args.max_distance, reserved=reserved))
    summary = [(f"rule {k}", v) for k, v in report.rule_counts.items()]
    summary += [(f"verdict {k}", v) for k, v in report.verdict_counts.items()]
    return Result(report.to_dict(snap), SQUAT_COLUMNS, report.rows(snap), summary, report.has_offensive())


def cmd_license(args: argparse.Namespace) -> Result:
    snap, g = _graph(args)
    aliases = load_aliases(args.license_aliases) if args.license_aliases else None
    report = check_licenses(g, snap, transitive=args.transitive, depth=args.depth, aliases=aliases)
    rows = [
        {
            "kind": v.kind.value,
            "importer": v.importer,
            "importer_license": v.importer_license.value,
            "dependency": v.dependency,
            "dependency_license": v.dependency_license.value,
            "path": " > ".join([v.path[0][0]] + [e[1] for e in v.path]),
        }
        for v in report.violations
    ]
    payload = report.to_dict()
    payload["licenses"] = {name: package_license(rec, aliases).value for name, rec in sorted(snap.packages.items())}
    summary = [("direct", len(report.direct)), ("inherited", len(report.inherited))]
    summary += [("indeterminate", report.indeterminate)]
    summary += [(label, n) for label, n in report.table()]
    columns = ("kind", "importer", "importer_license", "dependency", "dependency_license", "path")
    return Result(payload, columns, rows, summary, bool(report.violations))


def cmd_advisories(args: argparse.Namespace) -> Result:
    snap, g = _graph(args)
    items = _advisory_list(args, snap)
    if args.package is not None:
        wanted = canonical_name(args.package)
        items = [a for a in items if a.package == wanted]
    items.sort(key=lambda a: (a.published, a.id))

    records, rows, exposed_any = [], [], False
    for a in items:
        entry: dict[str, Any] = {
            **a.to_dict(),
            "in_snapshot": bool(a.in_snapshot),
            "window_days": adv.attack_window(a, snap.snapshot_date),
        }
        row = {
            "id": a.id,
            "package": a.package,
            "published": a.published.isoformat(),
            "fixed": a.fixed.isoformat() if a.fixed else "",
            "window_days": entry["window_days"],
            "exposed": "",
            "mean_lag_days": "",
        }
        if a.in_snapshot:
            entry["affected_releases"] = [str(v) for v, _ in adv.affected_releases(snap, a)]
            exposure = adv.exposure_set(g, a, args.depth)
            exposed_any = exposed_any or bool(exposure.exposed)
            row["exposed"] = len(exposure.exposed)
            entry["exposed_count"] = len(exposure.exposed)
            if args.exposure:
                entry["exposure"] = exposure.to_dict(g)
            if args.lag and a.fixed is not None:
                lag = adv.lag_summary(snap, a)
                entry["lag"] = lag.to_dict()
                row["mean_lag_days"] = "" if lag.mean_days is None else round(lag.mean_days, 2)
        records.append(entry)
        rows.append(row)
    payload = {"snapshot_date": snap.snapshot_date.isoformat(), "depth": args.depth, "advisories": records}
    columns = ("id", "package", "published", "fixed", "window_days", "exposed", "mean_lag_days")
    return Result(payload, columns, rows, [("advisories", len(records))], exposed_any)


def cmd_scan_setup(args: argparse.Namespace) -> Result:
    weights = installscan.load_weights(args.weights) if args.weights else None
    findings = installscan.scan_tree(args.path, args.pattern, weights, workers=args.jobs)
    payload = {
        "scripts": [f.to_dict() for f in findings],
        "summary": installscan.corpus_summary(findings),
    }
    rows = [row for f in findings for row in f.rows()]
    summary = [("scripts", len(findings)), ("flagged", payload["summary"]["flagged"])]
    summary += [(f.path, f"error: {f.error}") for f in findings if f.error]
    summary += [(f.path, f"risk {f.risk_score}") for f in findings if f.flags]
    return Result(payload, installscan.CSV_COLUMNS, rows, summary, any(f.flags for f in findings))


# -- rendering --------------------------------------------------------------


def _depth_label(depth: int | None) -> str:
    return "inf" if depth is None else str(depth)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, tuple, set, frozenset)):
        return ";".join(str(v) for v in value)
    return str(value)


def render(result: Result, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result.payload, sort_keys=True, indent=2, default=str) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(result.columns), lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in result.rows:
            writer.writerow({k: _cell(row.get(k)) for k in result.columns})
        return buf.getvalue()
    lines = [f"{k}: {_cell(v)}" for k, v in result.summary]
    if result.rows:
        if lines:
            lines.append("")
        cells = [[_cell(row.get(c)) for c in result.columns] for row in result.rows]
        widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(result.columns)]
        lines.append("  ".join(c.ljust(w) for c, w in zip(result.columns, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
        lines.extend("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in cells)
    return "\n".join(lines) + "\n"


# -- parser -----------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("input and output")
    g.add_argument("--snapshot", metavar="PATH", help="newline-delimited JSON package snapshot")
    g.add_argument("--advisories", metavar="PATH", help="newline-delimited JSON advisory file")
    g.add_argument("--demo", action="store_true", help="use the bundled 30-package sample data")
    g.add_argument("--format", choices=("json", "csv", "table"), default="table")
    g.add_argument("--depth", type=_depth, default=DEFAULT_DEPTH, help="traversal depth, or 'inf' (default 5)")
    g.add_argument("--max-distance", type=int, choices=(1, 2, 3), default=3)
    g.add_argument("--builtins", metavar="PATH", help="reserved stdlib module names, one per line")
    g.add_argument("--license-aliases", metavar="PATH", help="JSON object mapping license text to an id")
    g.add_argument("--weights", metavar="PATH", help="JSON object of scanner flag weights")
    g.add_argument("--strict", action="store_true", help="fail on the first malformed snapshot record")
    g.add_argument("--snapshot-date", type=_date, metavar="YYYY-MM-DD")
    g.add_argument("--jobs", type=_positive, default=os.cpu_count() or 1, help="worker threads")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="pkgaudit", description="Supply-chain audit of a package-registry snapshot.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, func: Callable[[argparse.Namespace], Result], help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help, description=help)
        p.set_defaults(func=func)
        return p

    add("stats", cmd_stats, "snapshot size and per-year growth")
    p = add("reach", cmd_reach, "package reach, or maintainer reach with --maintainer")
    p.add_argument("package", nargs="?")
    p.add_argument("--maintainer", metavar="EMAIL")
    p.add_argument("--series", action="store_true", help="also report reach at the end of each year")
    p = add("trust", cmd_trust, "implicitly trusted packages and maintainers")
    p.add_argument("package")
    p = add("top", cmd_top, "rank packages or maintainers by a metric")
    p.add_argument("--metric", choices=METRICS, default="package_reach")
    p.add_argument("--k", type=_positive, default=10)
    add("squat", cmd_squat, "typosquat and impersonation candidates")
    p = add("license-check", cmd_license, "license incompatibilities along dependency edges")
    p.add_argument("--transitive", action="store_true", help="also report inherited violations")
    p = add("advisories", cmd_advisories, "attack windows, exposure and patch lag for advisories")
    p.add_argument("--package", metavar="NAME")
    p.add_argument("--exposure", action="store_true", help="list exposed dependents")
    p.add_argument("--lag", action="store_true", help="patch lag of direct dependents")
    p = add("scan-setup", cmd_scan_setup, "static risk scan of setup scripts")
    p.add_argument("path")
    p.add_argument("--pattern", default="setup.py", help="file name glob (default setup.py)")
    return parser


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        result = args.func(args)
    except UsageError as exc:
        print(f"pkgaudit {args.command}: {exc}", file=stderr)
        return EXIT_ERROR
    except (AuditError, OSError, ValueError) as exc:
        print(f"pkgaudit {args.command}: error: {exc}", file=stderr)
        return EXIT_ERROR
    stdout.write(render(result, args.format))
    return EXIT_FINDINGS if result.findings else EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
