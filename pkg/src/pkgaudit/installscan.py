"""Lexical risk scan of setup-script source text.

The scanner never parses Python.  It blanks out comments and string bodies,
splits the result into logical statements by tracking bracket depth and
backslash continuations, and runs pattern detectors over each statement.
That keeps it total on malformed or deliberately mangled input.  Imports
assembled at runtime from string pieces are invisible to it.
"""

from __future__ import annotations

import bisect
import fnmatch
import json
import logging
import os
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

logger = logging.getLogger(__name__)


class FlagKind(str, Enum):
    IMPORT_AT_INSTALL = "IMPORT_AT_INSTALL"
    DANGEROUS_IMPORT = "DANGEROUS_IMPORT"
    NON_SETUP_CALL = "NON_SETUP_CALL"
    CMDCLASS_OVERRIDE = "CMDCLASS_OVERRIDE"
    NETWORK_AT_INSTALL = "NETWORK_AT_INSTALL"
    OBFUSCATED_EXEC = "OBFUSCATED_EXEC"


DEFAULT_WEIGHTS: Mapping[FlagKind, int] = {
    FlagKind.OBFUSCATED_EXEC: 10,
    FlagKind.NETWORK_AT_INSTALL: 8,
    FlagKind.CMDCLASS_OVERRIDE: 5,
    FlagKind.DANGEROUS_IMPORT: 3,
    FlagKind.NON_SETUP_CALL: 2,
    FlagKind.IMPORT_AT_INSTALL: 1,
}

ALLOWLIST = frozenset({"setuptools", "distutils"})
DANGEROUS_MODULES = frozenset(
    {"os", "sys", "subprocess", "shutil", "socket", "glob", "urllib", "requests", "ctypes"}
)
COMMAND_CLASSES = frozenset(
    {"install", "develop", "egg_info", "install_lib", "install_scripts", "install_data"}
)
KEYWORDS = frozenset(
    {
        "and", "assert", "async", "await", "class", "def", "del", "elif", "else",
        "except", "for", "from", "global", "if", "import", "in", "is", "lambda",
        "nonlocal", "not", "or", "print_function", "raise", "return", "try",
        "while", "with", "yield", "match", "case",
    }
)

_OBFUSCATION = re.compile(
    r"decode|decompress|base64|zlib|rot.?13|marshal|fromhex|unhexlify|bz2|lzma", re.I
)
_NETWORK = re.compile(
    r"\bsocket\s*\.\s*socket\s*\("
    r"|\.\s*connect\s*\(\s*\("
    r"|\bcreate_connection\s*\("
    r"|\burlopen\s*\("
    r"|\burlretrieve\s*\("
    r"|\brequests\s*\.\s*(?:get|post|put|patch|delete|head|request)\s*\("
    r"|\bHTTPS?Connection\s*\("
    r"|\bhttp\s*\.\s*client\b"
)
_IPV4 = r"(?:\d{1,3}\.){3}\d{1,3}"
_IP_PORT = re.compile(rf"(?<![\d.]){_IPV4}:\d{{1,5}}\b")
_IP_ONLY = re.compile(rf"\s*{_IPV4}\s*")
_PORT_TAIL = re.compile(r"\s*,\s*\d{1,5}\s*\)")

_IMPORT = re.compile(r"(?:^|:)\s*import\s+([\w.\s,]+?)\s*$")
_FROM = re.compile(r"(?:^|:)\s*from\s+(\.*)([\w.]*)\s+import\s+\(?([\w\s,]*)\)?\s*$")
_DYNAMIC_IMPORT = re.compile(r"(?<![\w.])(?:__import__|importlib\s*\.\s*import_module|import_module)\s*\(\s*")
_CALL_STMT = re.compile(r"([A-Za-z_]\w*(?:\s*\.\s*[A-Za-z_]\w*)*)\s*\(")
_CLASS = re.compile(r"class\s+\w+\s*\(([^)]*)\)")
_CMDCLASS_KW = re.compile(r"\bcmdclass\s*=(?!=)")
_EXEC = re.compile(r"(?<![\w.])(exec|eval)\s*\(")
_ASSIGN = re.compile(r"([A-Za-z_]\w*)\s*=(?!=)")
_NAME = re.compile(r"[A-Za-z_]\w*")
_LEAD = re.compile(r"[ \t]*")
_ARG_END = re.compile(r"[\s\0]*[,)]")


@dataclass(frozen=True, order=True)
class Flag:
    line: int
    kind: FlagKind
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "line": self.line, "detail": self.detail}


@dataclass(frozen=True)
class ScriptFindings:
    path: str
    flags: tuple[Flag, ...] = ()
    imported_modules: frozenset[str] = frozenset()
    risk_score: int = 0
    warnings: tuple[str, ...] = ()
    error: str | None = None

    @property
    def kinds(self) -> frozenset[FlagKind]:
        return frozenset(f.kind for f in self.flags)

    def to_dict(self) -> dict[str, Any]:
        return {
            "path": self.path,
            "flags": [f.to_dict() for f in self.flags],
            "imported_modules": sorted(self.imported_modules),
            "risk_score": self.risk_score,
            "warnings": list(self.warnings),
            "error": self.error,
        }

    def rows(self) -> list[dict[str, Any]]:
        return [{"path": self.path, **f.to_dict()} for f in self.flags]


CSV_COLUMNS = ("path", "kind", "line", "detail")


def score(flags: Iterable[Flag], weights: Mapping[FlagKind, int] | None = None) -> int:
    weights = DEFAULT_WEIGHTS if weights is None else weights
    return sum(weights.get(f.kind, 0) for f in flags)


def load_weights(path: str | Path) -> dict[FlagKind, int]:
    """Read ``{"KIND": weight}`` overrides on top of the defaults."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("weights file must hold a JSON object")
    weights = dict(DEFAULT_WEIGHTS)
    for key, value in raw.items():
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            raise ValueError(f"weight for {key!r} must be a non-negative integer")
        weights[FlagKind(key)] = value
    return weights


# -- lexing -----------------------------------------------------------------


@dataclass(frozen=True)
class _Literal:
    start: int  # offset of the opening quote
    end: int  # offset just past the closing quote
    value: str


def _mask(source: str) -> tuple[str, list[_Literal]]:
    """Blank comments and string bodies, keeping offsets and line breaks.

    Newlines inside strings become NUL so they neither end a statement nor
    shift offsets.  Unterminated strings run to end of line (or end of text
    for triple quotes).
    """
    out = list(source)
    literals: list[_Literal] = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch == "#":
            j = source.find("\n", i)
            j = n if j < 0 else j
            out[i:j] = " " * (j - i)
            i = j
            continue
        if ch in "'\"":
            quote = source[i : i + 3] if source[i : i + 3] in ("'''", '"""') else ch
            body = i + len(quote)
            j = body
            while j < n:
                c = source[j]
                if c == "\\":
                    j += 2
                    continue
                if source.startswith(quote, j):
                    break
                if c == "\n" and len(quote) == 1:
                    break
                j += 1
            stop = min(j, n)
            closed = stop < n and source.startswith(quote, stop)
            for p in range(body, stop):
                out[p] = "\0" if source[p] == "\n" else " "
            end = stop + len(quote) if closed else stop
            literals.append(_Literal(i, end, source[body:stop]))
            i = end
            continue
        i += 1
    return "".join(out), literals


@dataclass(frozen=True)
class _Statement:
    start: int
    end: int
    indent: int


def _statements(masked: str) -> list[_Statement]:
    out: list[_Statement] = []
    depth = 0
    start = 0
    n = len(masked)

    def close(stop: int) -> None:
        text = masked[start:stop]
        stripped = text.lstrip(" \t")
        if stripped.strip(" \t\0\\\n\r"):
            line_start = masked.rfind("\n", 0, start) + 1
            indent = _LEAD.match(masked, line_start).end() - line_start
            out.append(_Statement(start + (len(text) - len(stripped)), stop, indent))

    for i in range(n):
        c = masked[i]
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth = max(0, depth - 1)
        elif c == "\n" and depth == 0:
            k = i - 1
            while k >= start and masked[k] in " \t\r":
                k -= 1
            if k >= start and masked[k] == "\\":
                continue
            close(i)
            start = i + 1
        elif c == ";" and depth == 0:
            close(i)
            start = i + 1
    close(n)
    return out


class _Lines:
    def __init__(self, source: str):
        self.breaks = [i for i, c in enumerate(source) if c == "\n"]

    def __call__(self, offset: int) -> int:
        return bisect.bisect_right(self.breaks, offset - 1) + 1


def _flat(text: str) -> str:
    return re.sub(r"[\s\\\0]+", " ", text).strip()


def _balanced_arg(masked: str, open_paren: int) -> int:
    """Offset of the ``)`` closing the paren at ``open_paren`` (or end of text)."""
    depth = 0
    for i in range(open_paren, len(masked)):
        c = masked[i]
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
            if depth == 0:
                return i
    return len(masked)


# -- scanning ---------------------------------------------------------------


def _resolve(name: str, aliases: Mapping[str, str]) -> str:
    head, _, rest = name.partition(".")
    full = aliases.get(head, head)
    return f"{full}.{rest}" if rest else full


def scan_script(
    source: str | bytes,
    path: str = "<string>",
    weights: Mapping[FlagKind, int] | None = None,
    dangerous: Iterable[str] = DANGEROUS_MODULES,
) -> ScriptFindings:
    warnings: list[str] = []
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError:
            source = source.decode("utf-8", errors="replace")
            warnings.append("undecodable bytes replaced")
    dangerous = frozenset(dangerous)
    masked, literals = _mask(source)
    line_of = _Lines(source)
    lit_at = {lit.start: lit for lit in literals}

    flags: set[Flag] = set()
    modules: set[str] = set()
    aliases: dict[str, str] = {}
    tainted: set[str] = set()

    def imported(module: str, offset: int) -> None:
        top = module.split(".")[0]
        if not top or top in ALLOWLIST:
            return
        modules.add(top)
        line = line_of(offset)
        flags.add(Flag(line, FlagKind.IMPORT_AT_INSTALL, module))
        if top in dangerous:
            flags.add(Flag(line, FlagKind.DANGEROUS_IMPORT, top))

    for st in _statements(masked):
        text = _flat(masked[st.start : st.end])
        raw = source[st.start : st.end]
        line = line_of(st.start)

        m = _IMPORT.search(text)
        if m:
            for part in m.group(1).split(","):
                words = part.split()
                if not words:
                    continue
                module = words[0]
                if len(words) == 3 and words[1] == "as":
                    aliases[words[2]] = module
                else:
                    aliases.setdefault(module.split(".")[0], module.split(".")[0])
                imported(module, st.start)
        m = _FROM.search(text)
        if m and not m.group(1) and m.group(2):
            module = m.group(2)
            for part in m.group(3).split(","):
                words = part.split()
                if not words:
                    continue
                local = words[2] if len(words) == 3 and words[1] == "as" else words[0]
                aliases[local] = f"{module}.{words[0]}"
            imported(module, st.start)

        seg = masked[st.start : st.end]
        for dm in _DYNAMIC_IMPORT.finditer(seg):
            lit = lit_at.get(st.start + dm.end())
            if lit is not None and re.fullmatch(r"[\w.]+", lit.value) and _ARG_END.match(masked, lit.end):
                imported(lit.value, st.start + dm.start())

        if st.indent == 0:
            call = _CALL_STMT.match(text)
            if call:
                callee = re.sub(r"\s+", "", call.group(1))
                head = callee.split(".")[0]
                if head not in KEYWORDS and callee.split(".")[-1] != "setup":
                    flags.add(Flag(line, FlagKind.NON_SETUP_CALL, callee))

        cm = _CLASS.match(text)
        if cm:
            for base in cm.group(1).split(","):
                base = re.sub(r"\s+", "", base)
                if not re.fullmatch(r"[\w.]+", base):
                    continue
                if _resolve(base, aliases).split(".")[-1] in COMMAND_CLASSES:
                    flags.add(Flag(line, FlagKind.CMDCLASS_OVERRIDE, base))
        for km in _CMDCLASS_KW.finditer(seg):
            flags.add(Flag(line_of(st.start + km.start()), FlagKind.CMDCLASS_OVERRIDE, "cmdclass"))

        for nm in _NETWORK.finditer(seg):
            flags.add(Flag(line_of(st.start + nm.start()), FlagKind.NETWORK_AT_INSTALL, _flat(nm.group(0))))

        for em in _EXEC.finditer(seg):
            paren = st.start + em.end() - 1
            close = _balanced_arg(masked, paren)
            arg_raw = source[paren + 1 : close]
            arg_masked = _flat(masked[paren + 1 : close])
            if _OBFUSCATION.search(arg_raw) or (_NAME.fullmatch(arg_masked) and arg_masked in tainted):
                flags.add(Flag(line_of(st.start + em.start()), FlagKind.OBFUSCATED_EXEC, em.group(1)))

        am = _ASSIGN.match(text)
        if am and _OBFUSCATION.search(raw[raw.find("=") + 1 :]):
            tainted.add(am.group(1))

    for lit in literals:
        value = lit.value
        if value == "cmdclass":
            flags.add(Flag(line_of(lit.start), FlagKind.CMDCLASS_OVERRIDE, "cmdclass"))
        ip = _IP_PORT.search(value)
        if ip:
            flags.add(Flag(line_of(lit.start), FlagKind.NETWORK_AT_INSTALL, ip.group(0)))
        elif _IP_ONLY.fullmatch(value) and _PORT_TAIL.match(masked, lit.end):
            flags.add(Flag(line_of(lit.start), FlagKind.NETWORK_AT_INSTALL, value.strip()))

    ordered = tuple(sorted(flags))
    return ScriptFindings(
        path=path,
        flags=ordered,
        imported_modules=frozenset(modules),
        risk_score=score(ordered, weights),
        warnings=tuple(warnings),
    )


def scan_file(
    path: str | Path,
    weights: Mapping[FlagKind, int] | None = None,
    dangerous: Iterable[str] = DANGEROUS_MODULES,
) -> ScriptFindings:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        logger.warning("cannot read %s: %s", path, exc)
        return ScriptFindings(path=str(path), error=f"{type(exc).__name__}: {exc.strerror or exc}")
    return scan_script(data, str(path), weights, dangerous)


def scan_tree(
    root: str | Path,
    pattern: str = "setup.py",
    weights: Mapping[FlagKind, int] | None = None,
    dangerous: Iterable[str] = DANGEROUS_MODULES,
    workers: int | None = None,
) -> list[ScriptFindings]:
    """Scan every file whose name matches ``pattern`` under ``root``, in sorted path order.

    A file ``root`` is scanned on its own.  Unreadable files produce an entry
    with ``error`` set instead of stopping the walk.
    """
    root = Path(root)
    if not root.exists():
        raise FileNotFoundError(f"no such file or directory: {root}")
    if root.is_file():
        paths = [root]
    else:
        paths = sorted(
            Path(dirpath, name)
            for dirpath, _, files in os.walk(root)
            for name in fnmatch.filter(files, pattern)
        )
    dangerous = frozenset(dangerous)
    if workers and workers > 1 and len(paths) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda p: scan_file(p, weights, dangerous), paths))
    return [scan_file(p, weights, dangerous) for p in paths]


def corpus_summary(findings: Iterable[ScriptFindings], top: int = 15) -> dict[str, Any]:
    """Per-flag script counts and fractions plus the most imported modules.

    Counts are per script file; scripts that could not be read are excluded
    from the denominator and reported separately.
    """
    findings = list(findings)
    scanned = [f for f in findings if f.error is None]
    per_kind = Counter(kind for f in scanned for kind in f.kinds)
    total = len(scanned)
    modules = Counter(m for f in scanned for m in f.imported_modules)
    return {
        "scripts": total,
        "errors": len(findings) - total,
        "flagged": sum(1 for f in scanned if f.flags),
        "flag_counts": {k.value: per_kind.get(k, 0) for k in FlagKind},
        "flag_fractions": {k.value: (per_kind.get(k, 0) / total if total else 0.0) for k in FlagKind},
        "top_modules": [[m, c] for m, c in sorted(modules.items(), key=lambda kv: (-kv[1], kv[0]))[:top]],
    }
