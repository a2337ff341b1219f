"""Named worked examples with frozen expected verdicts.

Each entry is a JSON file in ``data/catalog`` with keys ``name``, ``kind``,
``citation``, ``input`` and ``expected``.  The expected record holds the
overall ``status``, per-check statuses under ``checks`` and exact report data
under ``data``, addressed by dotted paths into the pipeline output, and
optionally exact residual lists of named checks under ``residuals``.
"""
from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass
from importlib import resources

from .pipelines import DEFAULT_ACTION, run


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str
    citation: str
    input: dict
    expected: dict

    @classmethod
    def from_json(cls, doc: dict) -> "CatalogEntry":
        try:
            entry = cls(doc["name"], doc["kind"], doc["citation"], doc["input"], doc["expected"])
        except KeyError as exc:
            raise CatalogError(f"catalog entry is missing {exc}") from None
        if entry.kind not in DEFAULT_ACTION:
            raise CatalogError(f"entry {entry.name}: unknown kind {entry.kind!r}")
        if entry.expected.get("status") not in ("PASS", "FAIL"):
            raise CatalogError(f"entry {entry.name}: expected status must be PASS or FAIL")
        return entry


def load_catalog() -> list:
    root = resources.files(__package__) / "data" / "catalog"
    entries = []
    for item in root.iterdir():
        if item.name.endswith(".json"):
            entries.append(CatalogEntry.from_json(json.loads(item.read_text(encoding="utf-8"))))
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise CatalogError("duplicate catalog entry names")
    return sorted(entries, key=lambda e: e.name)


def select(entries: list, pattern: str | None) -> list:
    if not pattern:
        return entries
    chosen = [e for e in entries if fnmatch.fnmatchcase(e.name, pattern)]
    if not chosen:
        raise CatalogError(f"no catalog entry matches {pattern!r}")
    return chosen


def lookup(data, path: str):
    node = data
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise KeyError(path)
        node = node[part]
    return node


def compare(entry: CatalogEntry, status: str, checks: dict, data: dict, residuals: dict | None = None) -> list:
    exp = entry.expected
    out = []
    if status != exp["status"]:
        out.append(f"status {status}, expected {exp['status']}")
    for name, want in exp.get("checks", {}).items():
        got = checks.get(name)
        if got != want:
            out.append(f"check {name}: {got or 'missing'}, expected {want}")
    for name, want in exp.get("residuals", {}).items():
        got = (residuals or {}).get(name)
        if got != want:
            out.append(f"residuals of {name}: {got}, expected {want}")
    for path, want in exp.get("data", {}).items():
        try:
            got = lookup(data, path)
        except KeyError:
            out.append(f"data {path}: missing")
            continue
        if got != want:
            out.append(f"data {path}: {json.dumps(got, sort_keys=True)} != {json.dumps(want, sort_keys=True)}")
    return out


def run_entry(entry: CatalogEntry, seed: int = 0, samples: int = 128, tol: float = 1e-9) -> dict:
    v = run(entry.kind, DEFAULT_ACTION[entry.kind], entry.input, seed, samples, tol)
    checks = {c.name: c.status for c in v.checks}
    mismatches = compare(entry, v.status, checks, v.data, {c.name: list(c.residuals) for c in v.checks})
    return {
        "name": entry.name,
        "kind": entry.kind,
        "citation": entry.citation,
        "status": v.status,
        "expected_status": entry.expected["status"],
        "match": not mismatches,
        "mismatches": mismatches,
        "checks": [dict(c.to_json(), citations=[entry.citation]) for c in v.checks],
        "data": v.data,
    }


def run_catalog(pattern: str | None = None, seed: int = 0, samples: int = 128, tol: float = 1e-9) -> dict:
    entries = select(load_catalog(), pattern)
    results = [run_entry(e, seed, samples, tol) for e in entries]
    bad = sum(not r["match"] for r in results)
    return {"entries": results, "mismatches": bad, "verdict": "PASS" if bad == 0 else "FAIL"}
