"""Machine-readable reports: assembly, schema validation and serialization."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from . import __version__

SCHEMA_ID = "poissonjet-report/1"


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads((resources.files(__package__) / "data" / "report.schema.json").read_text(encoding="utf-8"))


def make_report(command, seed: int, samples: int, tol: float, checks: list, data: dict | None = None,
                error: str | None = None, citations=()) -> dict:
    records = []
    for c in checks:
        rec = c.to_json() if hasattr(c, "to_json") else dict(c)
        rec.setdefault("citations", list(citations))
        records.append(rec)
    if error is not None:
        verdict = "ERROR"
    else:
        verdict = "PASS" if all(r["status"] == "PASS" for r in records) else "FAIL"
    out = {
        "schema": SCHEMA_ID,
        "tool": {"name": "poissonjet", "version": __version__},
        "command": list(command),
        "seed": seed,
        "samples": samples,
        "tol": tol,
        "verdict": verdict,
        "checks": records,
        "data": data or {},
    }
    if error is not None:
        out["error"] = error
    return out


def validate(report: dict) -> None:
    jsonschema.validate(report, schema())


def dumps(report: dict) -> str:
    """Canonical serialization: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
