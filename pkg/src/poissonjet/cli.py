"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a mathematical check fails,
2 on input, parse or usage errors.
"""
from __future__ import annotations

import argparse
import json
import sys

from .catalog import CatalogError, load_catalog, run_catalog, select
from .pipelines import INPUT_ERRORS, run
from .report import dumps, make_report, validate
from .verdict import Check

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

# (group, action) -> pipeline (kind, action)
COMMANDS = {
    ("check", "poisson"): ("poisson", "check"),
    ("jet", "compute"): ("jet", "compute"),
    ("jet", "check"): ("jet", "check"),
    ("algebroid", "from-jet"): ("algebroid", "from-jet"),
    ("algebroid", "check"): ("algebroid", "check"),
    ("coupling", "check"): ("coupling", "check"),
    ("codim1", "check"): ("codim1", "check"),
    ("model", "build"): ("model", "build"),
    ("model", "verify"): ("model", "verify"),
    ("homotopy", "primitive"): ("homotopy", "primitive"),
    ("groupoid", "check"): ("groupoid", "check"),
}

# commands whose main output is data rather than a verdict
PRODUCERS = {("jet", "compute"), ("algebroid", "from-jet"), ("model", "build"), ("homotopy", "primitive")}


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _tol(text: str) -> float:
    v = float(text)
    if not v > 0 or v != v or v == float("inf"):
        raise argparse.ArgumentTypeError("tolerance must be a positive number")
    return v


def _common(defaults: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    p.add_argument("--json", metavar="OUT", default=d(None), help="write the machine report to OUT ('-' for stdout)")
    p.add_argument("--seed", type=_seed, default=d(0), help="seed for every random choice (default 0)")
    p.add_argument("--samples", type=_positive, default=d(128), help="samples for numeric checks (default 128)")
    p.add_argument("--tol", type=_tol, default=d(1e-9), help="tolerance for numeric checks (default 1e-9)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poissonjet", parents=[_common(True)],
                                     description="Build and verify first-order local models of Poisson structures.")
    leaf = _common(False)
    groups = parser.add_subparsers(dest="group", metavar="COMMAND", required=True)
    actions: dict = {}
    for group, action in COMMANDS:
        actions.setdefault(group, []).append(action)
    for group, acts in actions.items():
        gp = groups.add_parser(group, help=f"{group} commands")
        sub = gp.add_subparsers(dest="action", metavar="ACTION", required=True)
        for action in acts:
            ap = sub.add_parser(action, parents=[leaf], help=f"{group} {action} <file>")
            ap.add_argument("file", help="JSON document")
    cp = groups.add_parser("catalog", help="worked examples")
    sub = cp.add_subparsers(dest="action", metavar="ACTION", required=True)
    sub.add_parser("list", parents=[leaf], help="list catalog entries")
    rp = sub.add_parser("run", parents=[leaf], help="run catalog entries")
    rp.add_argument("name", nargs="?", help="entry name or glob pattern")
    return parser


def _emit(report: dict, target: str | None) -> None:
    validate(report)
    if target is None:
        return
    text = dumps(report)
    if target == "-":
        sys.stdout.write(text)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)


def _print_checks(checks: list, out) -> None:
    for c in checks:
        line = f"{c['status']}  {c['name']}"
        if c["status"] == "FAIL" and c["residuals"]:
            line += ": " + "; ".join(c["residuals"][:4])
            if len(c["residuals"]) > 4:
                line += f"; ... ({len(c['residuals'])} residuals)"
        print(line, file=out)


def _load(path: str):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _catalog(args, argv, out) -> int:
    if args.action == "list":
        entries = load_catalog()
        for e in entries:
            print(f"{e.name:26s} {e.kind:10s} expect {e.expected['status']:4s}  {e.citation}", file=out)
        data = {"entries": [{"name": e.name, "kind": e.kind, "citation": e.citation,
                             "expected_status": e.expected["status"]} for e in entries]}
        _emit(make_report(argv, args.seed, args.samples, args.tol, [], data), args.json)
        return EXIT_PASS
    res = run_catalog(args.name, args.seed, args.samples, args.tol)
    checks = [Check(r["name"], r["match"], "catalog", r["mismatches"]).to_json() | {"citations": [r["citation"]]}
              for r in res["entries"]]
    for r in res["entries"]:
        tag = "ok " if r["match"] else "MISMATCH"
        print(f"{tag:8s} {r['name']:26s} {r['status']} (expected {r['expected_status']})", file=out)
        for m in r["mismatches"]:
            print(f"         {m}", file=out)
    report = make_report(argv, args.seed, args.samples, args.tol, checks,
                         {"entries": res["entries"], "mismatches": res["mismatches"]})
    print(f"verdict: {report['verdict']} ({res['mismatches']} mismatches)", file=out)
    _emit(report, args.json)
    return EXIT_PASS if report["verdict"] == "PASS" else EXIT_FAIL


def main(argv: list | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = sys.stderr if args.json == "-" else sys.stdout
    try:
        if args.group == "catalog":
            return _catalog(args, argv, out)
        kind, action = COMMANDS[(args.group, args.action)]
        doc = _load(args.file)
        v = run(kind, action, doc, args.seed, args.samples, args.tol)
    except (OSError, json.JSONDecodeError, CatalogError) + INPUT_ERRORS as exc:
        msg = f"{type(exc).__name__}: {exc}"
        print(f"error: {msg}", file=sys.stderr)
        if args.json is not None:
            _emit(make_report(argv, args.seed, args.samples, args.tol, [], error=msg), args.json)
        return EXIT_INPUT
    citation = doc.get("citation") if isinstance(doc.get("citation"), str) else None
    report = make_report(argv, args.seed, args.samples, args.tol, v.checks, v.data,
                         citations=[citation] if citation else [])
    _print_checks(report["checks"], out)
    if (args.group, args.action) in PRODUCERS:
        print(json.dumps(v.data, indent=2, sort_keys=True, ensure_ascii=False), file=out)
    print(f"verdict: {report['verdict']}", file=out)
    _emit(report, args.json)
    return EXIT_PASS if report["verdict"] == "PASS" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
