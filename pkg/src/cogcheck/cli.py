"""Command-line driver: analyze, run and explore `.mabs` programs."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import contract_core as cc
from . import interpreter as I
from .errors import AnalysisError, Diagnostic, NonlinearError, ResourceLimit
from .frontend import TypedProgram, load_file
from .inference import SolvedProgram, analyse, main_display_names
from .lam_fixpoint import DEFAULT_SIZE_LIMIT, run_fixpoint
from .model_check import run_model_check, show_cp

SCHEMA_PATH = Path(__file__).with_name("report.schema.json")
SCHEMA_VERSION = "1.0"

EXIT_FREE, EXIT_DEADLOCK, EXIT_ERROR, EXIT_STEP_LIMIT, EXIT_RESOURCE = 0, 1, 2, 3, 4


def _color(text: str, code: str, stream=sys.stdout) -> str:
    if os.environ.get("DF_COLOR", "1") == "0" or not getattr(stream, "isatty", lambda: False)():
        return text
    return f"\x1b[{code}m{text}\x1b[0m"


def _verdict_text(v: str) -> str:
    return _color(v, "31" if v == "potential-deadlock" else "32")


def _ms(t0: float) -> float:
    return round((time.perf_counter() - t0) * 1000, 3)


def display_names(pair: cc.LamPair, main: tuple) -> dict:
    names = main_display_names(main)
    n = len(names)
    for rel in list(pair.present) + list(pair.future):
        for d in sorted(rel):
            for c in (d.c1, d.c2):
                if c != cc.START and c not in names:
                    n += 1
                    names[c] = f"c{n}"
    return names


def hint(name: str, origins: dict, lineage: dict) -> str:
    root = name
    while root in lineage:
        root = lineage[root]
    if root == cc.START:
        base = "cog of the main block"
    else:
        base = origins.get(root, "cog received through a method header")
    return base if root == name else f"{base} (copy made when unfolding a call)"


def _witness(wit: list, names: dict, origins: dict, lineage: dict) -> list:
    return [{"cog": names.get(c, c), "name": c, "hint": hint(c, origins, lineage)} for c in wit]


def _diag_json(d: Diagnostic) -> dict:
    return {"kind": d.kind, "code": d.code, "message": d.message, "line": d.span.line, "col": d.span.col}


# ---------------------------------------------------------------------------
# analyze


def analyze_program(tp: TypedProgram, backend: str = "fixpoint", saturation: int = 0,
                    size_limit: int = DEFAULT_SIZE_LIMIT, program: str | None = None) -> dict:
    """Run the pipeline on a typed program and build the report dictionary."""
    t0 = time.perf_counter()
    solved = analyse(tp)
    infer_ms = _ms(t0)
    report: dict = {
        "schema": SCHEMA_VERSION,
        "program": program or tp.name,
        "methods": solved.method_list(),
        "backend": backend,
        "results": [],
        "warnings": list(solved.warnings),
        "timing_ms": {"inference": infer_ms},
        "dumps": {"contracts": solved.show_cct() + [f"main {solved.show_main()}"]},
    }
    if backend in ("fixpoint", "both"):
        report["results"].append(_fixpoint_result(solved, saturation, size_limit, report))
    if backend in ("modelcheck", "both"):
        report["results"].append(_modelcheck_result(solved, report))
    ok = [r for r in report["results"] if "error" not in r]
    errors = [r for r in report["results"] if "error" in r]
    report["verdict"] = ("error" if errors else
                         "potential-deadlock" if any(r["verdict"] == "potential-deadlock" for r in ok)
                         else "deadlock-free")
    report["saturated"] = any(r.get("saturated", False) for r in ok)
    wit = next((r["witness"] for r in ok if r["witness"]), [])
    report["witness"] = wit
    report["timing_ms"]["total"] = _ms(t0)
    return report


def _fixpoint_result(solved: SolvedProgram, saturation: int, size_limit: int, report: dict) -> dict:
    t0 = time.perf_counter()
    try:
        v = run_fixpoint(solved, saturation, size_limit)
    except AnalysisError as e:
        return {"backend": "fixpoint", "error": _diag_json(e.diagnostics[0]), "time_ms": _ms(t0)}
    names = display_names(v.lam, solved.main)
    act = v.result
    report["dumps"]["lams"] = [
        {f"{c}.{m}": cc.show_param(p) for (c, m), p in table.items()} for table in act.history
    ]
    return {
        "backend": "fixpoint",
        "verdict": v.verdict,
        "saturated": v.saturated,
        "saturate_at": saturation,
        "iterations": act.converged_at,
        "lam": cc.show_pair(v.lam, names),
        "witness": _witness(v.witness, names, solved.origins, act.lineage),
        "table": {f"{c}.{m}": cc.show_param(p) for (c, m), p in act.table.items()},
        "time_ms": _ms(t0),
    }


def _modelcheck_result(solved: SolvedProgram, report: dict) -> dict:
    t0 = time.perf_counter()
    try:
        v = run_model_check(solved)
    except NonlinearError as e:
        d = e.diagnostics[0]
        return {"backend": "modelcheck", "error": _diag_json(d), "time_ms": _ms(t0)}
    except AnalysisError as e:
        return {"backend": "modelcheck", "error": _diag_json(e.diagnostics[0]), "time_ms": _ms(t0)}
    names = display_names(v.lam, solved.main)
    report["dumps"]["cp"] = show_cp(v.evaluation.cp, names)
    return {
        "backend": "modelcheck",
        "verdict": v.verdict,
        "saturated": False,
        "unfoldings": v.evaluation.unfoldings,
        "lam": cc.show_pair(v.lam, names),
        "witness": _witness(v.witness, names, solved.origins, v.evaluation.lineage),
        "mutations": [
            {"method": f"{c}.{m}", "mutation": ri.mutation.show(), "order": ri.order}
            for (c, m), ri in v.info.items() if ri.recursive
        ],
        "time_ms": _ms(t0),
    }


def _error_report(program: str, err: AnalysisError) -> dict:
    return {"schema": SCHEMA_VERSION, "program": program, "verdict": "error",
            "diagnostics": [_diag_json(d) for d in err.diagnostics]}


def _print_diagnostics(program: str, err: AnalysisError) -> None:
    for d in err.diagnostics:
        print(d.render(program), file=sys.stderr)


def cmd_analyze(args) -> int:
    try:
        tp = load_file(args.file)
        report = analyze_program(tp, args.backend, args.saturation, args.size_limit, args.file)
    except AnalysisError as e:
        if args.format == "json":
            print(json.dumps(_error_report(args.file, e), indent=2))
        else:
            _print_diagnostics(args.file, e)
        return EXIT_ERROR
    if args.format == "json":
        if not args.dump_contracts:
            report["dumps"].pop("contracts", None)
        if not args.dump_lams:
            report["dumps"].pop("lams", None)
        if not args.dump_cp:
            report["dumps"].pop("cp", None)
        print(json.dumps(report, indent=2))
    else:
        _print_text(report, args)
    if report["verdict"] == "error":
        return EXIT_ERROR
    return EXIT_DEADLOCK if report["verdict"] == "potential-deadlock" else EXIT_FREE


def _print_text(report: dict, args) -> None:
    out = [f"program: {report['program']}", f"methods: {', '.join(report['methods']) or '-'}"]
    if args.dump_contracts:
        out.append("contracts:")
        out += [f"  {line}" for line in report["dumps"]["contracts"]]
    if args.dump_lams and "lams" in report["dumps"]:
        out.append("approximants:")
        out += _lam_table(report["dumps"]["lams"])
    if args.dump_cp and "cp" in report["dumps"]:
        out.append(f"evaluated pair: {report['dumps']['cp']}")
    for r in report["results"]:
        if "error" in r:
            e = r["error"]
            out.append(f"{r['backend']}: error: {e['code']}: {e['message']}")
            continue
        extra = " (saturated: answer may be imprecise)" if r.get("saturated") else ""
        out.append(f"{r['backend']}: {_verdict_text(r['verdict'])}{extra} [{r['time_ms']} ms]")
        out.append(f"  lam: {r['lam']}")
        if r["witness"]:
            out.append("  cycle: " + " -> ".join(w["cog"] for w in r["witness"]))
            seen = set()
            for w in r["witness"]:
                if w["cog"] not in seen:
                    seen.add(w["cog"])
                    out.append(f"    {w['cog']}: {w['hint']}")
    for w in report["warnings"]:
        out.append(f"warning: {w}")
    out.append(f"verdict: {_verdict_text(report['verdict'])}")
    print("\n".join(out))


def _lam_table(history: list) -> list:
    methods = list(history[0]) if history else []
    width = max((len(m) for m in methods), default=0)
    rows = []
    for m in methods:
        cells = [f"{k}: {table[m]}" for k, table in enumerate(history)]
        rows.append(f"  {m.ljust(width)}  " + " | ".join(cells))
    return rows


# ---------------------------------------------------------------------------
# run / explore


def cmd_run(args) -> int:
    try:
        tp = load_file(args.file)
    except AnalysisError as e:
        _print_diagnostics(args.file, e)
        return EXIT_ERROR
    t0 = time.perf_counter()
    tr = I.run(tp, args.seed, args.steps)
    elapsed = _ms(t0)
    if args.format == "json":
        print(json.dumps({"program": args.file, "seed": args.seed, "verdict": tr.verdict, "steps": tr.steps,
                          "time_ms": elapsed, "trace": [lab.json() for lab in tr.labels]}, indent=2))
    else:
        for k, lab in enumerate(tr.labels, 1):
            print(f"step {k}: {lab}")
        print(f"result: {tr.verdict} after {tr.steps} steps")
        if tr.verdict in ("deadlocked", "stuck"):
            print(tr.final.show())
    return {"terminated": EXIT_FREE, "step-limit": EXIT_STEP_LIMIT}.get(tr.verdict, EXIT_DEADLOCK)


def cmd_explore(args) -> int:
    try:
        tp = load_file(args.file)
    except AnalysisError as e:
        _print_diagnostics(args.file, e)
        return EXIT_ERROR
    t0 = time.perf_counter()
    try:
        ex = I.explore(tp, args.depth, args.state_cap)
    except ResourceLimit as e:
        print(f"{args.file}: {e.code}: {e.message}", file=sys.stderr)
        return EXIT_RESOURCE
    summary = ex.json()
    summary["time_ms"] = _ms(t0)
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    else:
        state = _color("deadlock reachable", "31") if ex.deadlock_reachable else _color("no deadlock", "32")
        print(f"{state} within {args.depth} steps ({ex.states} states, {summary['time_ms']} ms)")
        print(f"terminating schedule found: {'yes' if ex.terminating_reachable else 'no'}")
        if ex.witness is not None:
            for k, lab in enumerate(ex.witness, 1):
                print(f"step {k}: {lab}")
            print(ex.witness_config.show())
    return EXIT_DEADLOCK if ex.deadlock_reachable else EXIT_FREE


# ---------------------------------------------------------------------------
# argument parsing


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _natural(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cogcheck", description="Deadlock analysis for actor programs with futures.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="static deadlock analysis")
    a.add_argument("file")
    a.add_argument("--backend", choices=["fixpoint", "modelcheck", "both"], default="fixpoint")
    a.add_argument("--saturation", type=_natural, default=0, help="saturation point n (default 0)")
    a.add_argument("--format", choices=["text", "json"], default="text")
    a.add_argument("--dump-contracts", action="store_true")
    a.add_argument("--dump-lams", action="store_true")
    a.add_argument("--dump-cp", action="store_true")
    a.add_argument("--size-limit", type=_positive, default=DEFAULT_SIZE_LIMIT, help=argparse.SUPPRESS)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("run", help="execute one seeded schedule")
    r.add_argument("file")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--steps", type=_positive, default=10_000)
    r.add_argument("--format", choices=["text", "json"], default="text")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("explore", help="explore every schedule up to a depth")
    e.add_argument("file")
    e.add_argument("--depth", type=_positive, default=40)
    e.add_argument("--state-cap", type=_positive, default=200_000)
    e.add_argument("--format", choices=["text", "json"], default="text")
    e.set_defaults(func=cmd_explore)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as e:
        print(f"cogcheck: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
