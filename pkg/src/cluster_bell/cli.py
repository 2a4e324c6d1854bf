"""Batch command line: stabilizers, analyze, simulate, lhv, report-diff.

Exit status is 0 on success, 1 for invalid flags or unreadable inputs and 2
when the data cannot support the analysis (incomplete table, coverage).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import EXPRESSION_NAMES, builtin_expression, full_report, lhv_bound, observables, quantum_max
from .data_io import (
    PUBLISHED_TABLE1,
    AnalysisError,
    CountTable,
    TableError,
    counts_to_expectations,
    dumps_report,
    load_builtin,
    load_counts,
    load_report,
    load_table,
    sniff_kind,
    write_counts,
    write_report,
    write_table,
)
from .graphs import GraphError, GraphSpec, builtin_graph, generators, stabilizer_group, subset_key, tilde_frame
from .pauli import PauliError
from .sim import NoiseSpec, SimulationError, apply_noise, build_named_state, sample_setting


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_stabilizer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", nargs="+", default=["lc6"], metavar="GRAPH",
                   help="he6, lc6, or 'edge-list <path>' (default lc6)")
    p.add_argument("--frame", choices=["plain", "tilde"], default="tilde")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cluster-bell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("stabilizers", help="list all subset products of the graph generators")
    _add_stabilizer_flags(p)
    p.set_defaults(frame="plain")

    p = sub.add_parser("analyze", help="fidelity, witness and Bell values from a table or counts")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path, help="table CSV or count CSV")
    src.add_argument("--data", choices=["table1"], help="bundled dataset")
    _add_stabilizer_flags(p)
    p.add_argument("--expr", action="append", choices=EXPRESSION_NAMES)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("simulate", help="sample the lab state and analyze the estimates")
    p.add_argument("--state", choices=["he6-tilde", "lc6-tilde"], default="lc6-tilde")
    p.add_argument("--noise-white", type=float, default=1.0, metavar="P",
                   help="weight on the pure state (1 = noiseless)")
    p.add_argument("--dephase", default="", metavar="Q:PROB,...")
    p.add_argument("--shots", type=int, default=10000, help="shots per measurement setting")
    p.add_argument("--seed", type=int)
    p.add_argument("--exact", action="store_true", help="use exact expectations instead of sampling")
    p.add_argument("--expr", action="append", choices=EXPRESSION_NAMES)
    p.add_argument("--table", type=Path, help="write the estimated table CSV here")
    p.add_argument("--counts", type=Path, help="write the raw count CSV here")
    p.add_argument("--report", type=Path)

    p = sub.add_parser("lhv", help="local-hidden-variable bounds by exhaustive enumeration")
    p.add_argument("--expr", action="append", choices=EXPRESSION_NAMES)
    _add_stabilizer_flags(p)
    p.add_argument("--report", type=Path)

    p = sub.add_parser("report-diff", help="per-field deltas between two JSON reports")
    p.add_argument("reports", nargs=2, type=Path)
    p.add_argument("--report", type=Path)
    return parser


def _graph(tokens: list[str]) -> tuple[GraphSpec, str]:
    if tokens[0].lower() in ("he6", "lc6") and len(tokens) == 1:
        return builtin_graph(tokens[0]), tokens[0].lower()
    if tokens[0] == "edge-list" and len(tokens) == 2:
        try:
            return GraphSpec.from_text(Path(tokens[1]).read_text(encoding="utf-8")), tokens[1]
        except OSError as exc:
            raise UsageError(f"--graph: cannot read {tokens[1]}: {exc.strerror}") from None
        except GraphError as exc:
            raise UsageError(f"--graph: {exc}") from None
    raise UsageError(f"--graph: expected he6, lc6 or 'edge-list <path>', got {' '.join(tokens)!r}")


def _stabilizers(args):
    g, name = _graph(args.graph)
    frame = tilde_frame() if args.frame == "tilde" else None
    if frame and g.n < max(frame):
        raise UsageError(f"--frame tilde needs at least {max(frame)} qubits")
    return stabilizer_group(generators(g), frame), name


def _expressions(names, stabs):
    if stabs.n != 6:
        raise UsageError("--expr: Bell expressions are defined for six-qubit graphs")
    return [builtin_expression(n, stabs) for n in (names or EXPRESSION_NAMES)]


def _print_report(report, out) -> None:
    f, sf = report.fidelity
    w, sw = report.witness
    print(f"fidelity   F = {f:.4f} +- {sf:.4f}", file=out)
    sig = report.witness_sigmas
    tail = f"  (negative by {sig:.0f} sigma)" if sig is not None else ""
    print(f"witness    W = {w:.4f} +- {sw:.4f}{tail}", file=out)
    for r in report.expressions:
        v = r.violation_sigmas
        tail = f", {v:.1f} sigma" if v is not None else ""
        flag = "violated" if r.violated else "not violated"
        print(f"{r.name:<10} {r.value:.4f} +- {r.sigma:.4f}  LHV {r.lhv_bound:g}  "
              f"QM {r.quantum_max:g}  D = {r.degree:.4f}  {flag}{tail}", file=out)
    for name, sec in report.predictions.items():
        print(f"predictions for {name}: {sec['min']:.3f} .. {sec['max']:.3f}", file=out)
    for note in report.notes:
        print(f"note: {note}", file=out)


def cmd_stabilizers(args, out) -> int:
    stabs, _ = _stabilizers(args)
    for subset, p in stabs.items():
        print(f"{subset_key(subset)}  {p}", file=out)
    return 0


def cmd_analyze(args, out) -> int:
    stabs, graph_name = _stabilizers(args)
    exprs = _expressions(args.expr, stabs)
    reference = None
    if args.data:
        table = load_builtin(args.data)
        reference = PUBLISHED_TABLE1
        meta = {"dataset": args.data}
    else:
        try:
            kind = sniff_kind(args.input)
            if kind == "counts":
                table = counts_to_expectations(load_counts(args.input), dict(stabs.items()))
            else:
                table = load_table(args.input)
        except OSError as exc:
            raise UsageError(f"--input: cannot read {args.input}: {exc.strerror}") from None
        except TableError as exc:
            raise UsageError(f"--input: {exc}") from None
        meta = {"dataset": args.input.name, "input_kind": kind}
    meta.update({"graph": graph_name, "frame": args.frame})
    report = full_report(table, exprs, reference=reference, metadata=meta)
    for w in table.warnings:
        print(f"warning: {w}", file=out)
    _print_report(report, out)
    if args.report:
        write_report(report, args.report)
    return 0


def _parse_dephase(text: str) -> dict[int, float]:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            q, prob = item.split(":")
            out[int(q)] = float(prob)
        except ValueError:
            raise UsageError(f"--dephase: expected 'qubit:prob', got {item!r}") from None
    return out


def measurement_settings(stabs) -> list[str]:
    """One setting per non-identity stabilizer, unmeasured qubits read in Z."""
    return sorted({p.letters.replace("I", "Z") for s, p in stabs.items() if s})


def simulate_counts(state, settings, shots: int, seed: int) -> CountTable:
    counts = CountTable(state.n)
    children = np.random.SeedSequence(seed).spawn(len(settings))
    for setting, child in zip(settings, children):
        drawn = sample_setting(state, {q + 1: c for q, c in enumerate(setting)}, shots, child)
        for outcome in sorted(drawn, reverse=True):
            counts.add(setting, outcome, drawn[outcome])
    return counts


def cmd_simulate(args, out) -> int:
    if args.shots < 1:
        raise UsageError("--shots must be a positive integer")
    if not args.exact and args.seed is None:
        raise UsageError("--seed is required when sampling")
    if args.exact and (args.counts or args.table):
        raise UsageError("--counts/--table need sampled data; drop --exact")
    try:
        noise = NoiseSpec(args.noise_white, _parse_dephase(args.dephase))
    except SimulationError as exc:
        flag = "--noise-white" if "white" in str(exc) else "--dephase"
        raise UsageError(f"{flag}: {exc}") from None
    if any(not 1 <= q <= 6 for q in noise.dephasing):
        raise UsageError("--dephase: qubits must lie in 1..6")
    state = build_named_state(args.state.replace("-", "_"))
    if noise.white_noise_p < 1 or noise.dephasing:
        state = apply_noise(state, noise)
    stabs = stabilizer_group(generators(builtin_graph(args.state[:3])), tilde_frame())
    exprs = _expressions(args.expr, stabs)
    meta = {
        "state": args.state,
        "noise_white": noise.white_noise_p,
        "dephasing": {str(q): v for q, v in sorted(noise.dephasing.items())},
    }
    if args.exact:
        source = state
        meta["mode"] = "exact"
    else:
        settings = measurement_settings(stabs)
        counts = simulate_counts(state, settings, args.shots, args.seed)
        source = counts_to_expectations(counts, dict(stabs.items()))
        meta.update({"mode": "sampled", "shots_per_setting": args.shots,
                     "settings": len(settings), "seed": args.seed})
        if args.counts:
            write_counts(counts, args.counts)
        if args.table:
            write_table(source, args.table)
    report = full_report(source, exprs, metadata=meta)
    _print_report(report, out)
    if args.report:
        write_report(report, args.report)
    return 0


def cmd_lhv(args, out) -> int:
    stabs, graph_name = _stabilizers(args)
    rows = []
    for expr in _expressions(args.expr, stabs):
        t0 = time.perf_counter()
        bound = lhv_bound(expr)
        elapsed = time.perf_counter() - t0
        k = len(observables(expr.strings()))
        qmax = quantum_max(expr)
        print(f"{expr.name:<10} LHV bound {bound:g} over 2^{k} assignments ({elapsed:.2f} s); "
              f"quantum max {qmax:g}", file=out)
        rows.append({"name": expr.name, "lhv_bound": bound, "observables": k,
                     "terms": len(expr.terms), "quantum_max": qmax})
    if args.report:
        doc = {"lhv": rows, "metadata": {"graph": graph_name, "frame": args.frame}}
        args.report.write_text(dumps_report(doc), encoding="utf-8")
    return 0


def _flatten(doc, prefix="") -> dict:
    flat = {}
    if isinstance(doc, dict):
        for k, v in doc.items():
            flat.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            key = v.get("name", str(i)) if isinstance(v, dict) else str(i)
            flat.update(_flatten(v, f"{prefix}{key}."))
    else:
        flat[prefix[:-1]] = doc
    return flat


def diff_reports(a: dict, b: dict) -> dict:
    fa, fb = _flatten(a), _flatten(b)
    out = {}
    for key in sorted(set(fa) | set(fb)):
        va, vb = fa.get(key), fb.get(key)
        if va == vb:
            continue
        entry = {"a": va, "b": vb}
        numeric = all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (va, vb))
        if numeric:
            entry["delta"] = float(vb - va)
        out[key] = entry
    return out


def cmd_report_diff(args, out) -> int:
    docs = []
    for path in args.reports:
        try:
            docs.append(load_report(path))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read report {path}: {exc}") from None
    delta = diff_reports(*docs)
    if not delta:
        print("reports are identical", file=out)
    for key, entry in delta.items():
        tail = f"  delta {entry['delta']:+.6g}" if "delta" in entry else ""
        print(f"{key}: {entry['a']} -> {entry['b']}{tail}", file=out)
    if args.report:
        args.report.write_text(dumps_report({"differences": delta}), encoding="utf-8")
    return 0


COMMANDS = {
    "stabilizers": cmd_stabilizers,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "lhv": cmd_lhv,
    "report-diff": cmd_report_diff,
}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=err)
        return 1
    except (GraphError, PauliError, SimulationError) as exc:
        print(f"error: {exc}", file=err)
        return 1
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=err)
        return 2


def main() -> None:
    sys.exit(run())
