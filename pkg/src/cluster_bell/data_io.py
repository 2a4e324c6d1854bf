"""Measurement tables, raw count tables, the bundled dataset, and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .graphs import GraphError, Subset, parse_subset, subset_key
from .pauli import PauliString

TABLE_HEADER = ("stabilizer", "value", "sigma", "flags_B", "flags_beta", "flags_betaprime")
COUNT_HEADER = ("setting", "outcome", "count")
EXPRESSION_FLAGS = {"flags_B": "B", "flags_beta": "beta", "flags_betaprime": "betaprime"}

BUILTIN_DATASETS = {"table1": "table1.csv"}

# Values printed in the text of the experiment alongside Table I.
PUBLISHED_TABLE1 = {
    "fidelity": (0.6350, 0.0008),
    "witness": (-0.270, 0.002),
    "B": (7.018, 0.028),
    "beta": (2.325, 0.014),
    "betaprime": (2.881, 0.012),
    "prediction_range": (0.78, 0.94),
}


class TableError(ValueError):
    """Malformed table input; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class AnalysisError(Exception):
    """Data cannot support the requested analysis."""


class IncompleteTableError(AnalysisError):
    def __init__(self, missing: Iterable[Subset]):
        self.missing = sorted(missing, key=lambda s: (len(s), s))
        keys = ", ".join(subset_key(s) for s in self.missing)
        super().__init__(f"table is missing {len(self.missing)} subset(s): {keys}")


class CoverageError(AnalysisError):
    def __init__(self, target: str):
        self.target = target
        super().__init__(f"no measured setting is compatible with {target}")


@dataclass
class MeasurementTable:
    """Generator-subset -> (expectation value, one-sigma uncertainty)."""

    records: dict[Subset, tuple[float, float]] = field(default_factory=dict)
    flags: dict[Subset, frozenset] = field(default_factory=dict)
    annotations: dict[Subset, str] = field(default_factory=dict)
    dataset_id: str | None = None
    warnings: list[str] = field(default_factory=list)

    def __contains__(self, subset) -> bool:
        return _key(subset) in self.records

    def __len__(self) -> int:
        return len(self.records)

    def value(self, subset) -> float:
        return self.records[_key(subset)][0]

    def sigma(self, subset) -> float:
        return self.records[_key(subset)][1]

    def flagged(self, expression: str) -> set[Subset]:
        return {s for s, f in self.flags.items() if expression in f}

    def add(self, subset, value: float, sigma: float, flags=(), annotation: str = "") -> None:
        s = _key(subset)
        if s in self.records:
            raise TableError(f"duplicate subset {subset_key(s)}")
        if sigma < 0 or not math.isfinite(sigma) or not math.isfinite(value):
            raise TableError(f"invalid value/sigma for {subset_key(s)}")
        if s == () and (value != 1.0 or sigma != 0.0):
            raise TableError("identity record must have value 1 and sigma 0")
        if abs(value) > 1 + 3 * sigma:
            self.warnings.append(f"{subset_key(s)}: |value| {value} exceeds 1 + 3 sigma")
        self.records[s] = (float(value), float(sigma))
        if flags:
            self.flags[s] = frozenset(flags)
        if annotation:
            self.annotations[s] = annotation


def _key(subset) -> Subset:
    return parse_subset(subset) if isinstance(subset, str) else tuple(sorted(subset))


def _data_lines(text: str) -> list[tuple[int, str]]:
    return [(i, ln) for i, ln in enumerate(text.splitlines(), start=1)
            if ln.strip() and not ln.lstrip().startswith("#")]


def parse_table(text: str) -> MeasurementTable:
    lines = _data_lines(text)
    if not lines:
        raise TableError("table is empty")
    header_line, header = lines[0]
    cols = [c.strip() for c in next(csv.reader([header]))]
    for required in ("stabilizer", "value", "sigma"):
        if required not in cols:
            raise TableError(f"header lacks column {required!r}", header_line)
    table = MeasurementTable()
    for lineno, ln in lines[1:]:
        cells = next(csv.reader([ln]))
        if len(cells) < len(cols):
            cells += [""] * (len(cols) - len(cells))
        row = {c: v.strip() for c, v in zip(cols, cells)}
        try:
            subset = parse_subset(row["stabilizer"])
        except GraphError as exc:
            raise TableError(str(exc), lineno) from None
        try:
            value, sigma = float(row["value"]), float(row["sigma"])
        except ValueError:
            raise TableError(f"non-numeric value or sigma in {ln!r}", lineno) from None
        flags = {name for c, name in EXPRESSION_FLAGS.items() if row.get(c)}
        try:
            table.add(subset, value, sigma, flags, row.get("annotation", ""))
        except TableError as exc:
            raise TableError(str(exc), lineno) from None
    if not table.records:
        raise TableError("table has a header but no records", header_line)
    return table


def load_table(path) -> MeasurementTable:
    return parse_table(Path(path).read_text(encoding="utf-8"))


def load_builtin(name: str = "table1") -> MeasurementTable:
    try:
        fname = BUILTIN_DATASETS[name]
    except KeyError:
        raise TableError(f"unknown bundled dataset {name!r}") from None
    text = resources.files("cluster_bell").joinpath("data", fname).read_text(encoding="utf-8")
    table = parse_table(text)
    table.dataset_id = name
    return table


def format_table(table: MeasurementTable) -> str:
    """CSV text; numbers use the shortest repr so a reload is exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    has_notes = bool(table.annotations)
    w.writerow(TABLE_HEADER + (("annotation",) if has_notes else ()))
    for s in sorted(table.records, key=lambda s: (len(s), s)):
        value, sigma = table.records[s]
        fl = table.flags.get(s, frozenset())
        row = [subset_key(s), repr(value), repr(sigma)]
        row += [name if name in fl else "" for name in EXPRESSION_FLAGS.values()]
        if has_notes:
            row.append(table.annotations.get(s, ""))
        w.writerow(row)
    return buf.getvalue()


def write_table(table: MeasurementTable, path) -> None:
    Path(path).write_text(format_table(table), encoding="utf-8", newline="\n")


# -- raw counts --------------------------------------------------------------

@dataclass
class CountTable:
    """Rows of (setting letters, +-1 outcome tuple, count); qubit 1 first."""

    n: int
    rows: list[tuple[str, tuple[int, ...], int]] = field(default_factory=list)

    def add(self, setting: str, outcome: Iterable[int], count: int) -> None:
        setting = setting.replace(" ", "").upper()
        outcome = tuple(int(o) for o in outcome)
        if len(setting) != self.n or len(outcome) != self.n:
            raise TableError(f"setting/outcome length differs from n={self.n}")
        if set(setting) - set("XYZ") or set(outcome) - {1, -1}:
            raise TableError(f"invalid setting {setting!r} or outcome {outcome!r}")
        if count < 0:
            raise TableError("counts must be nonnegative")
        self.rows.append((setting, outcome, int(count)))

    @property
    def settings(self) -> list[str]:
        return sorted({r[0] for r in self.rows})


def _outcome_text(outcome) -> str:
    return "".join("+" if o == 1 else "-" for o in outcome)


def format_counts(counts: CountTable) -> str:
    lines = [",".join(COUNT_HEADER)]
    for setting, outcome, count in counts.rows:
        lines.append(f"{setting},{_outcome_text(outcome)},{count}")
    return "\n".join(lines) + "\n"


def write_counts(counts: CountTable, path) -> None:
    Path(path).write_text(format_counts(counts), encoding="utf-8", newline="\n")


def parse_counts(text: str) -> CountTable:
    lines = _data_lines(text)
    if not lines:
        raise TableError("count table is empty")
    if tuple(c.strip() for c in lines[0][1].split(",")) != COUNT_HEADER:
        raise TableError("count table header must be 'setting,outcome,count'", lines[0][0])
    table = None
    for lineno, ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 3:
            raise TableError(f"expected 3 fields, got {ln!r}", lineno)
        setting, outcome, count = parts
        setting = setting.replace(" ", "")
        try:
            signs = [{"+": 1, "-": -1}[c] for c in outcome]
            count = int(count)
        except (KeyError, ValueError):
            raise TableError(f"malformed outcome or count in {ln!r}", lineno) from None
        if table is None:
            table = CountTable(len(setting))
        try:
            table.add(setting, signs, count)
        except TableError as exc:
            raise TableError(str(exc), lineno) from None
    if table is None:
        raise TableError("count table has no rows", lines[0][0])
    return table


def load_counts(path) -> CountTable:
    return parse_counts(Path(path).read_text(encoding="utf-8"))


def sniff_kind(path) -> str:
    """``"counts"`` or ``"table"`` from the first non-comment line."""
    for _, ln in _data_lines(Path(path).read_text(encoding="utf-8")):
        return "counts" if ln.replace(" ", "").startswith("setting,outcome") else "table"
    raise TableError("input file is empty")


def counts_to_expectations(counts: CountTable, targets: Mapping[Subset, PauliString]) -> MeasurementTable:
    """Pool every compatible setting into a +-1 mean per target.

    A setting is compatible when it measures the target's letter on each qubit
    of the target's support. ``sigma = sqrt((1 - value**2) / N)``.
    """
    table = MeasurementTable()
    for subset, p in sorted(targets.items(), key=lambda kv: (len(kv[0]), kv[0])):
        if p.n != counts.n:
            raise TableError(f"target {p} has {p.n} qubits, counts have {counts.n}")
        if p.is_identity:
            table.add(subset, 1.0, 0.0)
            continue
        support = [q - 1 for q in p.support]
        letters = p.letters
        total = signed = 0
        for setting, outcome, count in counts.rows:
            if all(setting[i] == letters[i] for i in support):
                prod = math.prod(outcome[i] for i in support)
                signed += prod * count
                total += count
        if total == 0:
            raise CoverageError(f"{subset_key(subset)} ({p})")
        value = p.sign * signed / total
        table.add(subset, value, math.sqrt(max(0.0, 1 - value * value) / total))
    return table


# -- reports -------------------------------------------------------------------

def _fmt_number(x: float) -> str:
    d = Decimal(repr(float(x)))
    if d == 0:
        return "0.0"
    shift = d.adjusted() - 5
    d = d.quantize(Decimal(1).scaleb(shift), rounding=ROUND_HALF_EVEN)
    text = format(d, "f")
    return text + ".0" if "." not in text else text


def _emit(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_number(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_emit(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + _emit(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(report) -> str:
    """Deterministic JSON: sorted keys, 6 significant digits, half-even rounding."""
    doc = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    doc.setdefault("metadata", {})
    doc["metadata"].setdefault("artifact_version", __version__)
    return _emit(doc) + "\n"


def write_report(report, path) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8", newline="\n")


def load_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
