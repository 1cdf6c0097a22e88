"""Result tables and their file formats (CSV with metadata, .dat blocks, JSON)."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidConfiguration


@dataclass
class Table:
    """Rows of one command's output plus provenance.

    ``dat_groups``/``dat_x``/``dat_y`` choose how the table is written as
    two-column plot data: one block per distinct group tuple.
    """

    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    dat_groups: tuple[str, ...] = ()
    dat_x: str = ""
    dat_y: str = ""

    def add(self, **row) -> None:
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    if value is None:
        return ""
    return str(value)


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    for key, value in table.metadata.items():
        buf.write(f"# {key}: {_fmt(value) if not isinstance(value, (list, dict)) else json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(row.get(c)) for c in table.columns])
    return buf.getvalue()


def to_dat(table: Table) -> str:
    if not table.dat_x or not table.dat_y:
        raise InvalidConfiguration("this output has no two-column plot form; use .csv or .json")
    blocks: dict[tuple, list[tuple]] = {}
    for row in table.rows:
        key = tuple(row.get(g) for g in table.dat_groups)
        blocks.setdefault(key, []).append((row[table.dat_x], row[table.dat_y]))
    out = []
    for key in table.metadata:
        out.append(f"# {key}: {_fmt(table.metadata[key]) if not isinstance(table.metadata[key], (list, dict)) else json.dumps(table.metadata[key], sort_keys=True)}")
    out.append(f"# columns: {table.dat_x} {table.dat_y}")
    for key, points in blocks.items():
        label = " ".join(f"{g}={_fmt(v)}" for g, v in zip(table.dat_groups, key))
        out.append("")
        out.append(f"# {label}" if label else "#")
        out.extend(f"{_fmt(x)} {_fmt(y)}" for x, y in points)
    return "\n".join(out) + "\n"


def to_json(table: Table) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return _fmt(v)
        return v

    payload = {
        "metadata": table.metadata,
        "columns": table.columns,
        "rows": [{c: clean(r.get(c)) for c in table.columns} for r in table.rows],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def to_text(table: Table) -> str:
    cells = [table.columns] + [[_short(r.get(c)) for c in table.columns] for r in table.rows]
    widths = [max(len(row[j]) for row in cells) for j in range(len(table.columns))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines) + "\n"


def _short(value) -> str:
    if isinstance(value, float) and math.isfinite(value):
        return f"{value:.6g}" if abs(value) < 1e6 else f"{value:.6e}"
    return _fmt(value)


def render(table: Table, path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return to_csv(table)
    if suffix == ".dat":
        return to_dat(table)
    if suffix == ".json":
        return to_json(table)
    raise InvalidConfiguration(f"unknown output format {suffix!r}; use .csv, .dat or .json")


def write(table: Table, path: str | Path | None) -> None:
    """Write to ``path`` (format from the extension) or pretty-print to stdout."""
    if path is None or str(path) == "-":
        sys.stdout.write(to_text(table))
        return
    text = render(table, path)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)
