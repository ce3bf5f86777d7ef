"""Result CSV files: one provenance comment, a header row, data rows.

Floats are written with repr so files round-trip exactly; the reader skips
comment lines and returns the rows as strings, leaving typing to callers.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from . import __version__

COMMENT = "#"


def format_cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # plain repr even for numpy scalars
    return str(value)


def render_csv(header: list[str], rows, provenance: dict | None = None) -> str:
    buf = io.StringIO()
    if provenance:
        items = " ".join(f"{k}={v}" for k, v in sorted(provenance.items()))
        buf.write(f"{COMMENT} smalldev={__version__} {items}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: list[str], rows, provenance: dict | None = None) -> None:
    Path(path).write_text(render_csv(header, rows, provenance), encoding="utf-8")


def read_csv(path) -> tuple[list[str], list[list[str]], str | None]:
    """Return (header, data rows, provenance line or None)."""
    provenance = None
    rows: list[list[str]] = []
    header: list[str] | None = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith(COMMENT):
                if provenance is None:
                    provenance = line.rstrip("\n")
                continue
            parsed = next(csv.reader([line]))
            if header is None:
                header = parsed
            elif parsed:
                rows.append(parsed)
    if header is None:
        raise ValueError(f"no header row in {path}")
    return header, rows, provenance
