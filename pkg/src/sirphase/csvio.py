"""CSV files with ``#`` provenance headers.

Numbers are written with 17 significant digits so that every double
round-trips exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO


class CsvFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def write_csv(stream: TextIO, header: str, columns: Sequence[str],
              rows: Iterable[Sequence]) -> int:
    for line in header.splitlines():
        stream.write(f"# {line}\n" if line else "#\n")
    stream.write(",".join(columns) + "\n")
    count = 0
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")
        count += 1
    return count


@dataclass
class CsvTable:
    header: str
    columns: list[str]
    rows: list[list]

    def column(self, name: str) -> list:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


def read_csv(text: str, text_columns: Sequence[str] = ("bin", "point")) -> CsvTable:
    """Parse a CSV written by :func:`write_csv`.

    Cells of ``text_columns`` stay strings, everything else must parse as a
    float. Raises :class:`CsvFormatError` naming the offending line.
    """
    header_lines, columns, rows = [], None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        if columns is None and raw.startswith("#"):
            header_lines.append(raw[1:].lstrip(" ") if raw.startswith("# ") else raw[1:])
            continue
        if not raw.strip():
            continue
        fields = [f.strip() for f in raw.split(",")]
        if columns is None:
            if any(not f for f in fields):
                raise CsvFormatError("empty column name", lineno)
            columns = fields
            continue
        if len(fields) != len(columns):
            raise CsvFormatError(f"expected {len(columns)} fields, found {len(fields)}", lineno)
        row = []
        for name, cell in zip(columns, fields):
            if name in text_columns:
                row.append(cell)
                continue
            try:
                row.append(float(cell))
            except ValueError:
                raise CsvFormatError(f"column {name!r}: not a number: {cell!r}", lineno) from None
        rows.append(row)
    if columns is None:
        raise CsvFormatError("no column line found", len(text.splitlines()) + 1)
    return CsvTable("\n".join(header_lines), columns, rows)
