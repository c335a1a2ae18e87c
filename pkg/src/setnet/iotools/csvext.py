"""
CSV helpers for metrics tables. One header row, then one row per record.
Floats are written with repr precision so that a reloaded table compares equal.
"""

from __future__ import annotations

import csv
import io
import os
from csv import Error as CsvError
from pathlib import Path
from typing import Any, Mapping, Sequence

from setnet.typext import PathType


def format_to_csv(data: Sequence[Sequence[Any]], delimiter: str = ",") -> str:
    """
    Args:
        data: 2d list of list that should be formatted to csv
        delimiter: field separator

    Returns:
        csv formatted string
    """
    output = io.StringIO()
    writer = csv.writer(output, delimiter=delimiter, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    for i, row in enumerate(data):
        if isinstance(row, str):
            raise CsvError(f"Expected list, got str for row {i} content {row}")
        writer.writerow(row)
    formatted = output.getvalue()
    output.close()
    return formatted


def write_csv_rows(file: PathType, rows: Sequence[Mapping[str, Any]], columns: Sequence[str]):
    """Write dict rows with a fixed column order, missing keys become empty cells."""
    file = Path(file)
    os.makedirs(file.parent, exist_ok=True)
    table = [list(columns)] + [[_fmt(row.get(c, "")) for c in columns] for row in rows]
    file.write_text(format_to_csv(table), encoding="utf-8")


def append_csv_rows(file: PathType, rows: Sequence[Mapping[str, Any]], columns: Sequence[str]):
    """Append rows, writing the header first if the file does not exist yet."""
    file = Path(file)
    os.makedirs(file.parent, exist_ok=True)
    table = [] if file.is_file() else [list(columns)]
    table += [[_fmt(row.get(c, "")) for c in columns] for row in rows]
    with file.open("a", encoding="utf-8") as fh:
        fh.write(format_to_csv(table))


def read_csv_dicts(file: PathType) -> list[dict[str, str]]:
    with Path(file).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _fmt(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value
