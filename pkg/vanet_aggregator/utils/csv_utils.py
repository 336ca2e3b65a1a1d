#!/usr/bin/env python3
"""
CSV output helpers.
Every CSV starts with the schema_version column.
"""

import csv
import io
from pathlib import Path
from typing import Iterable

from vanet_aggregator.config import CSV_SCHEMA_VERSION


def rows_to_csv(rows: Iterable[dict]) -> str:
    """Render rows as CSV text; schema_version is put first when missing."""
    rows = [
        row if "schema_version" in row else {"schema_version": CSV_SCHEMA_VERSION, **row}
        for row in rows
    ]
    if not rows:
        return ""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(rows: Iterable[dict], output: Path | None = None) -> str:
    """
    Write rows to a file, or just return the text when output is None.

    Returns:
        The CSV text
    """
    text = rows_to_csv(rows)
    if output is not None:
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")
    return text
