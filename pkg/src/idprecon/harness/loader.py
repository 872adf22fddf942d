"""CSV and schema-config ingestion."""

from __future__ import annotations

import csv
import json
from importlib import resources
from pathlib import Path

import numpy as np

from ..core import Dataset, Schema, SchemaError


class IngestionError(SchemaError):
    """Raised when a CSV row cannot be mapped onto the schema."""


def load_schema(path: str | Path | None = None) -> Schema:
    """Read a JSON schema config; ``None`` loads the bundled banking schema."""
    if path is None:
        text = resources.files(__package__).joinpath("banking_schema.json").read_text()
    else:
        text = Path(path).read_text()
    return Schema.from_dict(json.loads(text))


def _sniff(header: str) -> str:
    try:
        return csv.Sniffer().sniff(header, delimiters=",;\t|").delimiter
    except csv.Error:
        return ","


def load_dataset(
    csv_path: str | Path,
    schema: Schema | str | Path | None = None,
    delimiter: str | None = None,
) -> Dataset:
    """Typed dataset from a CSV with a header row naming every schema attribute."""
    if not isinstance(schema, Schema):
        schema = load_schema(schema)
    with open(csv_path, newline="") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise IngestionError(f"{csv_path}: missing header row")
        delim = delimiter or _sniff(header_line)
        header = next(csv.reader([header_line], delimiter=delim))
        header = [h.strip() for h in header]
        cols = []
        for a in schema.attributes:
            if a.name not in header:
                raise IngestionError(f"{csv_path}: missing column {a.name!r}")
            cols.append(header.index(a.name))
        rows = []
        for line_no, raw in enumerate(csv.reader(fh, delimiter=delim), start=1):
            if not raw:
                continue
            if len(raw) < len(header):
                raise IngestionError(f"row {line_no}: expected {len(header)} fields, got {len(raw)}")
            rec = []
            for spec, c in zip(schema.attributes, cols):
                cell = raw[c].strip()
                try:
                    x = spec.encode(cell)
                except (ValueError, SchemaError) as e:
                    raise IngestionError(f"row {line_no}, column {spec.name!r}: {e}") from None
                if not spec.lower <= x <= spec.upper:
                    raise IngestionError(
                        f"row {line_no}, column {spec.name!r}: value {cell} outside [{spec.lower}, {spec.upper}]"
                    )
                rec.append(x)
            rows.append(rec)
    return Dataset(schema, np.array(rows, dtype=np.float64).reshape(len(rows), len(schema)))
