"""Report emission: a JSON tree plus a flat per-attribute table."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .experiments import RunReport

VOLATILE = ("seconds",)


def _strip(tree):
    if isinstance(tree, dict):
        return {k: _strip(v) for k, v in tree.items() if k not in VOLATILE}
    if isinstance(tree, list):
        return [_strip(v) for v in tree]
    return tree


def attribute_rows(report: RunReport) -> list[dict]:
    """One row per attribute: distinct values and queries spent on it."""
    rec = report.reconstruction or {}
    distinct = rec.get("distinct_values", {})
    queries = rec.get("attribute_queries", {})
    exact = rec.get("exact", {})
    return [
        {"attribute": name, "distinct_values": distinct[name], "queries": queries.get(name, 0),
         "exact": exact.get(name, "")}
        for name in distinct
    ]


def emit_report(report: RunReport, path: str | Path, include_timing: bool = False) -> tuple[Path, Path]:
    """Write ``path`` (JSON) and ``<stem>_attributes.csv`` next to it.

    Wall-clock fields are left out unless asked for, so repeated runs with
    the same config are byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tree = report.to_dict()
    if not include_timing:
        tree = _strip(tree)
    path.write_text(json.dumps(tree, indent=2, sort_keys=True, default=str) + "\n")
    table = path.with_name(path.stem + "_attributes.csv")
    with open(table, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["attribute", "distinct_values", "queries", "exact"])
        w.writeheader()
        w.writerows(attribute_rows(report))
    return path, table


def load_report(path: str | Path) -> RunReport:
    return RunReport.from_dict(json.loads(Path(path).read_text()))
