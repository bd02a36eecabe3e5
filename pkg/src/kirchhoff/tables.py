"""Result tables written as CSV with a ``#`` metadata header and a JSON sidecar."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def format_value(x):
    """Render a cell; reals use 17 significant digits so they round-trip exactly."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    text = str(x)
    if any(ch in text for ch in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        # JSON has no NaN/Inf; keep them as strings.
        return x if math.isfinite(x) else repr(x)
    return obj


@dataclass
class ResultTable:
    """Rows of a fixed column schema plus a metadata block.

    Non-finite cells are only allowed in rows whose index appears in
    ``failed_rows``.
    """

    name: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    failed_rows: set = field(default_factory=set)

    def add_row(self, row, failed=False):
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, schema has {len(self.columns)}")
        if failed:
            self.failed_rows.add(len(self.rows))
        self.rows.append(tuple(row))

    def add_rows(self, array):
        for row in np.asarray(array, dtype=float):
            self.add_row(tuple(float(x) for x in row))

    def validate(self):
        for i, row in enumerate(self.rows):
            bad = any(isinstance(x, (float, np.floating)) and not math.isfinite(x) for x in row)
            if bad and i not in self.failed_rows:
                raise ValueError(f"row {i} of table {self.name!r} has non-finite values without a failure marker")

    def body(self):
        """CSV header and rows without the metadata block."""
        lines = [",".join(self.columns)]
        lines += [",".join(format_value(x) for x in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def to_csv(self):
        meta = _jsonable(self.metadata)
        head = [f"# {k}: {json.dumps(meta[k], sort_keys=True)}" for k in sorted(meta)]
        return "\n".join(head) + ("\n" if head else "") + self.body()

    def write(self, directory):
        """Write ``<name>.csv`` and ``<name>.json``; returns both paths."""
        self.validate()
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{self.name}.csv"
        json_path = directory / f"{self.name}.json"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        sidecar = {"table": self.name, "columns": list(self.columns), "n_rows": len(self.rows),
                   "failed_rows": sorted(self.failed_rows), "metadata": _jsonable(self.metadata)}
        json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return csv_path, json_path


def read_csv_body(path):
    """The CSV text below the ``#`` metadata block."""
    lines = Path(path).read_text(encoding="utf-8").splitlines(keepends=True)
    return "".join(line for line in lines if not line.startswith("#"))
