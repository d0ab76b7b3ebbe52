"""CSV ingestion and JSON/CSV/SVG emission.

CSV conventions: an empty field or ``NA`` is a missing cell. A header row is
detected when any field of the first row fails to parse as a number. A
leading row-name column is recognised when the header's first field is empty
(the layout R's ``write.csv`` produces) or when ``row_names=True``.

All writers are atomic: content goes to a temporary file in the target
directory which is then renamed over the destination.
"""

import csv
import dataclasses
import io
import json
import math
import os
import tempfile

import numpy as np

from .exceptions import ParseError
from .matrix import DataMatrix

__all__ = ["read_csv", "write_csv", "write_json", "to_jsonable", "atomic_write", "read_series"]

MISSING_TOKENS = frozenset({"", "NA"})


def _is_number(field):
    field = field.strip()
    if field in MISSING_TOKENS:
        return True
    try:
        float(field)
    except ValueError:
        return False
    return True


def _parse_cell(field, row, col):
    field = field.strip()
    if field in MISSING_TOKENS:
        return math.nan, True
    try:
        value = float(field)
    except ValueError:
        raise ParseError(f"non-numeric field {field!r}", row=row, column=col) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite field {field!r}", row=row, column=col)
    return value, False


def read_csv(path, header="auto", row_names="auto"):
    """Read a rectangular numeric CSV into a `DataMatrix`.

    Parse errors report the 1-based line and column in the file.
    """
    with open(path, newline="") as fh:
        text = fh.read()
    return parse_csv(text, header=header, row_names=row_names)


def parse_csv(text, header="auto", row_names="auto"):
    rows = [r for r in csv.reader(io.StringIO(text))]
    # keep file line numbers for error messages; drop blank lines
    numbered = [(i + 1, r) for i, r in enumerate(rows) if r and any(f.strip() for f in r)]
    if not numbered:
        raise ParseError("empty CSV input")

    first_line, first = numbered[0]
    if header == "auto":
        has_header = not all(_is_number(f) for f in first)
    else:
        has_header = bool(header)
    col_names = None
    if has_header:
        col_names = [f.strip() for f in first]
        numbered = numbered[1:]
        if not numbered:
            raise ParseError("CSV has a header but no data rows", row=first_line)
    if row_names == "auto":
        has_row_names = has_header and col_names[0] == ""
    else:
        has_row_names = bool(row_names)
    if has_row_names and col_names is not None:
        col_names = col_names[1:]

    width = len(numbered[0][1])
    if col_names is not None and len(col_names) + has_row_names != width:
        raise ParseError(
            f"header has {len(col_names) + has_row_names} fields but data rows have {width}",
            row=numbered[0][0],
        )
    values, missing, names = [], [], []
    for line, fields in numbered:
        if len(fields) != width:
            raise ParseError(f"ragged row: expected {width} fields, found {len(fields)}", row=line)
        offset = 0
        if has_row_names:
            names.append(fields[0].strip())
            offset = 1
        vrow, mrow = [], []
        for j, f in enumerate(fields[offset:]):
            v, m = _parse_cell(f, line, j + 1 + offset)
            vrow.append(v)
            mrow.append(m)
        values.append(vrow)
        missing.append(mrow)
    if width - has_row_names < 1:
        raise ParseError("CSV has no data columns")
    return DataMatrix(np.array(values, dtype=float), np.array(missing, dtype=bool),
                      col_names, names if has_row_names else None)


def read_series(path):
    """Read a univariate series: a one-column CSV (header optional)."""
    dm = read_csv(path)
    if dm.d != 1:
        raise ParseError(f"expected a single column, found {dm.d}")
    return dm.values[:, 0], dm.missing[:, 0]


def _format_float(v):
    return repr(float(v))


def write_csv(dm, path, row_names=False):
    """Write a `DataMatrix`; values use the shortest round-trip repr, missing cells ``NA``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = list(dm.col_names)
    if row_names:
        head = [""] + head
    w.writerow(head)
    for i in range(dm.n):
        row = ["NA" if dm.missing[i, j] else _format_float(dm.values[i, j]) for j in range(dm.d)]
        if row_names:
            row = [dm.row_names[i]] + row
        w.writerow(row)
    atomic_write(path, buf.getvalue())


def to_jsonable(obj):
    """Convert results to plain JSON types. NaN becomes ``None``; infinities are rejected."""
    if isinstance(obj, DataMatrix):
        vals = obj.values.tolist()
        for i, j in zip(*np.nonzero(obj.missing)):
            vals[i][j] = None
        return {"values": vals, "col_names": list(obj.col_names), "row_names": list(obj.row_names)}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            raise ValueError("infinite value cannot be written to JSON")
        return v
    return obj


def write_json(result, path, op="", inputs=None):
    """Write ``{"op": ..., "inputs": ..., "result": ...}`` atomically."""
    doc = {"op": op, "inputs": to_jsonable(inputs or {}), "result": to_jsonable(result)}
    atomic_write(path, json.dumps(doc, indent=2, allow_nan=False) + "\n")


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
