"""Flat experiment records and their CSV/JSON serialization.

A record is a ``dict`` with a fixed key order per subcommand. CSV files carry
one ``#`` provenance line (tool version, seed, timestamp) followed by the
header and data rows; the data section is byte-identical for identical
inputs. JSON files are a bare array of row objects with the same keys.
Floats are written with 17 significant digits, so parsing recovers them
exactly.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io as _io
import json
import math
import os
import tempfile

from . import __version__


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    if hasattr(v, "dtype"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def parse_value(s: str):
    """Inverse of :func:`format_value` for ints, floats, booleans and plain strings."""
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def records_to_csv(records, columns) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([format_value(r[c]) for c in columns])
    return buf.getvalue()


def records_from_csv(text: str) -> tuple[list[str], list[dict]]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        return [], []
    header = rows[0]
    return header, [dict(zip(header, (parse_value(x) for x in row))) for row in rows[1:]]


def _json_safe(v):
    if hasattr(v, "dtype"):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def records_to_json(records, columns) -> str:
    rows = [{c: _json_safe(r[c]) for c in columns} for r in records]
    return json.dumps(rows, indent=1) + "\n"


def provenance_line(seed, subcommand: str, timestamp: str | None = None) -> str:
    ts = timestamp or _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return f"# fnlmagic {__version__} {subcommand} seed={seed} time={ts}\n"


def serialize(records, columns, fmt: str = "csv", *, provenance: str = "") -> str:
    if fmt == "csv":
        return provenance + records_to_csv(records, columns)
    if fmt == "json":
        return records_to_json(records, columns)
    raise ValueError(f"unknown format {fmt!r}")


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` as UTF-8 with LF endings via a temporary file and rename."""
    target = os.path.abspath(path)
    directory = os.path.dirname(target) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_records(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        return json.loads(text)
    return records_from_csv(text)[1]
