"""CSV interchange with a ``# key=value`` header block, plus atomic file writes.

Numbers are written with fixed formats so identical inputs give identical
bytes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .evolution import PolarizationTrace

TRACE_COLUMNS = ("time", "p11")


def fmt(value) -> str:
    """Deterministic text form: ``repr``-exact floats, blank for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return ""
        return repr(v)
    return str(value)


def fmt_time(t: float) -> str:
    return f"{float(t):.10g}"


def atomic_write(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def render_table(columns, rows, header: dict | None = None) -> str:
    buf = io.StringIO()
    for key in sorted(header or {}):
        buf.write(f"# {key}={fmt(header[key])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def render_trace(trace: PolarizationTrace, header: dict | None = None) -> str:
    meta = dict(trace.spec_snapshot)
    meta.update(header or {})
    lines = [f"# {k}={fmt(meta[k])}" for k in sorted(meta)]
    lines.append(",".join(TRACE_COLUMNS))
    lines.extend(f"{fmt_time(t)},{float(v):.17g}" for t, v in zip(trace.times, trace.values))
    return "\n".join(lines) + "\n"


def write_trace(path, trace: PolarizationTrace, header: dict | None = None) -> None:
    atomic_write(path, render_trace(trace, header))


def read_table(path):
    """Return ``(header, columns, rows)`` with rows as lists of strings."""
    header: dict[str, str] = {}
    body = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, sep, value = line[1:].strip().partition("=")
                if sep:
                    header[key.strip()] = value
            elif line.strip():
                body.append(line)
    if not body:
        return header, [], []
    reader = csv.reader(body)
    columns = next(reader)
    return header, columns, [row for row in reader]


def read_trace(path) -> PolarizationTrace:
    header, columns, rows = read_table(path)
    if tuple(columns) != TRACE_COLUMNS:
        raise ValueError(f"{path}: expected columns {','.join(TRACE_COLUMNS)}")
    data = np.array([[float(x) for x in row] for row in rows]).reshape(-1, 2)
    return PolarizationTrace(data[:, 0], data[:, 1], header)
