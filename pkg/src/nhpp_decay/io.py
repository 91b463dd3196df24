"""CSV / JSON serialization with atomic writes.

Floats are written with ``repr`` (shortest round-trip form), so reading a
file back gives bit-identical values.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from nhpp_decay.simulate import EventSeries


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to a temporary file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _fmt(x) -> str:
    return repr(float(x))


def series_csv(series: EventSeries) -> str:
    lines = ["t"] + [_fmt(x) for x in series.times]
    return "\n".join(lines) + "\n"


def ensemble_csv(series: Sequence[EventSeries]) -> str:
    lines = ["replica,t"]
    for i, s in enumerate(series):
        lines.extend(f"{i},{_fmt(x)}" for x in s.times)
    return "\n".join(lines) + "\n"


def columns_csv(header: Sequence[str], columns) -> str:
    """CSV text from equal-length numeric columns."""
    cols = [np.asarray(c) for c in columns]
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*cols):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, (np.generic,)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json_text(obj))


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_timestamps(path, window_end: float | None = None) -> list[EventSeries]:
    """Read event timestamps from CSV.

    Accepts a single ``t`` column (header optional) or the two-column
    ``replica,t`` ensemble layout, which yields one series per replica.
    Rows are sorted; the window of each series ends at ``window_end`` or,
    by default, at its last event.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if rows and not all(_is_number(c) for c in rows[0]):
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]
    else:
        header = ["t"] if not rows or len(rows[0]) == 1 else ["replica", "t"]

    groups: dict[str, list[float]] = {}
    if header == ["t"]:
        groups["0"] = [float(r[0]) for r in rows]
    elif header == ["replica", "t"]:
        for r in rows:
            groups.setdefault(r[0].strip(), []).append(float(r[1]))
    else:
        raise ValueError(f"unrecognised timestamp columns {header!r}; expected 't' or 'replica,t'")

    out = []
    for values in groups.values():
        times = np.sort(np.asarray(values, dtype=float))
        if times.size and (times[0] < 0 or not np.all(np.isfinite(times))):
            raise ValueError("timestamps must be finite and nonnegative")
        end = window_end if window_end is not None else (float(times[-1]) if times.size else 0.0)
        out.append(EventSeries(times, end))
    return out
