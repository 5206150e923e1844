"""CSV and JSON emission with byte-stable number formatting.

All numbers are written with 17 significant digits (``%.17g``), which
round-trips every double exactly, so reruns produce identical bytes.
Missing cells are empty strings; non-finite floats become ``nan``/``inf``
in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..model import ObservationSet

__all__ = [
    "SeriesFormatError",
    "fmt",
    "read_series_csv",
    "write_series_csv",
    "write_csv",
    "dumps",
    "write_json",
]

SERIES_HEADER = ("t", "y", "observed")


class SeriesFormatError(ValueError):
    """Input series file does not follow the ``t,y,observed`` layout."""


def fmt(x) -> str:
    """One CSV cell."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(x)


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_series_csv(path) -> ObservationSet:
    """Read a ``t,y,observed`` file into an :class:`ObservationSet`.

    ``t`` must run ``1..N`` without gaps, ``observed`` is ``0`` or ``1`` and
    ``y`` must be a non-negative number on observed rows (it is ignored,
    and may be empty, elsewhere).  Errors name the offending row, counting
    the header as row 1.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise SeriesFormatError(f"cannot open {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SERIES_HEADER:
            raise SeriesFormatError(f"{path}: header must be 't,y,observed', got {header}")
        mask, values = [], []
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise SeriesFormatError(f"{path}, row {rowno}: expected 3 fields, got {len(row)}")
            t_txt, y_txt, o_txt = (c.strip() for c in row)
            try:
                t = int(t_txt)
            except ValueError:
                raise SeriesFormatError(f"{path}, row {rowno}: t={t_txt!r} is not an integer") from None
            if t != len(mask) + 1:
                raise SeriesFormatError(
                    f"{path}, row {rowno}: t={t} breaks the contiguous sequence (expected {len(mask) + 1})"
                )
            if o_txt not in ("0", "1"):
                raise SeriesFormatError(f"{path}, row {rowno}: observed={o_txt!r} must be 0 or 1")
            if o_txt == "1":
                try:
                    y = float(y_txt)
                except ValueError:
                    raise SeriesFormatError(f"{path}, row {rowno}: y={y_txt!r} is not a number") from None
                if not (math.isfinite(y) and y >= 0):
                    raise SeriesFormatError(f"{path}, row {rowno}: y={y_txt} must be finite and >= 0")
                values.append(y)
                mask.append(True)
            else:
                mask.append(False)
    if not mask:
        raise SeriesFormatError(f"{path}: no data rows")
    if not values:
        raise SeriesFormatError(f"{path}: no observed rows")
    return ObservationSet(np.array(mask), np.array(values))


def write_series_csv(path, obs: ObservationSet):
    full = obs.full()
    write_csv(
        path,
        SERIES_HEADER,
        ((i + 1, full[i] if m else None, bool(m)) for i, m in enumerate(obs.mask)),
    )


def _json(x, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "%.17g" % x if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, np.ndarray):
        x = x.tolist()
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{_json(str(k), indent, level + 1)}: {_json(v, indent, level + 1)}" for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, (list, tuple)):
        if not x:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in x):
            return "[" + ", ".join(_json(v, indent, level + 1) for v in x) + "]"
        items = [pad + _json(v, indent, level + 1) for v in x]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj, indent=2) -> str:
    """JSON text with 17-significant-digit floats and insertion-ordered keys."""
    return _json(obj, indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj), encoding="utf-8")
