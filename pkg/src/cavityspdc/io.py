"""File formats: CSV series, JSON reports and binary time-tag streams."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .counting import CoincidenceHistogram, TimeTagStream

TTAG_MAGIC = b"TTAG"
TTAG_VERSION = 1
_HEADER = struct.Struct("<4sHHQ")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, columns):
    """Write equal-length columns with a header row, LF endings, dot decimals."""
    cols = [list(c) for c in columns]
    n = len(cols[0]) if cols else 0
    if any(len(c) != n for c in cols):
        raise ValueError("CSV columns must have equal length")
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(c[k]) for c in cols) for k in range(n))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path):
    """Return ``(header, columns)`` with empty fields as NaN."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    rows = [[float(x) if x else np.nan for x in line.split(",")] for line in text[1:] if line]
    cols = np.array(rows, dtype=float).T if rows else np.empty((len(header), 0))
    return header, cols


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")


def write_scan(path, freq, trans):
    write_csv(path, ["freq_hz", "transmission"], [freq, trans])


def write_g2_curve(path, curve):
    write_csv(path, ["tau_s", "value"], [curve.tau, curve.values])


def write_histogram(path, hist: CoincidenceHistogram):
    delays = np.rint(hist.centers * 1e12).astype(np.int64)
    write_csv(path, ["delay_ps", "counts"], [delays, hist.counts])


def write_timetags(path, stream: TimeTagStream):
    """Binary little-endian stream: header {magic, version u16, channel u16, count u64}
    followed by u64 picosecond timestamps."""
    ts = np.asarray(stream.timestamps)
    if ts.size and ts.min() < 0:
        raise ValueError("timestamps must be nonnegative")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TTAG_MAGIC, TTAG_VERSION, int(stream.channel), int(ts.size)))
        fh.write(ts.astype("<u8").tobytes())


def read_timetags(path, duration=None) -> TimeTagStream:
    data = Path(path).read_bytes()
    magic, version, channel, count = _HEADER.unpack_from(data)
    if magic != TTAG_MAGIC:
        raise ValueError(f"{path}: not a TTAG file")
    if version != TTAG_VERSION:
        raise ValueError(f"{path}: unsupported TTAG version {version}")
    body = np.frombuffer(data, dtype="<u8", count=count, offset=_HEADER.size)
    ts = body.astype(np.int64)
    if duration is None:
        duration = (float(ts[-1]) + 1) * 1e-12 if ts.size else 1e-12
    return TimeTagStream(channel, ts, duration)


def write_timetags_csv(path, stream: TimeTagStream):
    write_csv(path, ["timestamp_ps"], [stream.timestamps])
