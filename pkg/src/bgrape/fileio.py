"""CSV/JSON readers and writers for the command-line front end.

All floating-point values are written with 17 significant digits so files
round-trip to the exact double.  Field files use one interchange format
(segment, channel, amplitude) shared by trained pulses, baseline pulses and
hand-written pulses.  JSON artifacts are written atomically.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .dynamics import ControlField
from .optimizer import TraceRow

__all__ = [
    "fmt",
    "write_field_csv",
    "read_field_csv",
    "TraceWriter",
    "write_landscape_csv",
    "write_errors_csv",
    "write_json_atomic",
    "file_digest",
]

TRACE_HEADER = ["iter", "samples", "batch_loss", "test_loss"]
FIELD_HEADER = ["segment", "channel", "amplitude"]
LANDSCAPE_HEADER = ["eps1", "eps2", "infidelity"]
ERRORS_HEADER = ["infidelity"]


def fmt(x: float) -> str:
    """Decimal text with 17 significant digits (round-trips the double)."""
    return f"{float(x):.17g}"


def write_field_csv(path, field: ControlField) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIELD_HEADER)
        for m in range(field.num_segments):
            for k in range(field.num_controls):
                writer.writerow([m, k, fmt(field.amplitudes[m, k])])


def read_field_csv(path) -> np.ndarray:
    """Amplitude array (segments, channels) from a field file."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != FIELD_HEADER:
            raise ValueError(f"{path}: expected header {FIELD_HEADER}, got {header}")
        entries = {}
        for row in reader:
            if not row:
                continue
            m, k, amp = int(row[0]), int(row[1]), float(row[2])
            entries[(m, k)] = amp
    if not entries:
        raise ValueError(f"{path}: field file has no amplitude rows")
    num_segments = max(m for m, _ in entries) + 1
    num_controls = max(k for _, k in entries) + 1
    if len(entries) != num_segments * num_controls:
        raise ValueError(f"{path}: field file does not cover a full (segment, channel) grid")
    amplitudes = np.empty((num_segments, num_controls))
    for (m, k), amp in entries.items():
        amplitudes[m, k] = amp
    return amplitudes


class TraceWriter:
    """Streams trace rows to CSV as they are produced, flushing periodically."""

    def __init__(self, path, flush_every: int = 1000):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(TRACE_HEADER)
        self._flush_every = flush_every
        self._count = 0

    def __call__(self, row: TraceRow) -> None:
        test = "" if row.test_loss is None else fmt(row.test_loss)
        self._writer.writerow([row.iteration, row.samples, fmt(row.batch_loss), test])
        self._count += 1
        if row.test_loss is not None or self._count % self._flush_every == 0:
            self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_landscape_csv(path, grid, values: np.ndarray) -> None:
    nodes1 = grid.axis_nodes(0)
    nodes2 = grid.axis_nodes(1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LANDSCAPE_HEADER)
        for i, e1 in enumerate(nodes1):
            for j, e2 in enumerate(nodes2):
                writer.writerow([fmt(e1), fmt(e2), fmt(values[i, j])])


def write_errors_csv(path, errors: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ERRORS_HEADER)
        for e in errors:
            writer.writerow([fmt(e)])


def write_json_atomic(path, payload: dict) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_digest(path) -> dict:
    data = Path(path).read_bytes()
    return {"sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
