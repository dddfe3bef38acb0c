"""Bit-exact binary state snapshots and the diagnostics CSV writer.

Snapshot layout (all little-endian):

    magic   4 bytes  b"CSS2"
    version u32      1
    n       u32      points per axis
    L       f64      side length
    t       f64      time
    kappa   f64      coupling
    fields  12 arrays of n*n f64, row-major, in the order
            phi1 phi2 phi3, dphi1 dphi2 dphi3, a0 a1 a2, da0 da1 da2

Round-tripping a State through a file reproduces it bitwise.
"""

from __future__ import annotations

import struct

import numpy as np

from .fields import State
from .spectral import Grid

MAGIC = b"CSS2"
VERSION = 1
_HEADER = struct.Struct("<4sIIddd")


class SnapshotError(IOError):
    pass


def write_snapshot(path: str, state: State) -> None:
    n = state.grid.n_points
    header = _HEADER.pack(MAGIC, VERSION, n, state.grid.side_length, state.t, state.kappa)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            for block in (state.phi, state.dphi, state.a, state.da):
                for comp in block:
                    fh.write(np.ascontiguousarray(comp, dtype="<f8").tobytes())
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path!r}: {exc}") from exc


def read_snapshot(path: str, m_bound: float | None = None) -> State:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path!r}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path!r}: truncated header")
    magic, version, n, side, t, kappa = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path!r}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"{path!r}: unsupported version {version}")
    expected = _HEADER.size + 12 * n * n * 8
    if len(raw) != expected:
        raise SnapshotError(f"{path!r}: expected {expected} bytes, got {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(12, n, n)
    data = data.astype(np.float64)  # native copy, writable
    grid = Grid(n, side)
    return State(grid, data[0:3], data[3:6], data[6:9], data[9:12],
                 t=t, kappa=kappa, m_bound=m_bound)


class DiagnosticsWriter:
    """Streams DiagnosticsRecord rows to a CSV file with a fixed header.

    Values are written with repr-faithful %.17g formatting, so reruns of a
    deterministic simulation produce byte-identical files.
    """

    def __init__(self, path: str):
        from .diagnostics import DiagnosticsRecord
        try:
            self._fh = open(path, "w", encoding="utf-8", newline="\n")
        except OSError as exc:
            raise SnapshotError(f"cannot open diagnostics CSV {path!r}: {exc}") from exc
        self._fh.write(DiagnosticsRecord.csv_header() + "\n")

    def write(self, record) -> None:
        self._fh.write(record.csv_row() + "\n")

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
