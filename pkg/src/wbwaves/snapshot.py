"""Binary state snapshots (format WBSNAP1).

Layout, all multi-byte values little endian:

    bytes 0..6   magic "WBSNAP1" (ASCII)
    byte  7      dim (uint8, 1 or 2)
    next         n per axis, uint32 each
    next         L per axis, float64 each
    next         time, float64
    next         eta samples, float64, row major
    next         velocity component samples, float64, row major,
                 one block per component (v in 1D; v1 then v2 in 2D)
"""

from __future__ import annotations

import struct

import numpy as np

from .spectral import Field, Grid, SpectralError
from .state import WaveState

MAGIC = b"WBSNAP1"


class SnapshotError(ValueError):
    pass


def write_snapshot(path, state: WaveState) -> None:
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", grid.dim))
        fh.write(struct.pack(f"<{grid.dim}I", *grid.n))
        fh.write(struct.pack(f"<{grid.dim}d", *grid.length))
        fh.write(struct.pack("<d", state.time))
        fh.write(np.ascontiguousarray(state.eta.values, dtype="<f8").tobytes())
        for comp in state.vel:
            fh.write(np.ascontiguousarray(comp.values, dtype="<f8").tobytes())


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        magic = fh.read(7)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (dim,) = struct.unpack("<B", fh.read(1))
        if dim not in (1, 2):
            raise SnapshotError(f"bad dimension {dim}")
        n = struct.unpack(f"<{dim}I", fh.read(4 * dim))
        length = struct.unpack(f"<{dim}d", fh.read(8 * dim))
        (time,) = struct.unpack("<d", fh.read(8))
    return {"dim": dim, "n": n, "length": length, "time": time}


def read_snapshot(path) -> WaveState:
    header = read_header(path)
    dim = header["dim"]
    grid = Grid(header["n"], header["length"])
    count = int(np.prod(grid.n))
    offset = 7 + 1 + 4 * dim + 8 * dim + 8
    with open(path, "rb") as fh:
        fh.seek(offset)
        raw = fh.read()
    expected = count * (1 + dim) * 8
    if len(raw) != expected:
        raise SnapshotError(f"payload has {len(raw)} bytes, expected {expected}")
    flat = np.frombuffer(raw, dtype="<f8")
    blocks = [flat[i * count : (i + 1) * count].reshape(grid.shape) for i in range(1 + dim)]
    try:
        eta = Field(grid, blocks[0])
        vel = tuple(Field(grid, b) for b in blocks[1:])
        return WaveState(eta, vel, time=header["time"])
    except SpectralError as exc:
        raise SnapshotError(f"snapshot holds an invalid state: {exc}") from exc
