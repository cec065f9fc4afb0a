"""Binary checkpoints of a ``State``.

Layout (all little-endian):

    4 bytes   magic b"HPTX"
    1 byte    format version (1)
    1 byte    dim
    dim x f8  extents
    dim x i8  cells per axis
    f8        t
    4 x N f8  u, w, w0, Uacc in C order (N = prod(n))
    4 bytes   CRC32 of everything above
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from haptotaxis.grid import Grid
from haptotaxis.model import State

MAGIC = b"HPTX"
VERSION = 1
FIELDS = ("u", "w", "w0", "Uacc")


class CheckpointError(ValueError):
    pass


def checkpoint_save(state: State, path: str | Path) -> None:
    grid = state.grid
    parts = [MAGIC, struct.pack("<BB", VERSION, grid.dim)]
    parts.append(struct.pack(f"<{grid.dim}d", *grid.extents))
    parts.append(struct.pack(f"<{grid.dim}q", *grid.n))
    parts.append(struct.pack("<d", state.t))
    for name in FIELDS:
        parts.append(np.ascontiguousarray(getattr(state, name), dtype="<f8").tobytes())
    body = b"".join(parts)
    Path(path).write_bytes(body + struct.pack("<I", zlib.crc32(body)))


def checkpoint_load(path: str | Path, grid: Grid | None = None) -> State:
    """Read a checkpoint; if ``grid`` is given the file must match it."""
    data = Path(path).read_bytes()
    if len(data) < 10 or data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version, dim = struct.unpack_from("<BB", data, 4)
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version} (expected {VERSION})")
    if dim not in (1, 2):
        raise CheckpointError(f"{path}: corrupt header (dim={dim})")
    off = 6
    head = 16 * dim + 8
    if len(data) < off + head:
        raise CheckpointError(f"{path}: truncated header")
    extents = struct.unpack_from(f"<{dim}d", data, off)
    off += 8 * dim
    n = struct.unpack_from(f"<{dim}q", data, off)
    off += 8 * dim
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    if any(k < 2 for k in n) or any(not e > 0 for e in extents):
        raise CheckpointError(f"{path}: corrupt header")
    size = int(np.prod(n))
    expected = off + 4 * 8 * size + 4
    if len(data) != expected:
        raise CheckpointError(f"{path}: truncated or corrupt file ({len(data)} bytes, expected {expected})")
    (crc,) = struct.unpack_from("<I", data, expected - 4)
    if zlib.crc32(data[: expected - 4]) != crc:
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupt")
    file_grid = Grid(extents, n)
    if grid is not None and (grid.extents != file_grid.extents or grid.n != file_grid.n):
        raise CheckpointError(f"{path}: grid {file_grid.spec()} does not match expected {grid.spec()}")
    arrays = {}
    for name in FIELDS:
        arrays[name] = np.frombuffer(data, dtype="<f8", count=size, offset=off).reshape(n).astype(float)
        off += 8 * size
    return State(file_grid, arrays["u"], arrays["w"], arrays["w0"], arrays["Uacc"], t)
