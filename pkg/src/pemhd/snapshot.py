"""Binary state snapshots.

Layout (all multi-byte values little-endian):

    bytes 0..7    magic "PEMSNAP1"
    bytes 8..15   system tag, ASCII, NUL-padded ("SMHD", "PEM", "MHD_THIN")
    5 x float64   eps, t, L1, L2, Lz
    3 x int64     Nx, Ny, Nz
    1 x int64     field count (6, or 7 when the pressure is included)
    blocks        complex128 coefficient arrays of shape (Nx, Ny, Nz) in
                  C order (kx-major, then ky, then kz), field order
                  u1, u2, u3, b1, b2, b3[, p]
"""

from __future__ import annotations

import numpy as np

from pemhd.fields import State, state_from_spec
from pemhd.grid import make_grid

MAGIC = b"PEMSNAP1"
_FIELD_ORDER = ("u1", "u2", "u3", "b1", "b2", "b3", "p")


def write_snapshot(path, state: State, include_pressure: bool = True) -> None:
    g = state.grid
    names = _FIELD_ORDER if include_pressure else _FIELD_ORDER[:6]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(state.system.encode("ascii").ljust(8, b"\0"))
        header = np.array([state.eps, state.t, g.L1, g.L2, g.Lz],
                          dtype="<f8")
        fh.write(header.tobytes())
        dims = np.array([g.Nx, g.Ny, g.Nz, len(names)], dtype="<i8")
        fh.write(dims.tobytes())
        for name in names:
            block = np.ascontiguousarray(
                state.fields()[name].spec(), dtype="<c16"
            )
            fh.write(block.tobytes())


def read_snapshot(path) -> State:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise ValueError(f"not a snapshot file (bad magic {raw[:8]!r})")
    system = raw[8:16].rstrip(b"\0").decode("ascii")
    floats = np.frombuffer(raw, dtype="<f8", count=5, offset=16)
    eps, t, L1, L2, Lz = (float(v) for v in floats)
    ints = np.frombuffer(raw, dtype="<i8", count=4, offset=16 + 40)
    nx, ny, nz, nfields = (int(v) for v in ints)
    if nfields not in (6, 7):
        raise ValueError(f"snapshot carries {nfields} field blocks, expected 6 or 7")
    grid = make_grid(L1, L2, Lz, nx, ny, nz)
    offset = 16 + 40 + 32
    count = nx * ny * nz
    blocks = []
    for i in range(nfields):
        if offset + 16 * count > len(raw):
            raise ValueError("snapshot file truncated")
        block = np.frombuffer(raw, dtype="<c16", count=count, offset=offset)
        blocks.append(block.reshape(nx, ny, nz).astype(np.complex128))
        offset += 16 * count
    if offset != len(raw):
        raise ValueError("snapshot file has trailing bytes")
    cp = blocks[6] if nfields == 7 else None
    return state_from_spec(grid, *blocks[:6], cp, t=t, eps=eps, system=system)
