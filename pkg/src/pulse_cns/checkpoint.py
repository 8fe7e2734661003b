"""Binary state checkpoints.

Layout (little-endian throughout):

    bytes 0..3    magic "PCNS"
    uint32        format version (currently 1)
    uint32 x 3    n1, n2, n3 grid points per axis
    float64 x 5   L, gamma, mu, lam, t
    float64 x n^3         rho, row-major
    float64 x 3*n^3       u1, u2, u3, row-major

Round trips are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, VectorField
from .solver import State

MAGIC = b"PCNS"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")
_PARAMS = struct.Struct("<5d")


def write_checkpoint(path, state: State, params) -> None:
    g = state.grid
    p = Path(path)
    with open(p, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, g.n, g.n, g.n))
        fh.write(_PARAMS.pack(g.length, params.gamma, params.mu, params.lam, state.t))
        fh.write(np.ascontiguousarray(state.rho.values, dtype="<f8").tobytes())
        for i in range(3):
            fh.write(np.ascontiguousarray(state.u.values[i], dtype="<f8").tobytes())


def read_checkpoint(path) -> tuple[State, dict]:
    """Load a checkpoint; returns the state and the stored fluid parameters."""
    p = Path(path)
    raw = p.read_bytes()
    if len(raw) < _HEADER.size + _PARAMS.size:
        raise ValueError(f"{p}: truncated checkpoint header")
    magic, version, n1, n2, n3 = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{p}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{p}: unsupported format version {version}")
    if not (n1 == n2 == n3):
        raise ValueError(f"{p}: non-cubic grids not supported ({n1}x{n2}x{n3})")
    length, gamma, mu, lam, t = _PARAMS.unpack_from(raw, _HEADER.size)
    off = _HEADER.size + _PARAMS.size
    count = n1 * n2 * n3
    need = off + 4 * count * 8
    if len(raw) != need:
        raise ValueError(f"{p}: expected {need} bytes, found {len(raw)}")
    grid = Grid(n1, length)
    fields = np.frombuffer(raw, dtype="<f8", count=4 * count, offset=off).reshape(4, n1, n2, n3)
    state = State(
        t=t,
        rho=ScalarField(grid, fields[0].copy()),
        u=VectorField(grid, fields[1:4].copy()),
    )
    return state, {"gamma": gamma, "mu": mu, "lam": lam}
