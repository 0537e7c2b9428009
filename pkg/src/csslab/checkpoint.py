"""Binary checkpoints.

Layout (little-endian): magic b"CSS1", u32 version, u32 n, f64 rmax, i64 m,
f64 g, f64 t, then n complex samples as interleaved f64 (re, im).  The grid
kind is not stored; readers rebuild the grid from (n, rmax, m) and a kind
chosen by the caller.
"""

from __future__ import annotations

import struct

import numpy as np

from .discretization import make_grid
from .errors import BadMagic, TruncatedPayload, VersionMismatch
from .state import EquivariantState

MAGIC = b"CSS1"
VERSION = 1
HEADER = struct.Struct("<4sIIdqdd")


def encode(state):
    head = HEADER.pack(MAGIC, VERSION, state.grid.n, state.grid.rmax,
                       int(state.m), float(state.g), float(state.t))
    payload = np.ascontiguousarray(state.u, dtype="<c16").view("<f8").tobytes()
    return head + payload


def decode(blob, kind="uniform-midpoint"):
    if len(blob) < HEADER.size:
        if blob[:4] != MAGIC[:len(blob[:4])]:
            raise BadMagic("not a checkpoint")
        raise TruncatedPayload(f"header needs {HEADER.size} bytes, got {len(blob)}")
    magic, version, n, rmax, m, g, t = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, expected {VERSION}")
    body = blob[HEADER.size:]
    if len(body) != 16 * n:
        raise TruncatedPayload(f"payload holds {len(body)} bytes, expected {16 * n}")
    u = np.frombuffer(body, dtype="<f8").view("<c16").astype(complex)
    grid = make_grid(n, rmax, kind, m)
    return EquivariantState(m=m, g=g, grid=grid, u=u, t=t)


def checkpoint_write(state, path):
    with open(path, "wb") as fh:
        fh.write(encode(state))


def checkpoint_read(path, kind="uniform-midpoint"):
    with open(path, "rb") as fh:
        return decode(fh.read(), kind)
