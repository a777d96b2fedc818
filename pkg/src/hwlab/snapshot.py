"""
Binary field snapshots.

Layout: the 8 magic bytes ``HWSFLD01``, a 4-byte little-endian header length,
a UTF-8 JSON header {nx, ny, lx, y_domain, ly, t, p, sign}, then nx*ny
complex samples as little-endian float64 (re, im) pairs, x-major.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

from .grid import Field, GridSpec, YDomain

MAGIC = b"HWSFLD01"
HEADER_KEYS = ("nx", "ny", "lx", "y_domain", "ly", "t", "p", "sign")


class SnapshotError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    field: Field
    t: float
    p: float
    sign: str


def encode(f: Field, t: float, p: float, sign: str) -> bytes:
    g = f.grid
    header = {
        "nx": g.nx,
        "ny": g.ny,
        "lx": g.lx,
        "y_domain": g.y_domain.value,
        "ly": g.ly,
        "t": float(t),
        "p": float(p),
        "sign": str(sign),
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    data = np.ascontiguousarray(f.values, dtype="<c16").tobytes(order="C")
    return MAGIC + struct.pack("<I", len(hb)) + hb + data


def decode(buf: bytes) -> Snapshot:
    if buf[:8] != MAGIC:
        raise SnapshotError("bad magic: not a field snapshot")
    if len(buf) < 12:
        raise SnapshotError("truncated header")
    (hlen,) = struct.unpack("<I", buf[8:12])
    try:
        header = json.loads(buf[12:12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"unreadable header: {exc}") from None
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise SnapshotError(f"header lacks {missing}")
    nx, ny = int(header["nx"]), int(header["ny"])
    payload = buf[12 + hlen:]
    if len(payload) != 16 * nx * ny:
        raise SnapshotError(f"expected {16 * nx * ny} data bytes, found {len(payload)}")
    grid = GridSpec(nx, ny, float(header["lx"]), YDomain(header["y_domain"]), float(header["ly"]))
    values = np.frombuffer(payload, dtype="<c16").reshape(nx, ny)
    return Snapshot(Field(grid, values), float(header["t"]), float(header["p"]), header["sign"])


def write_snapshot(path: str | os.PathLike, f: Field, t: float, p: float, sign: str) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(encode(f, t, p, sign))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {os.fspath(path)}: {exc.strerror}") from exc


def read_snapshot(path: str | os.PathLike) -> Snapshot:
    try:
        with open(path, "rb") as fh:
            return decode(fh.read())
    except OSError as exc:
        raise OSError(f"cannot read snapshot {os.fspath(path)}: {exc.strerror}") from exc
