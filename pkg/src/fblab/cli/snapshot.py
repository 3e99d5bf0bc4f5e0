"""FBL1 snapshot container for sampled space-time fields.

Layout (little-endian): b"FBL1"; u32 version, n, m, axis count (n+1), then
one u32 sample count per axis (time first); f64 q, then min and max of each
axis in axis order (min0, max0, min1, max1, ...); then the f64 samples in
row-major order over (t, x1, ..., xn) with the m components varying fastest.
"""
from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from ..core import SpaceTimeField, make_params
from ..errors import DomainError, FormatError

MAGIC = b"FBL1"
VERSION = 1


def encode_snapshot(u: SpaceTimeField) -> bytes:
    p = u.params
    head = MAGIC + struct.pack("<4I", VERSION, p.n, p.m, p.n + 1)
    head += struct.pack(f"<{p.n + 1}I", *u.shape)
    bounds = [v for lo_hi in u.box for v in lo_hi]
    head += struct.pack(f"<{1 + len(bounds)}d", p.q, *bounds)
    return head + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def atomic_write(path, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_snapshot(u: SpaceTimeField, path) -> None:
    atomic_write(path, encode_snapshot(u))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str, what: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise FormatError(f"truncated file while reading {what}", len(self.data))
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals


def decode_snapshot(data: bytes) -> SpaceTimeField:
    r = _Reader(data)
    if len(data) < 4:
        raise FormatError("truncated file while reading magic", len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}", 0)
    r.pos = 4
    (version,) = r.take("<I", "version")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", 4)
    n, m = r.take("<2I", "dimensions")
    axes_at = r.pos
    (axes,) = r.take("<I", "axis count")
    if n < 1 or m < 1:
        raise FormatError(f"invalid dimensions n={n}, m={m}", 8)
    if axes != n + 1:
        raise FormatError(f"axis count {axes} does not equal n+1 = {n + 1}", axes_at)
    counts_at = r.pos
    shape = r.take(f"<{axes}I", "axis sample counts")
    if any(k < 2 for k in shape):
        raise FormatError("every axis needs at least two samples", counts_at)
    (q,) = r.take("<d", "exponent")
    bounds_at = r.pos
    flat = r.take(f"<{2 * axes}d", "axis bounds")
    box = tuple((flat[2 * i], flat[2 * i + 1]) for i in range(axes))
    expected = int(np.prod(shape)) * m * 8
    payload_at = r.pos
    if len(data) - payload_at < expected:
        raise FormatError(f"truncated payload: expected {expected} bytes", len(data))
    if len(data) - payload_at > expected:
        raise FormatError("trailing bytes after payload", payload_at + expected)
    values = np.frombuffer(data, dtype="<f8", count=expected // 8, offset=payload_at)
    try:
        params = make_params(q, n, m)
        return SpaceTimeField(params, box, tuple(shape), values.astype(float).reshape(tuple(shape) + (m,)))
    except DomainError as exc:
        raise FormatError(f"invalid header or samples: {exc}", bounds_at) from exc


def load_snapshot(path) -> SpaceTimeField:
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())
