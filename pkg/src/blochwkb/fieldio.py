"""Binary wave-field format: 64-byte header plus interleaved complex samples.

Layout (little-endian): magic "BWKB", version u32, n_points u64, x_min f64,
x_max f64, epsilon f64, t f64, 16 reserved bytes, then n_points pairs of
(re f64, im f64).  The format is bit-exact: writing and re-reading a field
reproduces the same bytes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .wkb import WaveField

MAGIC = b"BWKB"
VERSION = 1
_HEADER = struct.Struct("<4sIQ4d16x")
assert _HEADER.size == 64


def write_field(path, field: WaveField) -> None:
    header = _HEADER.pack(MAGIC, VERSION, field.n_points,
                          field.x_min, field.x_max, field.epsilon, field.t)
    payload = np.empty(2 * field.n_points, dtype="<f8")
    payload[0::2] = field.values.real
    payload[1::2] = field.values.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_field(path) -> WaveField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated field file")
    magic, version, n_points, x_min, x_max, epsilon, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 16 * n_points
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    payload = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    values = payload[0::2] + 1j * payload[1::2]
    return WaveField(epsilon=epsilon, x_min=x_min, x_max=x_max,
                     values=values, t=t)
