"""CHF1 field snapshots.

Layout: one ASCII header line ``CHF1 dim n L kind norm=<convention>`` followed
by little-endian float64 values in row-major order.  ``kind`` is ``real`` or
``spectral``; spectral files interleave (re, im) and keep FFT index order.
Readers accept the five-token header without the ``norm=`` token.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError
from .field import NORMALIZATION, Grid, RealField, SpectralField

MAGIC = "CHF1"


def _header(grid: Grid, kind: str) -> bytes:
    return f"{MAGIC} {grid.dim} {grid.n} {grid.L!r} {kind} norm={NORMALIZATION}\n".encode("ascii")


def dumps(field: RealField | SpectralField) -> bytes:
    if isinstance(field, RealField):
        kind, data = "real", field.values
    elif isinstance(field, SpectralField):
        kind = "spectral"
        data = np.empty(field.coeffs.shape + (2,))
        data[..., 0] = field.coeffs.real
        data[..., 1] = field.coeffs.imag
    else:
        raise TypeError(f"cannot serialise {type(field).__name__}")
    return _header(field.grid, kind) + np.ascontiguousarray(data, dtype="<f8").tobytes()


def loads(blob: bytes) -> RealField | SpectralField:
    head, sep, body = blob.partition(b"\n")
    if not sep:
        raise ConfigError("CHF1 header line missing")
    tokens = head.decode("ascii").split()
    if len(tokens) not in (5, 6) or tokens[0] != MAGIC:
        raise ConfigError(f"not a CHF1 snapshot: {head[:40]!r}")
    dim, n, L, kind = int(tokens[1]), int(tokens[2]), float(tokens[3]), tokens[4]
    if len(tokens) == 6 and tokens[5] != f"norm={NORMALIZATION}":
        raise ConfigError(f"unsupported normalisation {tokens[5]}")
    grid = Grid(dim, n, L)
    data = np.frombuffer(body, dtype="<f8")
    if kind == "real":
        return RealField(grid, data.reshape(grid.shape).astype(float))
    if kind == "spectral":
        data = data.reshape(grid.shape + (2,))
        return SpectralField(grid, data[..., 0] + 1j * data[..., 1])
    raise ConfigError(f"unknown snapshot kind {kind!r}")


def save(path: str | Path, field: RealField | SpectralField) -> None:
    Path(path).write_bytes(dumps(field))


def load(path: str | Path) -> RealField | SpectralField:
    return loads(Path(path).read_bytes())
