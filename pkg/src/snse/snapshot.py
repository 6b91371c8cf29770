"""Binary field snapshots.

Layout (all little-endian)::

    b"SNSE"            magic
    u32                format version
    u32 d, u32 D       dimension and component count
    u32 n_1 .. n_d     truncation box
    f64 t              simulation time
    f64 pairs          (re, im) per coefficient

Coefficients cover the box prod [-n_i, n_i].  They are written component by
component, each block in lexicographic order of k = (k_1, ..., k_d) with k_1
varying slowest.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fourier import Grid, SpectralField, as_multi_index, box_coefficients, dealias_size, field_from_box

MAGIC = b"SNSE"
VERSION = 1


def write_snapshot(path, field: SpectralField, n, t: float = 0.0) -> None:
    if field.batch_shape:
        raise ValueError("snapshots hold a single field, not a batch")
    n = as_multi_index(n, field.d)
    header = MAGIC + struct.pack("<III", VERSION, field.d, field.ncomp)
    header += struct.pack(f"<{field.d}I", *n) + struct.pack("<d", float(t))
    coef = box_coefficients(field, n)
    body = np.empty(coef.shape + (2,), dtype="<f8")
    body[..., 0] = coef.real
    body[..., 1] = coef.imag
    Path(path).write_bytes(header + body.tobytes())


def read_snapshot(path, grid: Grid | None = None) -> tuple[SpectralField, float]:
    """Return the stored field and time.

    Without ``grid`` the field is placed on the smallest grid that dealiases
    products at the stored truncation.
    """
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    version, d, D = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    off = 16
    n = struct.unpack_from(f"<{d}I", raw, off)
    off += 4 * d
    (t,) = struct.unpack_from("<d", raw, off)
    off += 8
    count = int(np.prod([2 * ni + 1 for ni in n]))
    body = np.frombuffer(raw, dtype="<f8", offset=off)
    if body.size != 2 * D * count:
        raise ValueError(f"{path}: expected {2 * D * count} values, found {body.size}")
    body = body.reshape(D, count, 2)
    if grid is None:
        grid = Grid(d, dealias_size(max(n)))
    elif grid.d != d:
        raise ValueError(f"{path}: stored d={d} does not match grid d={grid.d}")
    return field_from_box(grid, n, body[..., 0] + 1j * body[..., 1]), t
