"""Test fields and initial data."""

from __future__ import annotations

import numpy as np

from .fourier import (
    TWO_PI,
    Grid,
    PhysicalField,
    SpectralField,
    _leray_coef,
    _symmetrize,
    as_multi_index,
    field_from_box,
    forward_transform,
    iter_modes,
    l2_norm,
)


def random_field(
    grid: Grid,
    rng: np.random.Generator,
    *,
    ncomp: int = 1,
    kmax=4,
    slope: float = 0.0,
    mean_zero: bool = True,
    solenoidal: bool = False,
    amplitude: float | None = None,
) -> SpectralField:
    """Real random trigonometric polynomial supported in the box ``|k_i| <= kmax``.

    Coefficients are complex Gaussians scaled by ``|k|**(-slope)``.  With
    ``solenoidal`` the field is Leray-projected; ``amplitude`` rescales to
    that L^2 norm.
    """
    kmax = as_multi_index(kmax, grid.d)
    if any(2 * k + 1 >= grid.N for k in kmax):
        raise ValueError(f"box {kmax} does not fit on grid N={grid.N}")
    modes = iter_modes(kmax)
    kabs = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
    weight = np.where(kabs > 0, np.maximum(kabs, 1.0) ** (-slope), 1.0)
    z = rng.standard_normal((ncomp, len(modes))) + 1j * rng.standard_normal((ncomp, len(modes)))
    F = field_from_box(grid, kmax, z * weight)
    c = _symmetrize(F.coef, grid.d)
    if mean_zero or solenoidal:
        c[(..., slice(None)) + (0,) * grid.d] = 0.0
    if solenoidal:
        if ncomp != grid.d:
            raise ValueError("a solenoidal field needs d components")
        c = _symmetrize(_leray_coef(c, grid), grid.d)
    F = SpectralField(c, grid)
    if amplitude is not None:
        norm = float(l2_norm(F))
        if norm > 0:
            F = F * (amplitude / norm)
    return F


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """Classical Taylor-Green vortex (d = 2 or 3), divergence-free and mean-zero."""
    x = [TWO_PI * c for c in grid.coords]
    if grid.d == 2:
        v = [np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1])]
    elif grid.d == 3:
        v = [
            np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
            -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
            np.zeros(grid.shape),
        ]
    else:
        raise ValueError("Taylor-Green data needs d >= 2")
    return forward_transform(PhysicalField(amplitude * np.stack(v), grid))


U0_KINDS = ("taylor-green", "random", "zero")


def initial_field(
    kind: str,
    d: int,
    *,
    seed: int = 0,
    amplitude: float = 1.0,
    kmax: int = 32,
    slope: float = 2.0,
) -> SpectralField:
    """Named initial datum, or a snapshot file when ``kind`` is a path.

    ``random`` is a solenoidal field with algebraic spectrum |k|^-slope up to
    ``kmax``, drawn from ``seed`` and scaled to L^2 norm ``amplitude``.
    """
    from pathlib import Path

    from .snapshot import read_snapshot

    if kind == "zero":
        return SpectralField.zeros(Grid(d, 4), ncomp=d)
    if kind == "taylor-green":
        return taylor_green(Grid(d, 8), amplitude)
    if kind == "random":
        grid = Grid(d, 2 * kmax + 2)
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0F1E1D]))
        return random_field(grid, rng, ncomp=d, kmax=kmax, slope=slope, solenoidal=True, amplitude=amplitude)
    if Path(kind).is_file():
        u, _ = read_snapshot(kind)
        if u.d != d:
            raise ValueError(f"snapshot {kind} holds a d={u.d} field, expected d={d}")
        return u
    raise ValueError(f"unknown initial datum {kind!r}; use one of {U0_KINDS} or a snapshot path")
