"""Pathwise norms shared by the solver and the diagnostics."""

from __future__ import annotations

import numpy as np

from .fourier import PhysicalField, SpectralField, _lp_values, inverse_transform


def fd_grad_power_sq(values: np.ndarray, d: int, p: float) -> np.ndarray:
    """sum_j int |grad(|u_j|^(p/2))|^2 dx with centered differences on the lattice.

    ``values`` holds samples of shape (*batch, D, N, ..., N); one value per batch entry.
    """
    N = values.shape[-1]
    g = np.abs(values) ** (p / 2.0)
    axes = tuple(range(-d, 0))
    total = 0.0
    for ax in axes:
        diff = (np.roll(g, -1, axis=ax) - np.roll(g, 1, axis=ax)) * (N / 2.0)
        total = total + np.mean(diff**2, axis=axes)
    return np.sum(total, axis=-1)


def energy_functional(u: SpectralField | PhysicalField, p: float) -> tuple[np.ndarray, np.ndarray]:
    """(||u||_p^p, sum_j int |grad(|u_j|^(p/2))|^2 dx) on the lattice.

    The gradient of the composite is taken by centered finite differences: the
    composite is not band-limited, so spectral differentiation would alias.
    """
    if p < 2:
        raise ValueError(f"energy functional needs p >= 2, got {p}")
    f = inverse_transform(u) if isinstance(u, SpectralField) else u
    d = f.grid.d
    lp = _lp_values(f.values, d, p) ** p
    grad = fd_grad_power_sq(f.values, d, p)
    if not f.values.ndim - d - 1:
        return float(lp), float(grad)
    return lp, grad

