"""Seeded test-field families for the operator studies."""

from __future__ import annotations

import numpy as np

from ..fields import random_field
from ..fourier import Grid, SpectralField, field_from_box, iter_modes


def power_law_field(grid: Grid, rng: np.random.Generator, kf: int, s: float) -> SpectralField:
    """Real mean-zero field with |f^(k)| = |k|^-s exactly on the box |k_i| <= kf and uniform random phases."""
    modes = iter_modes((kf,) * grid.d)
    kabs = np.sqrt(np.sum(modes.astype(float) ** 2, axis=1))
    amp = np.where(kabs > 0, np.where(kabs > 0, kabs, 1.0) ** -s, 0.0)
    z = np.exp(2j * np.pi * rng.random(len(modes)))
    half = len(modes) // 2  # lexicographic order: entry i and entry -1-i are k and -k
    z[half + 1 :] = np.conj(z[:half][::-1])
    return field_from_box(grid, kf, (amp * z)[None])


def decay_corpus(d: int, q: float, size: int = 8, kf: int = 128, eps: float = 0.1, seed: int = 0, N: int | None = None) -> list[SpectralField]:
    """Mean-zero scalar fields with |f^(k)| = |k|^-(d/q + 1 + eps) up to |k_i| <= kf.

    The slow decay puts the fields barely inside W^{1,q}, so truncation
    differences decay about as slowly as W^{1,q} regularity allows.  Only the phases
    are random.
    """
    grid = Grid(d, N or _corpus_size(d, kf))
    rng = np.random.default_rng(np.random.SeedSequence([seed, d, int(round(1000 * q))]))
    return [power_law_field(grid, rng, kf, d / q + 1 + eps) for _ in range(size)]


def _corpus_size(d: int, kf: int) -> int:
    return 4 * kf if d == 1 else 2 * kf + 32


def dirichlet_profile(grid: Grid, n: int, a: float) -> SpectralField:
    """Tensor power of g = D_n - a (D_{2n} - D_n), D_n the Dirichlet kernel.

    T_n g = D_n, and for moderate a the L^4 norm of g sits below that of D_n,
    so these profiles push ||T_n f||_q / ||f||_q above one.
    """
    K = 2 * n
    modes = iter_modes((K,) * grid.d)
    g = np.where(np.abs(modes) <= n, 1.0, -a)
    return field_from_box(grid, K, np.prod(g, axis=1)[None].astype(complex))


def uniform_corpus(d: int, ns=(4, 8, 16, 32, 64), a_values=(0.1, 0.2, 0.3), randoms: int = 8, seed: int = 0, N: int | None = None):
    """Near-Dirichlet profiles at every ladder level plus random trigonometric polynomials."""
    kmax = 2 * max(ns)
    grid = Grid(d, N or (1024 if d == 1 else 4 * kmax))
    fields = [dirichlet_profile(grid, n, a) for n in ns for a in a_values]
    rng = np.random.default_rng(np.random.SeedSequence([seed, d, 7]))
    for i in range(randoms):
        k = int(ns[i % len(ns)] * 2)
        fields.append(random_field(grid, rng, kmax=k, slope=float(i % 3), mean_zero=False))
    return fields


def gn_corpus(d: int = 3, size: int = 100, kmax: int = 2, seed: int = 0, N: int = 48) -> list[SpectralField]:
    """Random band-limited mean-zero scalar fields with varied spectral slopes."""
    grid = Grid(d, N)
    rng = np.random.default_rng(np.random.SeedSequence([seed, d, 11]))
    return [random_field(grid, rng, kmax=kmax, slope=float(i % 4)) for i in range(size)]
