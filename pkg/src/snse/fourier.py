"""Periodic Fourier operator algebra on the unit torus [0, 1]^d.

Coefficients follow the integral convention

    u_hat(k) = int_{[0,1]^d} u(x) exp(-2 pi i k.x) dx,

so the discrete forward transform is an FFT scaled by 1/N^d and the inverse
is the plain Fourier series.  Coefficient arrays use FFT index layout and have
shape ``(*batch, D, N, ..., N)``: any number of leading batch axes, one
component axis, then ``d`` spatial axes.  Every operator below acts on the
trailing ``d + 1`` axes and broadcasts over the batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * math.pi


class AliasingError(ValueError):
    """Grid too coarse to evaluate a quadratic product without aliasing."""


class MeanValueError(ValueError):
    """A singular multiplier was applied to a field with nonzero mean."""


def _is_5smooth(m: int) -> bool:
    for p in (2, 3, 5):
        while m % p == 0:
            m //= p
    return m == 1


def dealias_size(n: int) -> int:
    """Smallest even 5-smooth grid size with N >= 4n + 2."""
    N = max(4, 4 * int(n) + 2)
    while N % 2 or not _is_5smooth(N):
        N += 1
    return N


@dataclass(frozen=True)
class Grid:
    """Uniform lattice of ``N`` points per axis on ``[0, 1]^d``."""

    d: int
    N: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.N < 4 or self.N % 2:
            raise ValueError(f"points per axis must be even and >= 4, got {self.N}")

    @classmethod
    def for_truncation(cls, d: int, n: int) -> "Grid":
        return cls(d, dealias_size(n))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def max_dealiased_index(self) -> int:
        """Largest truncation index whose quadratic products are exact here."""
        return (self.N - 2) // 4

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis, shaped to broadcast over the lattice."""
        k1 = np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(np.int64)
        out = []
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.N
            out.append(k1.reshape(shape))
        return tuple(out)

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(k.astype(float) ** 2 for k in self.wavenumbers) * np.ones(self.shape)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        x1 = np.arange(self.N) / self.N
        return tuple(np.meshgrid(*([x1] * self.d), indexing="ij"))

    def box_mask(self, n) -> np.ndarray:
        """Boolean mask of modes with |k_i| <= n_i for every axis."""
        n = as_multi_index(n, self.d)
        mask = np.ones(self.shape, dtype=bool)
        for k, ni in zip(self.wavenumbers, n):
            mask = mask & (np.abs(k) <= ni)
        return mask

    def require_dealiased(self, n) -> None:
        nmax = max(as_multi_index(n, self.d))
        if self.N < 4 * nmax + 2:
            raise AliasingError(
                f"grid N={self.N} cannot dealias products at truncation n={nmax}: "
                f"need N >= 4n+2 = {4 * nmax + 2}"
            )


def as_multi_index(n, d: int) -> tuple[int, ...]:
    if np.isscalar(n):
        n = (int(n),) * d
    n = tuple(int(v) for v in n)
    if len(n) != d:
        raise ValueError(f"multi-index {n} has wrong length for d={d}")
    if any(v < 0 for v in n):
        raise ValueError(f"multi-index entries must be nonnegative, got {n}")
    return n


def minn(n) -> int:
    return min(np.atleast_1d(n))


def _comp(c: np.ndarray, i, d: int) -> np.ndarray:
    """Component ``i`` (int or slice) of a coefficient or sample array."""
    return c[(Ellipsis, i) + (slice(None),) * d]


def _fft(values: np.ndarray, d: int) -> np.ndarray:
    N = values.shape[-1]
    return sfft.fftn(values, axes=tuple(range(-d, 0))) / N**d


def _ifft(coef: np.ndarray, d: int) -> np.ndarray:
    N = coef.shape[-1]
    return sfft.ifftn(coef, axes=tuple(range(-d, 0))).real * N**d


def _reflect(c: np.ndarray, d: int) -> np.ndarray:
    """Array whose entry at k is the input entry at -k."""
    axes = tuple(range(-d, 0))
    return np.roll(np.flip(c, axis=axes), 1, axis=axes)


def _symmetrize(c: np.ndarray, d: int) -> np.ndarray:
    return 0.5 * (c + np.conj(_reflect(c, d)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field; read-only once built."""

    coef: np.ndarray
    grid: Grid

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=np.complex128)
        d = self.grid.d
        if c.ndim < d + 1 or c.shape[-d:] != self.grid.shape:
            raise ValueError(
                f"coefficient extents {c.shape} do not match grid {self.grid.shape}"
            )
        view = c.view()
        view.flags.writeable = False
        object.__setattr__(self, "coef", view)

    @classmethod
    def zeros(cls, grid: Grid, ncomp: int = 1, batch: tuple[int, ...] = ()):
        return cls(np.zeros(batch + (ncomp,) + grid.shape, dtype=np.complex128), grid)

    @classmethod
    def from_modes(cls, grid: Grid, modes: Mapping[Sequence[int], object], ncomp=None):
        """Real field with u_hat(k) = a and u_hat(-k) = conj(a) for each (k, a)."""
        amps = {tuple(k): np.atleast_1d(np.asarray(a, dtype=complex)) for k, a in modes.items()}
        if ncomp is None:
            ncomp = max((len(a) for a in amps.values()), default=1)
        c = np.zeros((ncomp,) + grid.shape, dtype=np.complex128)
        for k, a in amps.items():
            if len(k) != grid.d:
                raise ValueError(f"mode {k} does not match d={grid.d}")
            idx = tuple(int(v) % grid.N for v in k)
            neg = tuple(int(-v) % grid.N for v in k)
            for j in range(ncomp):
                c[(j,) + idx] += a[j]
                if neg != idx:
                    c[(j,) + neg] += np.conj(a[j])
                else:
                    c[(j,) + idx] = c[(j,) + idx].real
        return cls(c, grid)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def ncomp(self) -> int:
        return self.coef.shape[-self.d - 1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coef.shape[: -self.d - 1]

    def replace(self, coef: np.ndarray) -> "SpectralField":
        return SpectralField(coef, self.grid)

    def component(self, j: int) -> "SpectralField":
        return self.replace(_comp(self.coef, slice(j, j + 1), self.d))

    def mean(self) -> np.ndarray:
        return self.coef[(..., slice(None)) + (0,) * self.d]

    def __add__(self, other):
        return self.replace(self.coef + _coef(other))

    def __sub__(self, other):
        return self.replace(self.coef - _coef(other))

    def __neg__(self):
        return self.replace(-self.coef)

    def __mul__(self, scalar):
        return self.replace(self.coef * scalar)

    __rmul__ = __mul__


def _coef(x):
    return x.coef if isinstance(x, SpectralField) else x


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real lattice samples, shape ``(*batch, D, N, ..., N)``."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        d = self.grid.d
        if v.ndim < d + 1 or v.shape[-d:] != self.grid.shape:
            raise ValueError(f"sample extents {v.shape} do not match grid {self.grid.shape}")
        view = v.view()
        view.flags.writeable = False
        object.__setattr__(self, "values", view)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "PhysicalField":
        """Sample ``fn(*coords)``; a scalar result becomes a one-component field."""
        v = np.asarray(fn(*grid.coords), dtype=float)
        if v.shape == grid.shape:
            v = v[None]
        return cls(v, grid)

    @property
    def ncomp(self) -> int:
        return self.values.shape[-self.grid.d - 1]


def forward_transform(f: PhysicalField) -> SpectralField:
    return SpectralField(_fft(f.values, f.grid.d), f.grid)


def inverse_transform(F: SpectralField) -> PhysicalField:
    return PhysicalField(_ifft(F.coef, F.d), F.grid)


def resample(F: SpectralField, grid: Grid) -> SpectralField:
    """Move coefficients to another grid of the same dimension.

    Modes that fit in both lattices are copied; the rest are dropped (when
    coarsening) or zero (when refining).  Nyquist modes are discarded.
    """
    if grid.d != F.d:
        raise ValueError("cannot resample across dimensions")
    if grid == F.grid:
        return F
    K = min(F.grid.N, grid.N) // 2 - 1
    src = F.grid.box_mask(K)
    dst = grid.box_mask(K)
    out = np.zeros(F.batch_shape + (F.ncomp,) + grid.shape, dtype=np.complex128)
    lead = F.coef.shape[: -F.d]
    out[..., dst] = F.coef.reshape(lead + (-1,))[..., src.ravel()]
    return SpectralField(out, grid)


def rect_truncate(F: SpectralField, n) -> SpectralField:
    """Rectangular partial sum: keep modes with |k_i| <= n_i."""
    return F.replace(F.coef * F.grid.box_mask(n))


def square_truncate(F: SpectralField, n: int) -> SpectralField:
    return rect_truncate(F, (int(n),) * F.d)


def is_truncated(F: SpectralField, n, tol: float = 0.0) -> bool:
    outside = F.coef[..., ~F.grid.box_mask(n)]
    return outside.size == 0 or float(np.max(np.abs(outside))) <= tol


def bessel_potential(F: SpectralField, s: float) -> SpectralField:
    """J^s with symbol (1 + 4 pi^2 |k|^2)^(s/2)."""
    symbol = (1.0 + TWO_PI**2 * F.grid.ksq) ** (0.5 * s)
    return F.replace(_symmetrize(F.coef * symbol, F.d))


def _require_mean_zero(F: SpectralField, tol: float = 1e-10) -> None:
    scale = max(1.0, float(np.max(np.abs(F.coef), initial=0.0)))
    if np.max(np.abs(F.mean()), initial=0.0) > tol * scale:
        raise MeanValueError("operator requires a mean-zero field (u_hat(0) = 0)")


def _inv_abs_k(grid: Grid) -> np.ndarray:
    ksq = grid.ksq.copy()
    ksq.flat[0] = 1.0
    out = 1.0 / np.sqrt(ksq)
    out.flat[0] = 0.0
    return out


def riesz_transform(F: SpectralField, j: int) -> SpectralField:
    """R_j = -d_j (-Laplacian)^(-1/2), symbol -i k_j/|k|; ``j`` is a 0-based axis."""
    _require_mean_zero(F)
    symbol = -1j * F.grid.wavenumbers[j] * _inv_abs_k(F.grid)
    return F.replace(_symmetrize(F.coef * symbol, F.d))


def _leray_coef(c: np.ndarray, grid: Grid) -> np.ndarray:
    d = grid.d
    if c.shape[-d - 1] != d:
        raise ValueError(f"Leray projection needs a {d}-component field")
    inv_ksq = _inv_abs_k(grid) ** 2
    ks = grid.wavenumbers
    div = sum(ks[i] * _comp(c, i, d) for i in range(d))
    div = div * inv_ksq
    out = np.stack([_comp(c, i, d) - ks[i] * div for i in range(d)], axis=-d - 1)
    out[(..., slice(None)) + (0,) * d] = 0.0
    return out


def leray_project(U: SpectralField) -> SpectralField:
    """Projection onto mean-zero divergence-free fields, symbol I - k k^T/|k|^2."""
    _require_mean_zero(U)
    return U.replace(_symmetrize(_leray_coef(U.coef, U.grid), U.d))


def inv_laplace_div(U: SpectralField) -> SpectralField:
    """Laplacian^{-1} div: symbol -(1/(4 pi^2 |k|^2)) sum_l 2 pi i k_l u_l(k)."""
    d = U.d
    if U.ncomp != d:
        raise ValueError(f"expected a {d}-component field")
    inv_ksq = _inv_abs_k(U.grid) ** 2
    div = sum(TWO_PI * 1j * U.grid.wavenumbers[l] * _comp(U.coef, l, d) for l in range(d))
    out = np.expand_dims(-inv_ksq / TWO_PI**2 * div, -d - 1)
    return U.replace(_symmetrize(out, d))


def gradient(F: SpectralField) -> SpectralField:
    """All first derivatives; output component ``j*d + i`` is d_i F_j."""
    d = F.d
    parts = [TWO_PI * 1j * k * F.coef for k in F.grid.wavenumbers]
    stacked = np.stack(parts, axis=-d - 1)  # (..., D, d, N..)
    shape = F.batch_shape + (F.ncomp * d,) + F.grid.shape
    return F.replace(stacked.reshape(shape))


def divergence(U: SpectralField) -> SpectralField:
    d = U.d
    if U.ncomp != d:
        raise ValueError(f"expected a {d}-component field")
    div = sum(TWO_PI * 1j * U.grid.wavenumbers[i] * _comp(U.coef, i, d) for i in range(d))
    return U.replace(np.expand_dims(div, -d - 1))


def inner(U: SpectralField, V: SpectralField) -> np.ndarray:
    """int U.V dx by Parseval, summed over components; one value per batch entry."""
    axes = tuple(range(-U.d - 1, 0))
    return np.sum(U.coef * np.conj(V.coef), axis=axes).real


def l2_norm(F: SpectralField) -> np.ndarray:
    """L^2 norm of the pointwise Euclidean magnitude, by Parseval."""
    axes = tuple(range(-F.d - 1, 0))
    return np.sqrt(np.sum(np.abs(F.coef) ** 2, axis=axes))


def grad_l2_norm(F: SpectralField) -> np.ndarray:
    axes = tuple(range(-F.d - 1, 0))
    w = TWO_PI**2 * F.grid.ksq
    return np.sqrt(np.sum(np.abs(F.coef) ** 2 * w, axis=axes))


def lp_norm(f: PhysicalField, p: float) -> np.ndarray:
    """Lattice-quadrature L^p norm of the pointwise Euclidean magnitude."""
    if not p >= 1:
        raise ValueError(f"L^p norm needs p >= 1, got {p}")
    return _lp_values(f.values, f.grid.d, p)


def _lp_values(v: np.ndarray, d: int, p: float) -> np.ndarray:
    axes = tuple(range(-d - 1, 0))
    # scale by the peak so large p neither overflows nor underflows
    peak = np.max(np.abs(v), axis=axes, keepdims=True)
    scale = np.where(peak > 0, peak, 1.0)
    w = v / scale
    if v.shape[-d - 1] == 1:
        mag = np.abs(_comp(w, 0, d))
    else:
        mag = np.sqrt(np.sum(w * w, axis=-d - 1))
    scale = scale.reshape(scale.shape[: -d - 1])
    if math.isinf(p):
        return scale * np.max(mag, axis=axes[1:])
    return scale * np.mean(mag**p, axis=axes[1:]) ** (1.0 / p)


def sobolev_norm(F: SpectralField, s: float, p: float) -> np.ndarray:
    """||J^s F||_p."""
    return lp_norm(inverse_transform(bessel_potential(F, s)), p)


def dealias_product(U: SpectralField, V: SpectralField, n) -> SpectralField:
    """S_n of the pointwise product, componentwise (a one-component factor broadcasts).

    Both factors must already be truncated at ``n`` and the grid must satisfy
    N >= 4 max(n) + 2, in which case the product is represented on the grid
    without aliasing and the result equals the truncated coefficient
    convolution exactly.
    """
    if U.grid != V.grid:
        raise ValueError("factors live on different grids")
    grid = U.grid
    n = as_multi_index(n, grid.d)
    grid.require_dealiased(n)
    for F in (U, V):
        if not is_truncated(F, n, tol=1e-12 * max(1.0, float(np.max(np.abs(F.coef), initial=0.0)))):
            raise ValueError(f"factor has content outside the truncation box {n}")
    prod = _ifft(U.coef, grid.d) * _ifft(V.coef, grid.d)
    return SpectralField(_fft(prod, grid.d) * grid.box_mask(n), grid)


def symmetrize(F: SpectralField) -> SpectralField:
    return F.replace(_symmetrize(F.coef, F.d))


def lattice_indices(grid: Grid, n) -> tuple[np.ndarray, ...]:
    """FFT-layout indices of the box prod [-n_i, n_i] in lexicographic k order."""
    n = as_multi_index(n, grid.d)
    if any(ni > grid.N // 2 - 1 for ni in n):
        raise ValueError(f"box {n} does not fit on grid N={grid.N}")
    ranges = [np.arange(-ni, ni + 1) % grid.N for ni in n]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return tuple(m.ravel() for m in mesh)


def box_coefficients(F: SpectralField, n) -> np.ndarray:
    """Coefficients on the box in lexicographic k order, shape (*batch, D, M)."""
    idx = lattice_indices(F.grid, n)
    return F.coef[(..., slice(None)) + idx]


def field_from_box(grid: Grid, n, values: np.ndarray) -> SpectralField:
    idx = lattice_indices(grid, n)
    values = np.asarray(values, dtype=np.complex128)
    out = np.zeros(values.shape[:-1] + grid.shape, dtype=np.complex128)
    out[(..., slice(None)) + idx] = values
    return SpectralField(out, grid)


def iter_modes(n: Iterable[int]):
    """Lexicographic enumeration of integer vectors in prod [-n_i, n_i]."""
    ranges = [range(-ni, ni + 1) for ni in n]
    return np.array(np.meshgrid(*ranges, indexing="ij")).reshape(len(ranges), -1).T


class HalfSpectrum:
    """Real-FFT layout: coefficients with k_d >= 0 only (last axis N//2 + 1 long)."""

    def __init__(self, grid: Grid):
        self.grid = grid
        N, d = grid.N, grid.d
        self.H = H = N // 2 + 1
        self.axes = tuple(range(-d, 0))
        self.wavenumbers = tuple(k[..., :H] for k in grid.wavenumbers)
        self.ksq = grid.ksq[..., :H]
        w = np.full(H, 2.0)
        w[0] = 1.0
        if N % 2 == 0:
            w[-1] = 1.0
        self.weight = w  # columns whose conjugate partner was dropped count twice
        ksq = self.ksq.astype(float)
        self._inv_ksq = np.where(ksq > 0, 1.0 / np.where(ksq > 0, ksq, 1.0), 0.0)

    def forward(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, axes=self.axes) / self.grid.N**self.grid.d

    def inverse(self, h: np.ndarray) -> np.ndarray:
        return sfft.irfftn(h, s=self.grid.shape, axes=self.axes) * self.grid.N**self.grid.d

    def from_full(self, c: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(c[..., : self.H])

    def _reflect_other(self, x: np.ndarray) -> np.ndarray:
        ax = self.axes[:-1]
        return np.roll(np.flip(x, axis=ax), 1, axis=ax) if ax else x

    def to_full(self, h: np.ndarray) -> np.ndarray:
        N, H = self.grid.N, self.H
        out = np.empty(h.shape[:-1] + (N,), dtype=np.complex128)
        out[..., :H] = h
        out[..., H:] = np.conj(self._reflect_other(h[..., N - H : 0 : -1]))
        return out

    def fix_planes(self, h: np.ndarray) -> np.ndarray:
        """Restore conjugate symmetry inside the self-paired planes (in place)."""
        cols = [0] + ([self.H - 1] if self.grid.N % 2 == 0 else [])
        ax = tuple(range(-self.grid.d + 1, 0))  # spatial axes of a plane
        for c in cols:
            p = h[..., c]
            r = np.roll(np.flip(p, axis=ax), 1, axis=ax) if ax else p
            h[..., c] = 0.5 * (p + np.conj(r))
        return h

    def box_mask(self, n) -> np.ndarray:
        return self.grid.box_mask(n)[..., : self.H]

    def leray(self, h: np.ndarray) -> np.ndarray:
        d = self.grid.d
        ks = self.wavenumbers
        div = sum(ks[i] * _comp(h, i, d) for i in range(d)) * self._inv_ksq
        out = np.stack([_comp(h, i, d) - ks[i] * div for i in range(d)], axis=-d - 1)
        out[(..., slice(None)) + (0,) * d] = 0.0
        return out

    def sq_norm(self, h: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
        """sum over the full spectrum of w |c|^2, per batch entry."""
        a = np.abs(h) ** 2 * self.weight
        if w is not None:
            a = a * w
        return np.sum(a, axis=tuple(range(-self.grid.d - 1, 0)))
