"""Cylindrical Wiener noise truncated to K modes, and noise coefficients sigma.

A model maps a velocity field ``u`` to the K fields ``sigma(u) e_k``.  Stacked
outputs carry the mode index as the last batch axis, i.e. coefficient arrays
of shape ``(*batch, K, D, N, ..., N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .fourier import (
    TWO_PI,
    Grid,
    HalfSpectrum,
    SpectralField,
    _fft,
    _ifft,
    _leray_coef,
    _symmetrize,
    bessel_potential,
    divergence,
    gradient,
    inverse_transform,
    l2_norm,
    lp_norm,
    _lp_values,
)


def _polarizations(k: np.ndarray) -> list[np.ndarray]:
    """Orthonormal vectors spanning the plane orthogonal to ``k``."""
    k = k.astype(float)
    if len(k) == 2:
        return [np.array([-k[1], k[0]]) / np.linalg.norm(k)]
    a = np.eye(3)[int(np.argmin(np.abs(k)))]
    e1 = np.cross(k, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(k, e1)
    e2 /= np.linalg.norm(e2)
    return [e1, e2]


def basis_modes(d: int, K: int) -> list[tuple[np.ndarray, np.ndarray, str]]:
    """First K (wavevector, polarization, 'cos'|'sin') triples.

    Wavevectors come from the half-space k > 0 (lexicographically), ordered by
    |k|^2 and then lexicographically, so the list depends only on d and K.
    """
    if d < 2:
        raise ValueError("divergence-free noise needs d >= 2")
    out = []
    r = 1
    while len(out) < K:
        rng = range(-r, r + 1)
        cand = [np.array(k) for k in np.array(np.meshgrid(*[rng] * d, indexing="ij")).reshape(d, -1).T]
        cand = [k for k in cand if tuple(k) > (0,) * d]
        cand.sort(key=lambda k: (int(k @ k), tuple(k)))
        out = []
        for k in cand:
            if k @ k > r * r:
                continue
            for a in _polarizations(k):
                out.append((k, a, "cos"))
                out.append((k, a, "sin"))
        r += 1
    return out[:K]


class NoiseBasis:
    """K divergence-free, mean-zero, L^2-orthonormal shape fields psi_k."""

    def __init__(self, grid: Grid, K: int = 16):
        if K < 1:
            raise ValueError("noise basis needs K >= 1")
        self.grid = grid
        self.K = K
        self.modes = basis_modes(grid.d, K)
        kmax = max(int(np.max(np.abs(k))) for k, _, _ in self.modes)
        if 2 * kmax + 1 >= grid.N:
            raise ValueError(f"grid N={grid.N} too small for noise modes up to |k_i|={kmax}")
        self.kmax = kmax
        c = np.zeros((K, grid.d) + grid.shape, dtype=np.complex128)
        s2 = math.sqrt(2.0) / 2.0
        for i, (k, a, kind) in enumerate(self.modes):
            pos = tuple(int(v) % grid.N for v in k)
            neg = tuple(int(-v) % grid.N for v in k)
            amp = s2 if kind == "cos" else -1j * s2
            for j in range(grid.d):
                c[(i, j) + pos] = a[j] * amp
                c[(i, j) + neg] = a[j] * np.conj(amp)
        self.shapes = SpectralField(c, grid)
        self.samples = _ifft(c, grid.d)
        self._views = {grid: self}

    def on(self, grid: Grid) -> "NoiseBasis":
        """The same basis sampled on another grid."""
        if grid not in self._views:
            self._views[grid] = NoiseBasis(grid, self.K)
        return self._views[grid]


@dataclass(frozen=True)
class WienerIncrement:
    dW: np.ndarray  # (*batch, K)
    dt: float


def sample_increment(basis: NoiseBasis | int, dt: float, rng: np.random.Generator) -> WienerIncrement:
    """K independent N(0, dt) draws."""
    if dt < 0:
        raise ValueError(f"time step must be nonnegative, got {dt}")
    K = basis if isinstance(basis, int) else basis.K
    return WienerIncrement(math.sqrt(dt) * rng.standard_normal(K), dt)


def path_generators(seed: int, paths: int, offset: int = 0) -> list[np.random.Generator]:
    """One independent generator per path; path i never depends on how many others run."""
    return [np.random.default_rng(np.random.SeedSequence([int(seed), int(offset), i])) for i in range(paths)]


class BrownianSource:
    """Per-path Wiener increments for batched simulation."""

    def __init__(self, K: int, generators: list[np.random.Generator]):
        self.K = K
        self.generators = generators

    @classmethod
    def from_seed(cls, K: int, seed: int, paths: int, offset: int = 0, first_path: int = 0):
        gens = path_generators(seed, first_path + paths, offset)[first_path:]
        return cls(K, gens)

    @property
    def paths(self) -> int:
        return len(self.generators)

    def standard(self, steps: int) -> np.ndarray:
        """Standard normals of shape (paths, steps, K)."""
        return np.stack([g.standard_normal((steps, self.K)) for g in self.generators])

    def increments(self, steps: int, dt: float) -> np.ndarray:
        return math.sqrt(dt) * self.standard(steps)


def decaying_coefficients(K: int, c0: float, beta: float) -> np.ndarray:
    """c_k = c0 k^(-beta), k = 1..K."""
    return c0 * np.arange(1, K + 1, dtype=float) ** (-beta)


def hs_tail(c0: float, beta: float, K: int) -> float:
    """sum_{k > K} c_k^2 for the power-law coefficients (infinite if beta <= 1/2)."""
    if beta <= 0.5:
        return math.inf
    return float(c0**2 * zeta(2 * beta, K + 1))


class NoiseModel:
    """Base class.  Subclasses implement ``apply``; ``increment`` may be specialized."""

    name = "custom"
    K: int = 1

    def apply(self, u: SpectralField) -> SpectralField:
        raise NotImplementedError

    def increment(self, u: SpectralField, dW: np.ndarray) -> np.ndarray:
        """Coefficients of sum_k sigma(u) e_k dW_k, shape of ``u.coef``."""
        s = self.apply(u).coef  # (*batch, K, D, ...)
        d = u.d
        w = np.asarray(dW).reshape(np.shape(dW) + (1,) * (d + 1))
        return np.sum(s * w, axis=-d - 2)

    def half_increment(self, h: np.ndarray, phys: np.ndarray, dW: np.ndarray, hs: HalfSpectrum) -> np.ndarray:
        """``increment`` in the real-FFT layout; ``phys`` holds the samples of u."""
        full = SpectralField(hs.to_full(h), hs.grid)
        return hs.from_full(self.increment(full, dW))

    @property
    def hs_mass(self) -> float:
        """sum_k c_k^2 over the retained modes."""
        return 0.0

    def describe(self) -> dict:
        return {"variant": self.name, "K": self.K}


class ZeroNoise(NoiseModel):
    name = "zero"

    def __init__(self, K: int = 16):
        self.K = K

    def apply(self, u):
        return SpectralField(np.zeros(u.batch_shape + (self.K,) + u.coef.shape[-u.d - 1 :], dtype=complex), u.grid)

    def increment(self, u, dW):
        return np.zeros_like(u.coef)

    def half_increment(self, h, phys, dW, hs):
        return np.zeros_like(h)


class AdditiveNoise(NoiseModel):
    """sigma(u) e_k = c_k psi_k, independent of u."""

    name = "additive"

    def __init__(self, basis: NoiseBasis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.K = basis.K
        if self.coeffs.shape != (self.K,):
            raise ValueError("need one coefficient per basis mode")

    def _shapes(self, grid):
        return self.basis.on(grid).shapes.coef * self.coeffs.reshape((self.K,) + (1,) * (grid.d + 1))

    def apply(self, u):
        s = self._shapes(u.grid)
        return SpectralField(np.broadcast_to(s, u.batch_shape + s.shape), u.grid)

    def increment(self, u, dW):
        s = self._shapes(u.grid)
        return np.tensordot(np.asarray(dW), s, axes=([-1], [0]))

    def half_increment(self, h, phys, dW, hs):
        s = hs.from_full(self._shapes(hs.grid))
        return np.tensordot(np.asarray(dW), s, axes=([-1], [0]))

    @property
    def hs_mass(self):
        return float(np.sum(self.coeffs**2))

    def describe(self):
        return {"variant": self.name, "K": self.K, "coeffs": self.coeffs.tolist()}


class LinearDiagonalNoise(NoiseModel):
    """Linear multiplicative noise with per-mode weights c_k.

    ``form`` selects sigma(u) e_k:

    * ``"scalar"``    c_k u
    * ``"smoothed"``  c_k J^{-1} u
    * ``"projected"`` c_k P(psi_k * u), componentwise product then Leray projection
    """

    name = "linear"
    FORMS = ("scalar", "smoothed", "projected")

    def __init__(self, coeffs, form: str = "scalar", basis: NoiseBasis | None = None):
        if form not in self.FORMS:
            raise ValueError(f"unknown linear noise form {form!r}")
        if form == "projected" and basis is None:
            raise ValueError("projected linear noise needs a basis")
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.K = len(self.coeffs)
        self.form = form
        self.basis = basis
        if basis is not None and basis.K != self.K:
            raise ValueError("basis size and coefficient count differ")

    def _base(self, u: SpectralField) -> SpectralField:
        return bessel_potential(u, -1.0) if self.form == "smoothed" else u

    def apply(self, u):
        d = u.d
        shape_c = self.coeffs.reshape((self.K,) + (1,) * (d + 1))
        if self.form == "projected":
            psi = _ifft(self.basis.on(u.grid).shapes.coef, d)  # (K, D, N..)
            uu = np.expand_dims(_ifft(u.coef, d), -d - 2)
            c = _fft(psi * uu, d)
            c = _symmetrize(_leray_coef(c, u.grid), d) * shape_c
            return SpectralField(c, u.grid)
        base = np.expand_dims(self._base(u).coef, -d - 2)
        return SpectralField(base * shape_c, u.grid)

    def increment(self, u, dW):
        d = u.d
        dW = np.asarray(dW)
        if self.form == "projected":
            psi = self.basis.on(u.grid).shapes.coef
            w = np.tensordot(dW * self.coeffs, psi, axes=([-1], [0]))  # sum_k c_k dW_k psi_k
            prod = _fft(_ifft(w, d) * _ifft(u.coef, d), d)
            return _symmetrize(_leray_coef(prod, u.grid), d)
        weight = (dW @ self.coeffs).reshape(dW.shape[:-1] + (1,) * (d + 1))
        return weight * self._base(u).coef

    def half_increment(self, h, phys, dW, hs):
        d = hs.grid.d
        dW = np.asarray(dW)
        if self.form == "projected":
            psi = self.basis.on(hs.grid).samples
            w = np.tensordot(dW * self.coeffs, psi, axes=([-1], [0]))
            return hs.leray(hs.forward(w * phys))
        weight = (dW @ self.coeffs).reshape(dW.shape[:-1] + (1,) * (d + 1))
        if self.form == "smoothed":
            return weight * h * (1.0 + TWO_PI**2 * hs.ksq) ** -0.5
        return weight * h

    @property
    def hs_mass(self):
        return float(np.sum(self.coeffs**2))

    def describe(self):
        return {"variant": self.name, "K": self.K, "form": self.form, "coeffs": self.coeffs.tolist()}


def make_noise(variant: str, grid: Grid, K: int = 16, c0: float = 1.0, beta: float = 1.0, form: str = "scalar") -> NoiseModel:
    """Reference models with power-law weights c_k = c0 k^-beta."""
    variant = variant.lower()
    if variant == "zero":
        return ZeroNoise(K)
    coeffs = decaying_coefficients(K, c0, beta)
    if variant == "additive":
        return AdditiveNoise(NoiseBasis(grid, K), coeffs)
    if variant in ("linear", "lineardiagonal"):
        basis = NoiseBasis(grid, K) if form == "projected" else None
        return LinearDiagonalNoise(coeffs, form=form, basis=basis)
    raise ValueError(f"unknown noise variant {variant!r}")


def apply_sigma(model: NoiseModel, u: SpectralField) -> list[SpectralField]:
    """The K fields sigma(u) e_k."""
    s = model.apply(u)
    d = u.d
    return [SpectralField(s.coef[(..., k) + (slice(None),) * (d + 1)], u.grid) for k in range(model.K)]


def _stack(fields) -> SpectralField:
    if isinstance(fields, SpectralField):
        return fields
    fields = list(fields)
    if not fields:
        raise ValueError("hs_lp_norm needs at least one field")
    grid = fields[0].grid
    if any(f.grid != grid for f in fields):
        raise ValueError("fields live on different grids")
    return SpectralField(np.stack([f.coef for f in fields], axis=-grid.d - 2), grid)


def hs_lp_norm(fields, p: float) -> np.ndarray:
    """(int (sum_k |f_k(x)|^2)^(p/2) dx)^(1/p), |.| Euclidean over components.

    ``fields`` is a list of fields or a stacked field whose mode axis sits just
    before the component axis.
    """
    F = _stack(fields)
    d = F.d
    v = _ifft(F.coef, d)
    flat = v.reshape(v.shape[: -d - 2] + (-1,) + v.shape[-d:])  # merge modes and components
    return _lp_values(flat, d, p)


@dataclass
class AssumptionReport:
    """Measured constants for the growth, Lipschitz and gradient conditions."""

    model: dict
    amplitudes: list[float]
    exponents: list[float]
    growth: dict = field(default_factory=dict)  # r -> max ratio per amplitude
    lipschitz: dict = field(default_factory=dict)
    gradient: list[float] = field(default_factory=list)
    divergence_residual: float = 0.0
    mean_residual: float = 0.0
    hs_mass: float = 0.0
    hs_tail: float | None = None
    verdicts: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "amplitudes": self.amplitudes,
            "exponents": self.exponents,
            "growth": {str(k): v for k, v in self.growth.items()},
            "lipschitz": {str(k): v for k, v in self.lipschitz.items()},
            "gradient": self.gradient,
            "divergence_residual": self.divergence_residual,
            "mean_residual": self.mean_residual,
            "hs_mass": self.hs_mass,
            "hs_tail": self.hs_tail,
            "verdicts": self.verdicts,
            "passed": self.passed,
        }


def _growth_exponent(values: list[float], amplitudes: list[float]) -> float:
    """Log-log slope between the two largest amplitudes."""
    a, b = values[-2], values[-1]
    if a == 0.0 and b == 0.0:
        return 0.0
    if a == 0.0 or not np.isfinite(a * b):
        return math.inf
    return math.log(b / a) / math.log(amplitudes[-1] / amplitudes[-2])


def verify_assumptions(
    model: NoiseModel,
    corpus: list[SpectralField],
    p: float,
    amplitudes=(1.0, 10.0, 100.0, 1000.0),
    max_growth: float = 0.25,
    residual_tol: float = 1e-10,
) -> AssumptionReport:
    """Sample the noise conditions over a corpus of divergence-free mean-zero fields.

    Each ratio is measured at every amplitude in ``amplitudes`` (the corpus is
    rescaled).  A ratio family counts as bounded when its log-log growth
    between the two largest amplitudes stays below ``max_growth``; a bounded
    constant gives ~0, a ratio growing linearly with amplitude gives ~1.
    """
    if len(corpus) < 2:
        raise ValueError("assumption check needs at least two corpus fields")
    amplitudes = [float(a) for a in amplitudes]
    exps = [2.0, float(p), 3.0 * p]
    rep = AssumptionReport(model=model.describe(), amplitudes=amplitudes, exponents=exps, hs_mass=model.hs_mass)
    if isinstance(model, (AdditiveNoise, LinearDiagonalNoise)) and model.K:
        c = model.coeffs
        if len(c) > 1 and c[0] > 0 and c[1] > 0:
            beta = math.log(c[0] / c[1]) / math.log(2.0)
            rep.hs_tail = hs_tail(float(c[0]), beta, model.K)

    U = SpectralField(np.stack([u.coef for u in corpus]), corpus[0].grid)
    V = SpectralField(np.roll(U.coef, 1, axis=0), U.grid)  # pairs (u_i, u_{i-1})
    d = U.d
    growth = {r: [] for r in exps}
    lip = {r: [] for r in exps[:2]}
    grad = []
    div_res = mean_res = 0.0
    for lam in amplitudes:
        u, v = U * lam, V * lam
        su, sv = model.apply(u), model.apply(v)
        uphys = inverse_transform(u)
        diff = inverse_transform(u - v)
        for r in exps:
            ratio = hs_lp_norm(su, r) / (lp_norm(uphys, r) + 1.0)
            growth[r].append(float(np.max(ratio)))
        for r in exps[:2]:
            num = hs_lp_norm(su - sv, r)
            den = lp_norm(diff, r)
            ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 0.0))
            lip[r].append(float(np.max(ratio)))
        gnorm = l2_norm(gradient(su))  # over modes, components, directions
        gnorm = np.sqrt(np.sum(gnorm**2, axis=-1))
        grad.append(float(np.max(gnorm / l2_norm(u))))
        scale = max(1.0, float(np.max(np.abs(su.coef))))
        if su.ncomp == d:
            div_res = max(div_res, float(np.max(np.abs(divergence(su).coef))) / scale)
        mean_res = max(mean_res, float(np.max(np.abs(su.mean()))) / scale)

    rep.growth, rep.lipschitz, rep.gradient = growth, lip, grad
    rep.divergence_residual, rep.mean_residual = div_res, mean_res
    finite = all(np.isfinite(x) for vals in [*growth.values(), *lip.values(), grad] for x in vals)
    rep.verdicts = {
        "finite": bool(finite),
        "growth_bounded": all(_growth_exponent(growth[r], amplitudes) < max_growth for r in exps),
        "lipschitz_bounded": all(_growth_exponent(lip[r], amplitudes) < max_growth for r in lip),
        "gradient_bounded": _growth_exponent(grad, amplitudes) < max_growth,
        "divergence_free": div_res < residual_tol,
        "mean_zero": mean_res < residual_tol,
    }
    return rep
