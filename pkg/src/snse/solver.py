"""Galerkin truncation of the stochastic Navier-Stokes system and its time stepping.

The truncated system is

    du = Delta u dt - S_n P((u . grad) u) dt + S_n sigma(u) dW,   u(0) = S_n u0,

with S_n the cubic Fourier truncation and P the Leray projector.  Paths are
batched along the leading axis; each path owns its Brownian increments.
"""

from __future__ import annotations

import csv
import dataclasses
import functools
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fourier import (
    TWO_PI,
    AliasingError,
    Grid,
    HalfSpectrum,
    SpectralField,
    _fft,
    _ifft,
    _leray_coef,
    _lp_values,
    _symmetrize,
    dealias_size,
    inverse_transform,
    is_truncated,
    lattice_indices,
    lp_norm,
    rect_truncate,
    resample,
)
from .functionals import fd_grad_power_sq
from .noise import BrownianSource, NoiseModel, WienerIncrement, ZeroNoise

SCHEMES = ("exponential", "semi-implicit")
BLOWUP_LEVEL = 1e100


@dataclass(frozen=True)
class SolverConfig:
    d: int = 2
    n: int = 8
    N: int | None = None  # defaults to the smallest dealiasing grid
    dt: float = 1e-3
    horizon: float = 0.5
    p: float = 4.0
    M: float = 1e9
    noise: NoiseModel = field(default_factory=ZeroNoise)
    seed: int = 0
    scheme: str = "exponential"
    seed_offset: int = 0
    nonlinear: bool = True  # False gives the stochastic Stokes system

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be positive, got {self.d}")
        if self.n < 1:
            raise ValueError(f"truncation must be positive, got {self.n}")
        if self.N is None:
            object.__setattr__(self, "N", dealias_size(self.n))
        if self.N < 4 * self.n + 2:
            raise AliasingError(f"grid N={self.N} cannot dealias truncation n={self.n}: need N >= 4n+2 = {4 * self.n + 2}")
        if not self.p > self.d:
            raise ValueError(f"need p > d, got p={self.p}, d={self.d}")
        if not self.dt > 0:
            raise ValueError(f"time step must be positive, got {self.dt}")
        if self.horizon < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if not self.M > 0:
            raise ValueError(f"cutoff level must be positive, got {self.M}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        kpsi = getattr(getattr(self.noise, "basis", None), "kmax", 0)
        if getattr(self.noise, "form", None) == "projected" and self.N < 2 * self.n + kpsi + 1:
            raise AliasingError(f"grid N={self.N} aliases the projected noise product (need N >= {2 * self.n + kpsi + 1})")

    @property
    def grid(self) -> Grid:
        return Grid(self.d, self.N)

    @property
    def steps(self) -> int:
        return int(math.ceil(self.horizon / self.dt - 1e-9))

    def replace(self, **kw) -> "SolverConfig":
        if "n" in kw and "N" not in kw:
            kw["N"] = None
        return dataclasses.replace(self, **kw)


class TruncationGate:
    """C-infinity cutoff: 1 on [0, M/2], 0 from M on, monotone in between."""

    def __init__(self, M: float):
        if not M > 0:
            raise ValueError("gate level must be positive")
        self.M = float(M)

    @staticmethod
    def _f(t):
        with np.errstate(divide="ignore"):
            return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        s = np.clip((x - self.M / 2) / (self.M / 2), 0.0, 1.0)
        a, b = self._f(1.0 - s), self._f(s)
        return a / (a + b)


class StoppingMonitor:
    """Running sup ||u||_p and left-endpoint integral of ||u||_{3p}^p, per path."""

    def __init__(self, M: float, p: float, dt: float, paths: int = 1):
        self.M, self.p, self.dt = float(M), float(p), float(dt)
        self.sup = np.zeros(paths)
        self.integral = np.zeros(paths)
        self.last = np.full(paths, np.nan)
        self.fired_at = np.full(paths, np.nan)

    def copy(self) -> "StoppingMonitor":
        new = StoppingMonitor(self.M, self.p, self.dt, len(self.sup))
        for name in ("sup", "integral", "last", "fired_at"):
            setattr(new, name, getattr(self, name).copy())
        return new

    def update(self, t: float, lp, l3p, active=None) -> tuple[np.ndarray, np.ndarray]:
        """Observe the norms at time t; return (statistic, newly fired mask)."""
        idx = slice(None) if active is None else active
        last = self.last[idx]
        self.integral[idx] += np.where(np.isnan(last), 0.0, last**self.p * self.dt)
        self.sup[idx] = np.maximum(self.sup[idx], lp)
        self.last[idx] = l3p
        stat = self.sup[idx] + self.integral[idx] ** (1.0 / self.p)
        new = (stat >= self.M) & np.isnan(self.fired_at[idx])
        fired = self.fired_at[idx]
        fired[new] = t
        self.fired_at[idx] = fired
        return stat, new

    @property
    def statistic(self) -> np.ndarray:
        return self.sup + self.integral ** (1.0 / self.p)


def monitor_statistic(lp, l3p, dt: float, p: float) -> np.ndarray:
    """Stopping statistic along a sequence of grid times (last axis)."""
    lp, l3p = np.asarray(lp, float), np.asarray(l3p, float)
    sup = np.maximum.accumulate(lp, axis=-1)
    inc = np.concatenate([np.zeros(l3p.shape[:-1] + (1,)), np.cumsum(l3p[..., :-1] ** p * dt, axis=-1)], axis=-1)
    return sup + inc ** (1.0 / p)


def detect_stop(stats, M: float, dt: float, horizon: float | None = None) -> float:
    """First grid time at which the statistic reaches M, else the horizon."""
    stats = np.asarray(stats, float)
    hit = np.flatnonzero(stats >= M)
    if hit.size:
        return float(hit[0] * dt)
    return float((len(stats) - 1) * dt if horizon is None else horizon)


class GalerkinStepper:
    """Precomputed multipliers for one configuration, in the real-FFT layout."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.grid = grid = cfg.grid
        self.d = grid.d
        self.hs = hs = HalfSpectrum(grid)
        self.mask = hs.box_mask(cfg.n)
        lam = TWO_PI**2 * hs.ksq * cfg.dt
        decay = np.exp(-lam) if cfg.scheme == "exponential" else 1.0 / (1.0 + lam)
        self.factor = decay * self.mask
        self.ik = [TWO_PI * 1j * k for k in hs.wavenumbers]
        self.pairs = [(i, j) for i in range(self.d) for j in range(i, self.d)]
        self.noisy = not isinstance(cfg.noise, ZeroNoise)

    def flux_divergence(self, phys: np.ndarray) -> np.ndarray:
        """sum_i d_i (u_i u), unprojected, from samples of shape (*batch, d, N..)."""
        d = self.d
        prods = np.stack([phys[_ix(i, d)] * phys[_ix(j, d)] for i, j in self.pairs], axis=-d - 1)
        w = self.hs.forward(prods)
        out = np.zeros(w.shape[: -d - 1] + (d,) + w.shape[-d:], dtype=complex)
        for q, (i, j) in enumerate(self.pairs):
            wq = w[_ix(q, d)]
            out[_ix(j, d)] += self.ik[i] * wq
            if i != j:
                out[_ix(i, d)] += self.ik[j] * wq
        return out

    def nonlinear(self, phys: np.ndarray) -> np.ndarray:
        """-S_n P sum_i d_i (u_i u)."""
        return -self.hs.leray(self.flux_divergence(phys)) * self.mask

    def advance(self, h, phys, dW, nl_gate=None, noise_gate=None, noise_state=None) -> np.ndarray:
        """One step in the half layout.

        Optional per-path gate factors multiply the drift and noise terms;
        ``noise_state`` = (h, phys) evaluates sigma at another field.
        """
        cfg, d = self.cfg, self.d
        upd = h
        if cfg.nonlinear:
            B = self.flux_divergence(phys)
            if nl_gate is not None:
                B = B * _bcast(nl_gate, d)
            upd = h - cfg.dt * B
        if self.noisy:
            nh, nphys = (h, phys) if noise_state is None else noise_state
            G = cfg.noise.half_increment(nh, nphys, dW, self.hs)
            if noise_gate is not None:
                G = G * _bcast(noise_gate, d)
            upd = upd + G
        return self.hs.fix_planes(self.hs.leray(upd) * self.factor)

    def physical(self, h: np.ndarray) -> np.ndarray:
        return self.hs.inverse(h)


def _ix(i, d):
    return (Ellipsis, i) + (slice(None),) * d


def _bcast(x, d):
    x = np.asarray(x, float)
    return x.reshape(x.shape + (1,) * (d + 1))


@functools.lru_cache(maxsize=16)
def _stepper(cfg: SolverConfig) -> GalerkinStepper:
    return GalerkinStepper(cfg)


def _check_band(u: SpectralField, n) -> None:
    u.grid.require_dealiased(n)
    scale = max(1.0, float(np.max(np.abs(u.coef), initial=0.0)))
    if not is_truncated(u, n, tol=1e-12 * scale):
        raise ValueError(f"field has content outside the truncation box {n}")


def nonlinear_term(u: SpectralField, n: int) -> SpectralField:
    """-S_n P((u . grad) u) evaluated in divergence form with exact dealiasing."""
    _check_band(u, n)
    grid = u.grid
    cfg = SolverConfig(d=grid.d, n=n, N=grid.N, p=grid.d + 1.0)
    st = _stepper(cfg)
    return SpectralField(st.hs.to_full(st.nonlinear(_ifft(u.coef, grid.d))), grid)


def convective_term(v: SpectralField, u: SpectralField, n: int) -> SpectralField:
    """S_n P((v . grad) u) in advective form, dealiased."""
    for f in (u, v):
        _check_band(f, n)
    grid, d = u.grid, u.d
    vp = _ifft(v.coef, d)
    out = np.zeros(u.coef.shape, dtype=complex)
    for j in range(d):
        uj = u.coef[_ix(j, d)]
        acc = sum(vp[_ix(i, d)] * _ifft(TWO_PI * 1j * grid.wavenumbers[i] * uj, d) for i in range(d))
        out[_ix(j, d)] = _fft(acc, d)
    return SpectralField(_symmetrize(_leray_coef(out, grid), d) * grid.box_mask(n), grid)


def prepare_initial(u0: SpectralField, cfg: SolverConfig, tol: float = 1e-8) -> np.ndarray:
    """S_n u0 on the configuration grid, after checking the constraints."""
    grid = cfg.grid
    if u0.d != cfg.d or u0.ncomp != cfg.d:
        raise ValueError(f"initial datum must be a {cfg.d}-component field in d={cfg.d}")
    c = u0.coef
    scale = max(1.0, float(np.max(np.abs(c), initial=0.0)))
    if np.max(np.abs(u0.mean()), initial=0.0) > tol * scale:
        raise ValueError("initial datum must have zero mean")
    div = sum(u0.grid.wavenumbers[i] * c[_ix(i, cfg.d)] for i in range(cfg.d))
    if np.max(np.abs(div), initial=0.0) > tol * scale:
        raise ValueError("initial datum must be divergence-free")
    if u0.grid != grid:
        u0 = resample(rect_truncate(u0, min(cfg.n, u0.grid.N // 2 - 1)), grid)
    return rect_truncate(u0, cfg.n).coef.copy()


@dataclass
class SolverState:
    t: float
    u: SpectralField
    monitor: StoppingMonitor | None = None
    stopped: bool = False


def step(state: SolverState, cfg: SolverConfig, dW: WienerIncrement | np.ndarray) -> SolverState:
    """Advance one time step; the monitor (if any) observes the new state."""
    if state.stopped:
        return state
    dw = dW.dW if isinstance(dW, WienerIncrement) else np.asarray(dW)
    st = _stepper(cfg)
    h = st.hs.from_full(state.u.coef)
    with np.errstate(all="ignore"):
        new = st.hs.to_full(st.advance(h, st.physical(h), dw))
    t = state.t + cfg.dt
    if not np.all(np.isfinite(new)) or np.max(np.abs(new)) > BLOWUP_LEVEL:
        return SolverState(state.t, state.u, state.monitor, True)
    mon = state.monitor
    stopped = False
    if mon is not None:
        mon = mon.copy()
        phys = _ifft(new, cfg.d)
        _, fired = mon.update(t, _lp_values(phys, cfg.d, cfg.p), _lp_values(phys, cfg.d, 3 * cfg.p))
        stopped = bool(np.any(fired))
    return SolverState(t, SpectralField(new, cfg.grid), mon, stopped)


COLUMNS = ("t", "l2", "grad_l2", "lp", "l3p", "energy_grad_p", "monitor_stat", "stopped")


@dataclass
class TrajectoryRecord:
    """Per-path time series up to the stopping time; entries past it are NaN."""

    times: np.ndarray
    l2: np.ndarray
    grad_l2: np.ndarray
    lp: np.ndarray
    l3p: np.ndarray
    energy_grad_p: np.ndarray
    monitor_stat: np.ndarray
    tau: np.ndarray
    stop_index: np.ndarray
    fired: np.ndarray
    blowup: np.ndarray
    final: SpectralField
    p: float
    dt: float
    n: int
    history: np.ndarray | None = None  # (paths, times, D, box) truncation-box coefficients

    @property
    def paths(self) -> int:
        return self.l2.shape[0]

    def valid(self) -> np.ndarray:
        """Mask of recorded grid times t_j <= tau per path."""
        j = np.arange(len(self.times))
        return j[None, :] <= self.stop_index[:, None]

    def _left_sum(self, values: np.ndarray) -> np.ndarray:
        j = np.arange(len(self.times))
        w = j[None, :] < self.stop_index[:, None]
        return np.sum(np.where(w, values, 0.0), axis=1) * self.dt

    def l2_energy(self) -> np.ndarray:
        """sup ||u||_2^2 + int ||grad u||_2^2 over [0, tau]."""
        sup = np.max(np.where(self.valid(), self.l2, -np.inf), axis=1) ** 2
        return sup + self._left_sum(self.grad_l2**2)

    def lp_energy(self) -> np.ndarray:
        """sup ||u||_p^p + int sum_j ||grad(|u_j|^(p/2))||_2^2 over [0, tau]."""
        sup = np.max(np.where(self.valid(), self.lp, -np.inf), axis=1) ** self.p
        return sup + self._left_sum(self.energy_grad_p)

    def rows(self, path: int = 0):
        for j in range(int(self.stop_index[path]) + 1):
            stopped = j == self.stop_index[path] and (self.fired[path] or self.blowup[path])
            yield (
                float(self.times[j]),
                *(float(a[path, j]) for a in (self.l2, self.grad_l2, self.lp, self.l3p, self.energy_grad_p, self.monitor_stat)),
                int(stopped),
            )

    def to_csv(self, path: int = 0) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows(path):
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])
        return buf.getvalue()


def _pow(w: np.ndarray, e: float) -> np.ndarray:
    k = int(e)
    if k == e and 1 <= k <= 8:  # repeated squaring beats the generic pow
        out, base = None, w
        while k:
            if k & 1:
                out = base if out is None else out * base
            base = base * base
            k >>= 1
        return out
    return w**e


def lp_pair(phys: np.ndarray, d: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """(||u||_p, ||u||_{3p}) of the Euclidean magnitude, one pass over the samples."""
    axes = tuple(range(-d, 0))
    m2 = np.sum(phys * phys, axis=-d - 1)
    peak = np.max(m2, axis=axes, keepdims=True)
    scale = np.where(peak > 0, peak, 1.0)
    w = m2 / scale
    root = np.sqrt(scale.reshape(scale.shape[:-d]))
    a = _pow(w, p / 2)
    lp = root * np.mean(a, axis=axes) ** (1.0 / p)
    l3p = root * np.mean(a * a * a, axis=axes) ** (1.0 / (3 * p))
    return lp, l3p


class _Recorder:
    def __init__(self, cfg: SolverConfig, paths: int, energy: bool, history: bool):
        T = cfg.steps + 1
        self.cfg = cfg
        self.hs = HalfSpectrum(cfg.grid)
        self.times = np.arange(T) * cfg.dt
        self.cols = {k: np.full((paths, T), np.nan) for k in ("l2", "grad_l2", "lp", "l3p", "energy_grad_p", "monitor_stat")}
        self.monitor = StoppingMonitor(cfg.M, cfg.p, cfg.dt, paths)
        self.stop_index = np.full(paths, cfg.steps)
        self.fired = np.zeros(paths, bool)
        self.blowup = np.zeros(paths, bool)
        self.energy = energy
        self.idx = lattice_indices(cfg.grid, cfg.n) if history else None
        self.history = np.full((paths, T, cfg.d, len(self.idx[0])), np.nan, complex) if history else None
        self.w = TWO_PI**2 * self.hs.ksq

    def observe(self, j: int, h, phys, active) -> np.ndarray:
        """Record time t_j for the ``active`` paths; return the newly fired mask."""
        cfg, d = self.cfg, self.cfg.d
        c = self.cols
        c["l2"][active, j] = np.sqrt(self.hs.sq_norm(h))
        c["grad_l2"][active, j] = np.sqrt(self.hs.sq_norm(h, self.w))
        lp, l3p = lp_pair(phys, d, cfg.p)
        c["lp"][active, j], c["l3p"][active, j] = lp, l3p
        if self.energy:
            c["energy_grad_p"][active, j] = fd_grad_power_sq(phys, d, cfg.p)
        if self.history is not None:
            self.history[active, j] = self.hs.to_full(h)[(..., slice(None)) + self.idx]
        stat, fired = self.monitor.update(j * cfg.dt, lp, l3p, active)
        c["monitor_stat"][active, j] = stat
        return fired

    def finish(self, final_h) -> TrajectoryRecord:
        cfg = self.cfg
        return TrajectoryRecord(
            times=self.times,
            **self.cols,
            tau=self.stop_index * cfg.dt,
            stop_index=self.stop_index,
            fired=self.fired,
            blowup=self.blowup,
            final=SpectralField(self.hs.to_full(final_h), cfg.grid),
            p=cfg.p,
            dt=cfg.dt,
            n=cfg.n,
            history=self.history,
        )


def brownian_increments(cfg: SolverConfig, paths: int, first_path: int = 0, steps: int | None = None) -> np.ndarray:
    """Seeded increments of shape (paths, steps, K)."""
    src = BrownianSource.from_seed(cfg.noise.K, cfg.seed, paths, cfg.seed_offset, first_path)
    return src.increments(cfg.steps if steps is None else steps, cfg.dt)


def _initial_batch(cfg, u0, paths):
    c = prepare_initial(u0, cfg)
    if c.ndim == cfg.d + 1:
        c = np.broadcast_to(c, (paths,) + c.shape).copy()
    if c.shape[0] != paths:
        raise ValueError(f"initial batch has {c.shape[0]} paths, expected {paths}")
    return c


def _increment_batch(cfg, dW, paths, first_path):
    if dW is None:
        return brownian_increments(cfg, paths, first_path)
    dW = np.asarray(dW, float)
    if dW.ndim == 2:
        dW = dW[None]
    if dW.shape[1:] != (cfg.steps, cfg.noise.K) or dW.shape[0] != paths:
        raise ValueError(f"increments have shape {dW.shape}, expected ({paths}, {cfg.steps}, {cfg.noise.K})")
    return dW


def simulate(
    cfg: SolverConfig,
    u0: SpectralField,
    dW: np.ndarray | None = None,
    *,
    paths: int | None = None,
    first_path: int = 0,
    energy: bool = True,
    history: bool = False,
) -> TrajectoryRecord:
    """Integrate a batch of paths to min(horizon, tau, blow-up).

    ``u0`` is one field (shared by all paths) or a batch with one entry per
    path.  Without ``dW`` each path draws its increments from its own
    generator seeded by (seed, seed_offset, path index).
    """
    if paths is None:
        paths = u0.coef.shape[0] if u0.coef.ndim == cfg.d + 2 else (np.shape(dW)[0] if dW is not None and np.ndim(dW) == 3 else 1)
    st = _stepper(cfg)
    h = st.hs.from_full(_initial_batch(cfg, u0, paths))
    incs = _increment_batch(cfg, dW, paths, first_path)
    rec = _Recorder(cfg, paths, energy, history)
    active = np.ones(paths, bool)
    phys = st.physical(h)
    for j in range(cfg.steps + 1):
        ids = np.flatnonzero(active)
        every = len(ids) == paths
        fired = rec.observe(j, h if every else h[ids], phys if every else phys[ids], ids)
        rec.fired[ids[fired]] = True
        rec.stop_index[ids[fired]] = j
        active[ids[fired]] = False
        if j == cfg.steps or not active.any():
            break
        ids = np.flatnonzero(active)
        every = len(ids) == paths
        with np.errstate(all="ignore"):
            new = st.advance(h if every else h[ids], phys if every else phys[ids], incs[ids, j])
        red = tuple(range(1, new.ndim))
        size = np.max(np.abs(new), axis=red)
        bad = ~(size <= BLOWUP_LEVEL)  # catches nan as well
        if bad.any():
            rec.blowup[ids[bad]] = True
            rec.stop_index[ids[bad]] = j
            active[ids[bad]] = False
            ids, new = ids[~bad], new[~bad]
            every = False
        if every:
            h, phys = new, st.physical(new)
        else:
            h[ids] = new
            phys[ids] = st.physical(new)
    return rec.finish(h)


def simulate_path(cfg: SolverConfig, u0: SpectralField, dW: np.ndarray | None = None, **kw) -> TrajectoryRecord:
    """Single path (index 0 of the seeded family unless ``dW`` is given)."""
    return simulate(cfg, u0, dW, paths=1, **kw)


@dataclass
class PicardResult:
    record: TrajectoryRecord
    iterations: int
    residuals: list[float]
    converged: bool


def _picard_iterate(st: GalerkinStepper, h0, incs, gate, prev=None) -> np.ndarray:
    """Half-layout history of one Picard iterate (noise frozen at ``prev``)."""
    steps = incs.shape[0]
    hist = np.empty((steps + 1,) + h0.shape, complex)
    hist[0] = h = h0
    for j in range(steps):
        if prev is None:  # heat flow
            h = h * st.factor
        else:
            g_cur = gate(np.sqrt(st.hs.sq_norm(h))) ** 2
            g_prev = gate(np.sqrt(st.hs.sq_norm(prev[j]))) ** 2
            state = (prev[j], st.physical(prev[j]))
            h = st.advance(h, st.physical(h), incs[j], nl_gate=g_cur, noise_gate=g_prev, noise_state=state)
        hist[j + 1] = h
    return hist


def picard_solve(
    cfg: SolverConfig,
    u0: SpectralField,
    horizon: float | None = None,
    tol: float = 1e-10,
    max_iters: int = 50,
    dW: np.ndarray | None = None,
) -> PicardResult:
    """Gated Picard iteration with the noise coefficient lagged one iterate.

    Iterate 0 is the heat flow from S_n u0.  Iterate k solves the system with
    drift gated by phi^M(||u^(k)||_2)^2 and noise sigma(u^(k-1)) gated by
    phi^M(||u^(k-1)||_2)^2, using the same increments every time.  Stops when
    sup_t ||u^(k) - u^(k-1)||_2 < tol.
    """
    if horizon is not None:
        cfg = cfg.replace(horizon=horizon)
    st = _stepper(cfg)
    h0 = st.hs.from_full(prepare_initial(u0, cfg))
    incs = _increment_batch(cfg, dW, 1, 0)[0]
    gate = TruncationGate(cfg.M)
    prev = _picard_iterate(st, h0, incs, gate)
    residuals = []
    converged = False
    k = 0
    with np.errstate(all="ignore"):
        for k in range(1, max_iters + 1):
            cur = _picard_iterate(st, h0, incs, gate, prev)
            res = float(np.max(np.sqrt(st.hs.sq_norm(cur - prev))))
            residuals.append(res)
            prev = cur
            if res < tol:
                converged = True
                break
            if not np.isfinite(res):
                break
    return PicardResult(record_history(cfg, st.hs.to_full(prev)), k, residuals, converged)


def record_history(cfg: SolverConfig, hist: np.ndarray, energy: bool = True, stop: bool = False) -> TrajectoryRecord:
    """Trajectory statistics of a precomputed single-path coefficient history.

    With ``stop`` the record ends where the monitor fires; otherwise the whole
    history is kept and ``fired`` only reports whether the level was reached.
    """
    rec = _Recorder(cfg, 1, energy, history=True)
    hs = rec.hs
    ids = np.array([0])
    last = len(hist) - 1
    for j in range(len(hist)):
        h = hs.from_full(hist[j][None])
        fired = rec.observe(j, h, hs.inverse(h), ids)
        if fired[0]:
            rec.fired[0] = True
            if stop:
                last = j
                break
    rec.stop_index[0] = last
    return rec.finish(hs.from_full(hist[last][None]))


def default_cutoff(u0: SpectralField, p: float, ns) -> float:
    """M = 2 sup_n ||S_n u0||_p + 1 over the truncations ``ns``."""
    grid = u0.grid
    best = 0.0
    for n in ns:
        n = min(n, grid.N // 2 - 1)
        best = max(best, float(np.max(lp_norm(inverse_transform(rect_truncate(u0, n)), p))))
    return 2.0 * best + 1.0

