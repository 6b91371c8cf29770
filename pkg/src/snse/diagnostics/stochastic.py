"""Monte-Carlo studies on the Galerkin solver: energy moments, tails, Cauchy differences, scheme checks."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..fourier import HalfSpectrum, SpectralField, field_from_box, inverse_transform, l2_norm, lp_norm, minn
from ..noise import AdditiveNoise
from ..solver import (
    BLOWUP_LEVEL,
    SolverConfig,
    StoppingMonitor,
    TrajectoryRecord,
    _initial_batch,
    _stepper,
    brownian_increments,
    default_cutoff,
    lp_pair,
    picard_solve,
    simulate,
    simulate_path,
)
from .operators import loglog_slope
from .reports import ConvergenceReport, EnsembleStats, VerificationReport

FUNCTIONALS = ("l2", "lp", "tail")


# ---------------------------------------------------------------- fan-out


def _chunks(paths: int, jobs: int) -> list[tuple[int, int]]:
    jobs = max(1, min(jobs, paths))
    size = -(-paths // jobs)
    return [(a, min(size, paths - a)) for a in range(0, paths, size)]


def _fan_out(fn, items, jobs: int):
    """Map ``fn`` over ``items``, in a process pool when jobs > 1; results keep item order."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *it) for it in items]
        return [f.result() for f in futures]


def _simulate_chunk(cfg, u0, first, count, energy):
    return simulate(cfg, u0, paths=count, first_path=first, energy=energy)


def merge_records(records: list[TrajectoryRecord]) -> TrajectoryRecord:
    """Concatenate path batches in order; the reduction is associative."""
    if len(records) == 1:
        return records[0]
    r0 = records[0]
    cat = lambda name: np.concatenate([getattr(r, name) for r in records])  # noqa: E731
    hist = None if r0.history is None else cat("history")
    final = SpectralField(np.concatenate([r.final.coef for r in records]), r0.final.grid)
    names = ("l2", "grad_l2", "lp", "l3p", "energy_grad_p", "monitor_stat", "tau", "stop_index", "fired", "blowup")
    return dataclasses.replace(r0, **{k: cat(k) for k in names}, final=final, history=hist)


def run_ensemble(cfg: SolverConfig, u0: SpectralField, paths: int, jobs: int = 1, energy: bool = True) -> TrajectoryRecord:
    """Seeded paths 0..paths-1, split into contiguous chunks across ``jobs`` workers."""
    items = [(cfg, u0, a, c, energy) for a, c in _chunks(paths, jobs)]
    return merge_records(_fan_out(_simulate_chunk, items, jobs))


# ---------------------------------------------------------------- functionals


def until(rec: TrajectoryRecord, S: float) -> TrajectoryRecord:
    """The record seen on [0, min(tau, S)]."""
    j = int(round(S / rec.dt))
    return dataclasses.replace(rec, stop_index=np.minimum(rec.stop_index, j))


def path_functional(rec: TrajectoryRecord, name: str, S: float | None = None, M: float | None = None) -> np.ndarray:
    """Per-path value of the L^2 energy, the L^p energy, or the tail indicator {L^p energy >= M^p}."""
    if S is not None:
        rec = until(rec, S)
    if name == "l2":
        return rec.l2_energy()
    if name == "lp":
        return rec.lp_energy()
    if name == "tail":
        if M is None:
            raise ValueError("the tail functional needs a level M")
        return (rec.lp_energy() >= M**rec.p).astype(float)
    raise ValueError(f"unknown functional {name!r}; choose from {FUNCTIONALS}")


def ensemble_expectation(
    cfg: SolverConfig,
    u0: SpectralField,
    paths: int,
    functional: str = "l2",
    *,
    S: float | None = None,
    jobs: int = 1,
    record: TrajectoryRecord | None = None,
) -> EnsembleStats:
    """Mean, variance and standard error of a functional over seeded independent paths.

    Each path is cut at its stopping time; the tail indicator uses the level ``cfg.M``.
    """
    if functional not in FUNCTIONALS:
        raise ValueError(f"unknown functional {functional!r}; choose from {FUNCTIONALS}")
    if record is None:
        record = run_ensemble(cfg, u0, paths, jobs, energy=functional != "l2")
    return EnsembleStats.from_values(path_functional(record, functional, S, cfg.M))


def energy_bound_study(cfg: SolverConfig, u0: SpectralField, ns=(8, 16, 32), paths: int = 64, jobs: int = 1, factor: float = 2.0) -> VerificationReport:
    """n-uniformity of E[sup ||u||_2^2 + int ||grad u||_2^2].

    C is fitted at the coarsest level as ``factor`` times the measured ratio
    mean / (E||u0||_2^2 + 1); every level must stay below that bound and all
    means must agree within ``factor``.
    """
    base = float(l2_norm(u0)) ** 2 + 1.0
    stats = [ensemble_expectation(cfg.replace(n=n), u0, paths, "l2", jobs=jobs) for n in ns]
    means = [s.mean for s in stats]
    ratios = [m / base for m in means]
    C = factor * ratios[0]
    return VerificationReport(
        study="energy_bound",
        params={"config": cfg, "ns": list(ns), "paths": paths, "E_u0_sq_plus_1": base},
        measured={"means": means, "stderr": [s.stderr for s in stats], "C_hat": ratios, "C_fit": C},
        verdicts={
            "means_within_factor": max(means) <= factor * min(means),
            "bounded_by_fit": all(m <= C * base for m in means),
        },
        rows=[("l2_energy", n, s.mean, s.stderr) for n, s in zip(ns, stats)],
    )


def tail_study(
    cfg: SolverConfig,
    u0: SpectralField,
    horizons=(0.2, 0.1, 0.05),
    ns=(8, 16),
    paths: int = 256,
    M: float | None = None,
    jobs: int = 1,
) -> VerificationReport:
    """Positivity of the stopping time and the small-time tail P[L^p energy >= M^p].

    Paths run once to the largest horizon; shorter horizons reuse them.  The
    tail estimate at each S is the sup over ``ns``.
    """
    if M is None:
        M = default_cutoff(u0, cfg.p, ns)
    horizons = sorted(horizons, reverse=True)
    run_cfg = cfg.replace(horizon=horizons[0], M=M)
    positive = []
    table = {S: [] for S in horizons}
    for n in ns:
        rec = run_ensemble(run_cfg.replace(n=n), u0, paths, jobs)
        positive.append(float(np.mean(rec.tau >= cfg.dt - 1e-15)))
        for S in horizons:
            table[S].append(EnsembleStats.from_values(path_functional(rec, "tail", S, M)))
    best = {S: max(table[S], key=lambda s: s.mean) for S in horizons}
    monotone = all(
        best[b].mean <= best[a].mean + max(best[a].stderr or 0.0, best[b].stderr or 0.0)
        for a, b in zip(horizons[:-1], horizons[1:])
    )
    return VerificationReport(
        study="tail",
        params={"config": run_cfg, "ns": list(ns), "paths": paths, "M": M, "horizons": horizons},
        measured={
            "positive_fraction": positive,
            "tail": {str(S): best[S].mean for S in horizons},
            "tail_stderr": {str(S): best[S].stderr for S in horizons},
        },
        verdicts={"tau_positive": min(positive) == 1.0, "tail_monotone": monotone},
        rows=[("tail", S, best[S].mean, best[S].stderr) for S in horizons],
    )


# ---------------------------------------------------------------- coupled refinement


def _embedding(hc: HalfSpectrum, hf: HalfSpectrum, n: int):
    """Half-layout indices of the box |k_i| <= n on a coarse and a fine grid."""
    d = hc.grid.d
    ranges = [np.arange(-n, n + 1)] * (d - 1) + [np.arange(0, n + 1)]
    mesh = [m.ravel() for m in np.meshgrid(*ranges, indexing="ij")]
    sl = (Ellipsis, slice(None))
    return sl + tuple(m % hc.grid.N for m in mesh), sl + tuple(m % hf.grid.N for m in mesh)


@dataclass
class CoupledRun:
    """Per-pair sup ||u_b - u_a||_p^p and int ||u_b - u_a||_{3p}^p up to tau_a ^ tau_b ^ S."""

    ns: tuple[int, ...]
    stop_index: np.ndarray  # (levels, paths)
    sup_part: np.ndarray  # (pairs, paths)
    int_part: np.ndarray


def coupled_run(cfg: SolverConfig, u0: SpectralField, ns, paths: int, first_path: int = 0) -> CoupledRun:
    """Advance every truncation level in lockstep on one set of Brownian increments.

    Differences of consecutive levels are taken on the finer grid at every step.
    """
    ns = tuple(ns)
    cfgs = [cfg.replace(n=n) for n in ns]
    d, p, dt, steps = cfg.d, cfg.p, cfg.dt, cfg.steps
    incs = brownian_increments(cfg, paths, first_path)
    st = [_stepper(c) for c in cfgs]
    h = [s.hs.from_full(_initial_batch(c, u0, paths)) for s, c in zip(st, cfgs)]
    phys = [s.physical(x) for s, x in zip(st, h)]
    mons = [StoppingMonitor(c.M, p, dt, paths) for c in cfgs]
    L = len(ns)
    stop = np.full((L, paths), steps)
    halted = np.zeros((L, paths), bool)
    pairs = list(zip(range(L - 1), range(1, L)))
    emb = [_embedding(st[a].hs, st[b].hs, ns[a]) for a, b in pairs]
    dp = np.full((len(pairs), paths, steps + 1), np.nan)
    d3p = np.full_like(dp, np.nan)
    for j in range(steps + 1):
        for i in range(L):
            lp, l3p = lp_pair(phys[i], d, p)
            _, fired = mons[i].update(j * dt, lp, l3p)
            new = fired & ~halted[i]
            stop[i, new] = j
            halted[i] |= new
        for q, (a, b) in enumerate(pairs):
            live = (stop[a] >= j) & (stop[b] >= j)
            if not live.any():
                continue
            ic, jf = emb[q]
            diff = h[b].copy()
            diff[jf] -= h[a][ic]
            lp, l3p = lp_pair(st[b].physical(diff), d, p)
            dp[q, live, j], d3p[q, live, j] = lp[live], l3p[live]
        if j == steps or halted.all():
            break
        for i in range(L):
            with np.errstate(all="ignore"):
                new = st[i].advance(h[i], phys[i], incs[:, j])
            size = np.max(np.abs(new), axis=tuple(range(1, new.ndim)))
            bad = ~(size <= BLOWUP_LEVEL)
            fresh = bad & ~halted[i]
            stop[i, fresh] = j
            halted[i] |= bad
            new[bad] = 0.0
            h[i], phys[i] = new, st[i].physical(new)
    sup = np.zeros((len(pairs), paths))
    integral = np.zeros_like(sup)
    cols = np.arange(steps + 1)
    for q, (a, b) in enumerate(pairs):
        J = np.minimum(stop[a], stop[b])
        keep = cols[None, :] <= J[:, None]
        sup[q] = np.max(np.where(keep, dp[q], 0.0), axis=1) ** p
        left = cols[None, :] < J[:, None]
        integral[q] = np.sum(np.where(left, d3p[q], 0.0) ** p, axis=1) * dt
    return CoupledRun(ns, stop, sup, integral)


def _coupled_chunk(cfg, u0, ns, first, count):
    return coupled_run(cfg, u0, ns, count, first)


def cauchy_study(
    cfg: SolverConfig,
    u0: SpectralField,
    ns=(8, 16, 32),
    paths: int = 64,
    *,
    M: float | None = None,
    jobs: int = 1,
    min_slope: float | None = None,
) -> tuple[list[ConvergenceReport], VerificationReport]:
    """Estimates of E[sup ||u_n - u_m||_p^p + int ||u_n - u_m||_{3p}^p] for consecutive pairs.

    Stopping uses the level ``M`` (default 2 sup_n ||S_n u0||_p + 1) at every
    level.  The verdict asks each pair estimate to drop below its predecessor
    by at least the larger of the two standard errors; ``min_slope`` adds a
    threshold on the measured log-log decay rate in minn(m).
    """
    ns = tuple(ns)
    if list(ns) != sorted(ns):
        raise ValueError("truncation levels must be ascending")
    if M is None:
        M = default_cutoff(u0, cfg.p, ns)
    run_cfg = cfg.replace(M=M)
    runs = _fan_out(_coupled_chunk, [(run_cfg, u0, ns, a, c) for a, c in _chunks(paths, jobs)], jobs)
    sup = np.concatenate([r.sup_part for r in runs], axis=1)
    integral = np.concatenate([r.int_part for r in runs], axis=1)
    reports = []
    for q, pair in enumerate(zip(ns[:-1], ns[1:])):
        reports.append(ConvergenceReport(pair, sup[q], integral[q], EnsembleStats.from_values(sup[q] + integral[q])))
    decreasing = all(
        a.mean - b.mean >= max(a.stderr or 0.0, b.stderr or 0.0) and a.mean > b.mean for a, b in zip(reports[:-1], reports[1:])
    )
    measured = {"pairs": [r.to_dict() for r in reports]}
    verdicts = {"decreasing": decreasing}
    if len(reports) >= 2 and all(r.mean > 0 for r in reports):
        slope = -loglog_slope([minn(r.pair[0]) for r in reports], [r.mean for r in reports])
        measured["slope"] = slope
        if min_slope is not None:
            verdicts["slope"] = slope >= min_slope
    elif min_slope is not None:
        verdicts["slope"] = False
    report = VerificationReport(
        study="cauchy",
        params={"config": run_cfg, "ns": list(ns), "paths": paths, "M": M},
        measured=measured,
        verdicts=verdicts,
        rows=[("pair", r.pair[0], r.mean, r.stderr) for r in reports],
    )
    return reports, report


# ---------------------------------------------------------------- uniqueness and scheme checks


def _history_lp(cfg: SolverConfig, hist: np.ndarray) -> np.ndarray:
    """||u(t_j)||_p from truncation-box coefficients of shape (T, D, box)."""
    F = field_from_box(cfg.grid, cfg.n, hist)
    return lp_norm(inverse_transform(F), cfg.p)


def uniqueness_check(cfg: SolverConfig, u0: SpectralField, seed: int | None = None, other: str = "picard") -> float:
    """sup_t ||u - v||_p over the common interval of two solutions.

    ``u`` is the Euler-Maruyama path for ``seed``.  ``v`` is the Picard fixed
    point on the same increments (``other="picard"``), a rerun of the same
    integrator (``"rerun"``), or the path of the next seed (``"seed"``).
    """
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    dW = brownian_increments(cfg, 1)[0]
    em = simulate_path(cfg, u0, dW, energy=False, history=True)
    if other == "picard":
        ref = picard_solve(cfg, u0, dW=dW).record
    elif other == "rerun":
        ref = simulate_path(cfg, u0, dW, energy=False, history=True)
    elif other == "seed":
        ref = simulate_path(cfg.replace(seed=cfg.seed + 1), u0, energy=False, history=True)
    else:
        raise ValueError(f"unknown comparison {other!r}")
    J = int(min(em.stop_index[0], ref.stop_index[0])) + 1
    diff = em.history[0, :J] - ref.history[0, :J]
    return float(np.max(_history_lp(cfg, diff)))


def strong_order_study(
    cfg: SolverConfig,
    u0: SpectralField,
    dts=(5e-3, 2.5e-3, 1.25e-3),
    ref_factor: int = 16,
    paths: int = 64,
    min_order: float = 0.4,
) -> VerificationReport:
    """Root-mean-square error at the horizon against a ``min(dts)/ref_factor`` reference.

    Coarse runs use sums of the reference increments, so all runs share one Brownian path per sample.
    """
    dts = sorted(dts, reverse=True)
    dt_ref = dts[-1] / ref_factor
    ref_cfg = cfg.replace(dt=dt_ref)
    fine = brownian_increments(ref_cfg, paths)
    ref = simulate(ref_cfg, u0, fine, paths=paths, energy=False)
    ok = ref.stop_index == ref_cfg.steps
    finals = {}
    for dt in dts:
        r = int(round(dt / dt_ref))
        c = cfg.replace(dt=dt)
        if abs(r * dt_ref - dt) > 1e-12 * dt or c.steps * r != ref_cfg.steps:
            raise ValueError(f"time step {dt} does not divide the reference grid")
        inc = fine.reshape(paths, c.steps, r, -1).sum(axis=2)
        rec = simulate(c, u0, inc, paths=paths, energy=False)
        ok &= rec.stop_index == c.steps
        finals[dt] = rec.final
    if not ok.any():
        raise RuntimeError("every path stopped before the horizon")
    errors = [float(np.sqrt(np.mean(l2_norm(finals[dt] - ref.final)[ok] ** 2))) for dt in dts]
    order = loglog_slope(dts, errors)
    return VerificationReport(
        study="strong_order",
        params={"config": cfg, "dts": dts, "dt_ref": dt_ref, "paths": paths},
        measured={"errors": errors, "order": order, "paths_used": int(ok.sum())},
        predicted={"order": 0.5},
        verdicts={"order": order >= min_order},
        rows=[("rms_error", dt, e, None) for dt, e in zip(dts, errors)],
    )


def ou_check(cfg: SolverConfig, steps: int = 10_000, paths: int = 32, sigmas: float = 3.0) -> VerificationReport:
    """Per-mode second moments of the linear additive problem against the exact discrete recursion.

    Starting from zero, E|u_j(k)|^2 = V_j with V_{j+1} = phi^2 (V_j + dt q_k),
    phi the one-step decay and q_k = sum_l c_l^2 |psi_l^(k)|^2.  The statistic
    is the path mean over time of |u_j(k)|^2 / V_j; its spread across paths
    gives the standard error.
    """
    if not isinstance(cfg.noise, AdditiveNoise):
        raise ValueError("the OU check needs additive noise")
    cfg = cfg.replace(nonlinear=False, horizon=steps * cfg.dt)
    st = _stepper(cfg)
    hs = st.hs
    shapes = hs.from_full(cfg.noise._shapes(cfg.grid))  # (K, D, half)
    ks = []
    for k, _, _ in cfg.noise.basis.modes:
        k = tuple(int(x) for x in k)
        if k[-1] < 0:
            k = tuple(-x for x in k)
        if k not in ks and max(abs(x) for x in k) <= cfg.n:
            ks.append(k)
    idx = tuple(np.array([x % cfg.N for x in col]) for col in zip(*ks))
    sel = (Ellipsis, slice(None)) + idx
    q = np.sum(np.abs(shapes[sel]) ** 2, axis=(0, 1))
    phi2 = st.factor[idx] ** 2
    incs = brownian_increments(cfg, paths)
    h = np.zeros((paths, cfg.d) + hs.ksq.shape, complex)
    V = np.zeros(len(ks))
    acc = np.zeros((paths, len(ks)))
    for j in range(steps):
        h = st.advance(h, None, incs[:, j])
        V = phi2 * (V + cfg.dt * q)
        acc += np.sum(np.abs(h[sel]) ** 2, axis=1) / V
    batch = acc / steps
    mean = np.mean(batch, axis=0)
    se = np.std(batch, axis=0, ddof=1) / math.sqrt(paths)
    z = (mean - 1.0) / se
    return VerificationReport(
        study="ou",
        params={"config": cfg, "steps": steps, "paths": paths, "modes": [list(k) for k in ks]},
        measured={"ratio": mean, "stderr": se, "z": z, "max_abs_z": float(np.max(np.abs(z)))},
        predicted={"ratio": 1.0},
        verdicts={"within_sigma": bool(np.all(np.abs(z) < sigmas))},
        rows=[(str(k), i, m, s) for i, (k, m, s) in enumerate(zip(ks, mean, se))],
    )


__all__ = [
    "FUNCTIONALS",
    "CoupledRun",
    "cauchy_study",
    "coupled_run",
    "energy_bound_study",
    "ensemble_expectation",
    "merge_records",
    "ou_check",
    "path_functional",
    "run_ensemble",
    "strong_order_study",
    "tail_study",
    "uniqueness_check",
    "until",
]
