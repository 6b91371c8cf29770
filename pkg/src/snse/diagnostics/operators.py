"""Deterministic operator checks: identities, cancellation, truncation decay and boundedness, GN."""

from __future__ import annotations

import numpy as np

from ..fields import random_field
from ..fourier import (
    Grid,
    PhysicalField,
    SpectralField,
    _lp_values,
    bessel_potential,
    divergence,
    gradient,
    grad_l2_norm,
    inner,
    inv_laplace_div,
    inverse_transform,
    l2_norm,
    leray_project,
    minn,
    rect_truncate,
    resample,
    riesz_transform,
)
from ..functionals import energy_functional, fd_grad_power_sq
from ..solver import convective_term
from .corpus import decay_corpus, gn_corpus, uniform_corpus
from .reports import VerificationReport

IDENTITY_TOL = 1e-10
CANCELLATION_TOL = 1e-8

__all__ = [
    "energy_functional",
    "gn_ratio",
    "identity_suite",
    "cancellation_check",
    "predicted_alpha",
    "operator_decay_study",
    "uniform_bound_study",
    "gn_study",
]


def _rel(a: SpectralField, b: SpectralField, scale: SpectralField | None = None) -> float:
    """Largest per-field ||a - b||_2 / ||scale||_2 (``scale`` defaults to ``b``)."""
    num = l2_norm(a - b)
    den = l2_norm(b if scale is None else scale)
    return float(np.max(num / np.where(den > 0, den, 1.0)))


def identity_suite(d: int, count: int = 50, seed: int = 0, N: int | None = None) -> VerificationReport:
    """Exact Fourier-multiplier identities on ``count`` seeded full-bandwidth fields."""
    N = N or {1: 64, 2: 32}.get(d, 16)
    grid = Grid(d, N)
    rng = np.random.default_rng(np.random.SeedSequence([seed, d, 1]))
    kmax = N // 2 - 1
    U = _batch([random_field(grid, rng, ncomp=d, kmax=kmax) for _ in range(count)])
    f = _batch([random_field(grid, rng, kmax=kmax) for _ in range(count)])
    PU = leray_project(U)
    errors = {"leray_idempotent": _rel(leray_project(PU), PU, U)}
    errors["div_leray"] = float(np.max(l2_norm(divergence(PU)) / grad_l2_norm(U)))
    tt = 0.0
    for _ in range(4):
        m, n = (int(x) for x in rng.integers(1, kmax + 1, size=2))
        tt = max(tt, _rel(rect_truncate(rect_truncate(f, n), m), rect_truncate(f, min(m, n)), f))
    errors["truncation_semigroup"] = tt
    js = 0.0
    for s in rng.uniform(0.25, 3.0, size=3):
        js = max(js, _rel(bessel_potential(bessel_potential(f, s), -s), f))
    errors["bessel_inverse"] = js
    r2 = sum((riesz_transform(riesz_transform(f, j), j) for j in range(d)), SpectralField.zeros(grid, batch=(count,)))
    errors["riesz_square_sum"] = _rel(r2, -f)
    errors["inv_laplace_div_grad"] = _rel(inv_laplace_div(gradient(f)), f)
    return VerificationReport(
        study=f"identities_d{d}",
        params={"d": d, "N": N, "fields": count, "seed": seed, "tolerance": IDENTITY_TOL},
        measured=errors,
        verdicts={k: v < IDENTITY_TOL for k, v in errors.items()},
        rows=[(k, d, v, None) for k, v in errors.items()],
    )


def _batch(fields: list[SpectralField]) -> SpectralField:
    return SpectralField(np.stack([F.coef for F in fields]), fields[0].grid)


def cancellation_check(count: int = 20, n: int = 8, d: int = 3, seed: int = 0) -> VerificationReport:
    """|int u . S_n P((v.grad) u)| / (||u||_2^2 ||grad v||_2) for random solenoidal pairs."""
    grid = Grid.for_truncation(d, n)
    rng = np.random.default_rng(np.random.SeedSequence([seed, d, n, 2]))
    worst = 0.0
    ratios = []
    for _ in range(count):
        u = random_field(grid, rng, ncomp=d, kmax=n, solenoidal=True)
        v = random_field(grid, rng, ncomp=d, kmax=n, solenoidal=True)
        B = convective_term(v, u, n)
        r = abs(float(inner(u, B))) / (float(l2_norm(u)) ** 2 * float(grad_l2_norm(v)))
        ratios.append(r)
        worst = max(worst, r)
    return VerificationReport(
        study="cancellation",
        params={"d": d, "n": n, "pairs": count, "seed": seed, "tolerance": CANCELLATION_TOL},
        measured={"max_ratio": worst},
        verdicts={"cancellation": worst < CANCELLATION_TOL},
        rows=[("ratio", i, r, None) for i, r in enumerate(ratios)],
    )


def predicted_alpha(q: float) -> float:
    """Interpolation exponent (1/r - 1/q)/(1/r - 1/2) with r = (1+q)/2 below 2 and r = 2q above."""
    if not q > 1:
        raise ValueError(f"need q > 1, got {q}")
    if q == 2:
        return 1.0
    r = (1 + q) / 2 if q < 2 else 2 * q
    return (1 / r - 1 / q) / (1 / r - 1 / 2)


def _grad_lq(F: SpectralField, q: float) -> np.ndarray:
    return _lp_values(inverse_transform(gradient(F)).values, F.d, q)


def _lq(F: SpectralField, q: float) -> np.ndarray:
    return _lp_values(inverse_transform(F).values, F.d, q)


def loglog_slope(x, y) -> float:
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def operator_decay_study(q: float, ns=(4, 8, 16, 32, 64), corpus: list[SpectralField] | None = None, d: int = 1, seed: int = 0) -> VerificationReport:
    """Decay of ||(T_n - T_m) f||_q / ||grad f||_q along consecutive ladder pairs.

    The measured exponent is minus the log-log slope of the corpus sup against
    minn(m) ^ minn(n); ``C_q`` lists the sup times that level to the predicted power.
    """
    if corpus is None:
        corpus = decay_corpus(d, q, seed=seed)
    if not corpus:
        raise ValueError("empty corpus")
    d = corpus[0].d
    F = _batch(corpus)
    if np.max(np.abs(F.mean())) > 1e-12 * float(np.max(np.abs(F.coef))):
        raise ValueError("decay corpus must be mean-zero")
    grad = _grad_lq(F, q)
    pairs = list(zip(ns[:-1], ns[1:]))
    levels, sups = [], []
    for m, n in pairs:
        diff = rect_truncate(F, n) - rect_truncate(F, m)
        sups.append(float(np.max(_lq(diff, q) / grad)))
        levels.append(min(minn(m), minn(n)))
    alpha_hat = -loglog_slope(levels, sups)
    alpha = predicted_alpha(q)
    return VerificationReport(
        study=f"decay_q{q:g}_d{d}",
        params={"q": q, "d": d, "ladder": list(ns), "corpus_size": len(corpus), "N": F.grid.N},
        measured={"alpha_hat": alpha_hat, "sup_ratio": sups, "C_q": [s * lv**alpha for s, lv in zip(sups, levels)]},
        predicted={"alpha": alpha},
        verdicts={"alpha": alpha_hat >= alpha - 0.1},
        rows=[(f"q={q:g},d={d}", lv, s, None) for lv, s in zip(levels, sups)],
    )


def uniform_bound_study(q: float, ns=(4, 8, 16, 32, 64), corpus: list[SpectralField] | None = None, d: int = 1, variation: float = 0.2) -> VerificationReport:
    """Max corpus ratio ||T_n f||_q / ||f||_q per ladder level.

    At q = 2 the verdict is the projection bound ratio <= 1 + 1e-12; otherwise
    the spread (max - min)/min across the ladder must stay below ``variation``.
    """
    if corpus is None:
        corpus = uniform_corpus(d, ns)
    d = corpus[0].d
    F = _batch(corpus)
    base = _lq(F, q)
    ratios = [float(np.max(_lq(rect_truncate(F, n), q) / base)) for n in ns]
    spread = (max(ratios) - min(ratios)) / min(ratios)
    if q == 2:
        verdicts = {"projection_bound": max(ratios) <= 1 + 1e-12}
    else:
        verdicts = {"n_uniform": spread < variation}
    return VerificationReport(
        study=f"uniform_q{q:g}_d{d}",
        params={"q": q, "d": d, "ladder": list(ns), "corpus_size": len(corpus), "N": F.grid.N},
        measured={"max_ratio": ratios, "C_q": max(ratios), "spread": spread},
        verdicts=verdicts,
        rows=[(f"q={q:g},d={d}", n, r, None) for n, r in zip(ns, ratios)],
    )


def gn_ratio(f: SpectralField | PhysicalField, p: float) -> float:
    """||f||_{3p}^p / ||grad(|f|^(p/2))||_2^2 for a mean-zero scalar field.

    The denominator uses centered differences on the lattice, as the energy functional does.
    """
    if p < 2:
        raise ValueError(f"need p >= 2, got {p}")
    phys = inverse_transform(f) if isinstance(f, SpectralField) else f
    v = phys.values
    d = phys.grid.d
    if v.ndim != d + 1 or v.shape[0] != 1:
        raise ValueError("gn_ratio expects a single scalar field")
    scale = float(np.max(np.abs(v)))
    if scale == 0:
        raise ValueError("gn_ratio is undefined for the zero field")
    if abs(float(np.mean(v))) > 1e-10 * scale:
        raise ValueError("gn_ratio requires a mean-zero field")
    w = v / scale  # both sides are p-homogeneous; normalizing keeps large amplitudes finite
    num = float(_lp_values(w, d, 3 * p)) ** p
    den = float(fd_grad_power_sq(w, d, p))
    return num / den


def gn_study(p: float = 4.0, corpus: list[SpectralField] | None = None, refine: int = 2, scales=(1e-3, 1e3)) -> VerificationReport:
    """Corpus max of the GN ratio, its scale invariance and its change under grid refinement."""
    corpus = corpus if corpus is not None else gn_corpus()
    coarse = corpus[0].grid
    fine = Grid(coarse.d, refine * coarse.N)
    r0 = np.array([gn_ratio(f, p) for f in corpus])
    r1 = np.array([gn_ratio(resample(f, fine), p) for f in corpus])
    invariance = max(abs(gn_ratio(f * s, p) / r - 1.0) for f, r in zip(corpus, r0) for s in scales)
    m0, m1 = float(np.max(r0)), float(np.max(r1))
    change = abs(m1 - m0) / m0
    return VerificationReport(
        study="gn",
        params={"p": p, "d": coarse.d, "corpus_size": len(corpus), "N": [coarse.N, fine.N]},
        measured={"max_ratio": [m0, m1], "refinement_change": change, "scale_invariance": invariance},
        verdicts={
            "finite": bool(np.all(np.isfinite(r0)) and np.all(np.isfinite(r1))),
            "scale_invariant": invariance < 1e-10,
            "refinement_stable": change < 0.1,
        },
        rows=[("max_ratio", coarse.N, m0, None), ("max_ratio", fine.N, m1, None)],
    )
