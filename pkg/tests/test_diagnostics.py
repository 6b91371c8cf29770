import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snse.diagnostics import (
    EnergyReport,
    EnsembleStats,
    VerificationReport,
    cancellation_check,
    cauchy_study,
    coupled_run,
    decay_corpus,
    dirichlet_profile,
    ensemble_expectation,
    gn_corpus,
    gn_ratio,
    gn_study,
    identity_suite,
    loglog_slope,
    merge_records,
    operator_decay_study,
    ou_check,
    path_functional,
    predicted_alpha,
    run_ensemble,
    strong_order_study,
    uniform_bound_study,
    uniqueness_check,
    until,
)
from snse.fields import random_field
from snse.fourier import Grid, PhysicalField, SpectralField, inverse_transform, lp_norm, rect_truncate
from snse.noise import ZeroNoise, make_noise
from snse.solver import SolverConfig, simulate

from conftest import solenoidal


@pytest.fixture
def u0():
    rng = np.random.default_rng(5)
    return random_field(Grid(2, 66), rng, ncomp=2, kmax=32, slope=2.0, solenoidal=True, amplitude=1.0)


def linear_cfg(**kw):
    base = dict(d=2, n=4, dt=1e-3, horizon=0.01, p=4, noise=make_noise("linear", Grid(2, 18), K=8))
    base.update(kw)
    return SolverConfig(**base)


class TestIdentities:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_suite_passes(self, d):
        rep = identity_suite(d, count=5)
        assert rep.passed, rep.measured
        assert set(rep.measured) == {
            "leray_idempotent",
            "div_leray",
            "truncation_semigroup",
            "bessel_inverse",
            "riesz_square_sum",
            "inv_laplace_div_grad",
        }

    def test_cancellation(self):
        rep = cancellation_check(count=3, n=4, d=3)
        assert rep.passed
        assert rep.measured["max_ratio"] < 1e-12


class TestDecay:
    def test_predicted_alpha(self):
        assert predicted_alpha(2) == 1.0
        assert predicted_alpha(4) == pytest.approx(1 / 3, rel=1e-14)
        # q in (1, 2): r = (1 + q)/2
        r = 1.25
        assert predicted_alpha(1.5) == pytest.approx((1 / r - 1 / 1.5) / (1 / r - 0.5))
        with pytest.raises(ValueError):
            predicted_alpha(1.0)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(1.01, 50.0).filter(lambda q: abs(q - 2) > 1e-6))
    def test_alpha_in_unit_interval(self, q):
        assert 0 < predicted_alpha(q) <= 1

    def test_slope_of_power_law(self):
        x = np.array([4, 8, 16, 32])
        assert loglog_slope(x, 3.0 * x**-1.7) == pytest.approx(-1.7, rel=1e-12)

    def test_single_mode_beyond_ladder(self):
        grid = Grid(1, 32)
        f = SpectralField.from_modes(grid, {(3,): [1.0], (-3,): [1.0]})
        for m, n in [(4, 8), (5, 12)]:
            diff = rect_truncate(f, n) - rect_truncate(f, m)
            assert np.max(np.abs(diff.coef)) == 0.0

    @pytest.mark.parametrize("d", [1, 2])
    def test_corpus_spectrum(self, d):
        (f,) = decay_corpus(d, 4.0, size=1, kf=12, N=32)
        kabs = np.sqrt(f.grid.ksq)
        inside = f.grid.box_mask(12) & (kabs > 0)
        s = d / 4 + 1.1
        np.testing.assert_allclose(np.abs(f.coef[0][inside]), kabs[inside] ** -s, rtol=1e-13)
        assert np.all(f.coef[0][~inside] == 0)
        assert np.max(np.abs(np.fft.ifftn(f.coef[0]).imag)) < 1e-15

    def test_study_q2_parseval_oracle(self):
        # |f^(k)| = |k|^-s with random phases: ||(T_n - T_m) f||_2^2 = 2 sum_{m<k<=n} k^-2s
        s, K = 1.6, 100
        grid = Grid(1, 256)
        rng = np.random.default_rng(1)
        k = np.arange(1, K + 1)
        c = np.zeros(grid.N, complex)
        c[k] = k**-s * np.exp(2j * np.pi * rng.random(K))
        c[-k] = np.conj(c[k])
        f = SpectralField(c[None], grid)
        grad = math.sqrt(2 * np.sum((2 * np.pi * k) ** 2 * k ** (-2 * s)))
        ladder = (4, 8, 16, 32)
        rep = operator_decay_study(2.0, ladder, [f])
        oracle = [math.sqrt(2 * np.sum(k[(k > m) & (k <= n)] ** (-2.0 * s))) / grad for m, n in zip(ladder[:-1], ladder[1:])]
        np.testing.assert_allclose(rep.measured["sup_ratio"], oracle, rtol=1e-12)
        assert rep.measured["alpha_hat"] == pytest.approx(-loglog_slope(ladder[:-1], oracle), rel=1e-12)
        assert rep.passed and len(rep.rows) == 3

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty"):
            operator_decay_study(2.0, corpus=[])

    def test_rejects_mean(self):
        f = random_field(Grid(1, 32), np.random.default_rng(0), kmax=8, mean_zero=False)
        with pytest.raises(ValueError, match="mean-zero"):
            operator_decay_study(2.0, (2, 4), corpus=[f])


class TestUniformBound:
    def test_projection_bound(self):
        rep = uniform_bound_study(2.0, (4, 8), d=1)
        assert max(rep.measured["max_ratio"]) <= 1 + 1e-12
        assert rep.passed

    def test_band_limited_below_ladder(self, rng):
        grid = Grid(1, 64)
        corpus = [random_field(grid, rng, kmax=3) for _ in range(3)]
        rep = uniform_bound_study(4.0, (4, 8, 16), corpus)
        assert rep.measured["max_ratio"] == [1.0, 1.0, 1.0]

    def test_dirichlet_profile_exceeds_one(self):
        grid = Grid(1, 256)
        f = dirichlet_profile(grid, 8, 0.2)
        ratio = float(lp_norm(inverse_transform(rect_truncate(f, 8)), 4) / lp_norm(inverse_transform(f), 4))
        assert ratio > 1.02

    def test_dirichlet_coefficients(self):
        f = dirichlet_profile(Grid(1, 32), 3, 0.5)
        k = f.grid.wavenumbers[0].astype(int)
        expected = np.where(np.abs(k) <= 3, 1.0, np.where(np.abs(k) <= 6, -0.5, 0.0))
        np.testing.assert_array_equal(f.coef[0].real, expected)

    def test_q4_stable_on_small_ladder(self):
        rep = uniform_bound_study(4.0, (4, 8, 16), d=1)
        assert rep.passed
        assert rep.measured["C_q"] > 1


class TestGN:
    def test_constant_rejected(self):
        grid = Grid(3, 8)
        with pytest.raises(ValueError, match="mean-zero"):
            gn_ratio(PhysicalField(np.ones((1,) + grid.shape), grid), 4)

    def test_zero_rejected(self):
        with pytest.raises(ValueError, match="zero field"):
            gn_ratio(SpectralField.zeros(Grid(2, 8)), 4)

    def test_vector_rejected(self, rng):
        with pytest.raises(ValueError, match="scalar"):
            gn_ratio(random_field(Grid(2, 8), rng, ncomp=2, kmax=2), 4)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-6, 1e6))
    def test_scale_invariant(self, lam):
        f = gn_corpus(d=2, size=1, N=16)[0]
        assert gn_ratio(f * lam, 4) == pytest.approx(gn_ratio(f, 4), rel=1e-12)

    def test_sine_closed_form(self):
        # f = sin(2 pi x): ||f||_12^4 = (231/1024)^(1/3), ||d/dx sin^2||^2 = 2 pi^2
        grid = Grid(1, 512)
        f = PhysicalField(np.sin(2 * np.pi * grid.coords[0])[None], grid)
        expected = (231 / 1024) ** (1 / 3) / (2 * np.pi**2)
        assert gn_ratio(f, 4) == pytest.approx(expected, rel=1e-3)

    def test_small_study(self):
        rep = gn_study(4.0, gn_corpus(size=6, N=24))
        assert rep.verdicts["finite"] and rep.verdicts["scale_invariant"]
        assert rep.measured["max_ratio"][0] > 0


class TestReports:
    def test_json_and_csv(self, tmp_path):
        rep = VerificationReport(
            "demo",
            params={"cfg": SolverConfig()},
            measured={"x": np.float64(np.nan), "v": np.arange(3)},
            verdicts={"ok": np.True_},
            rows=[("s", 1, 0.5, None), ("s", 2, 0.25, 0.125)],
        )
        js, cs = rep.write(tmp_path)
        data = json.loads(js.read_text())
        assert data["measured"] == {"x": None, "v": [0, 1, 2]}
        assert data["passed"] is True
        assert data["params"]["cfg"]["noise"]["variant"] == "zero"
        assert cs.read_text().splitlines() == ["series,x,y,yerr", "s,1,0.5,", "s,2,0.25,0.125"]

    def test_failed_verdict(self):
        assert not VerificationReport("x", verdicts={"a": True, "b": False}).passed

    def test_single_path_stats(self):
        s = EnsembleStats.from_values([2.0])
        assert s.stderr is None and s.variance == 0.0
        assert s.to_dict()["stderr"] is None

    def test_stats_oracle(self):
        v = np.array([1.0, 2.0, 4.0, 7.0])
        s = EnsembleStats.from_values(v)
        assert s.mean == 3.5
        assert s.stderr == pytest.approx(math.sqrt(np.var(v, ddof=1) / 4))

    def test_energy_report(self, u0):
        cfg = linear_cfg()
        rec = simulate(cfg, u0)
        er = EnergyReport.from_record(rec)
        for arr in (er.lp_power, er.grad_term, er.running_sup, er.running_integral):
            assert np.all(arr >= 0)
        assert er.total == pytest.approx(float(rec.lp_energy()[0]), rel=1e-12)


class TestEnsemble:
    def test_zero_everything(self):
        cfg = SolverConfig(d=2, n=4, horizon=0.005, noise=ZeroNoise(4))
        st_ = ensemble_expectation(cfg, SpectralField.zeros(cfg.grid, ncomp=2), 3, "lp")
        assert st_.mean == 0.0 and st_.variance == 0.0

    def test_l2_functional_matches_columns(self, u0):
        cfg = linear_cfg()
        rec = run_ensemble(cfg, u0, 3)
        vals = path_functional(rec, "l2")
        for i in range(3):
            J = int(rec.stop_index[i])
            expected = np.max(rec.l2[i, : J + 1]) ** 2 + np.sum(rec.grad_l2[i, :J] ** 2) * cfg.dt
            assert vals[i] == pytest.approx(expected, rel=1e-13)

    def test_jobs_do_not_change_numbers(self, u0):
        cfg = linear_cfg()
        a = ensemble_expectation(cfg, u0, 4, "l2", jobs=1)
        b = ensemble_expectation(cfg, u0, 4, "l2", jobs=2)
        assert np.array_equal(a.values, b.values)

    def test_merge_is_associative(self, u0):
        cfg = linear_cfg()
        parts = [simulate(cfg, u0, paths=1, first_path=i) for i in range(3)]
        left = merge_records([merge_records(parts[:2]), parts[2]])
        right = merge_records([parts[0], merge_records(parts[1:])])
        assert np.array_equal(left.l2, right.l2, equal_nan=True)
        assert np.array_equal(left.final.coef, right.final.coef)

    def test_until_is_monotone(self, u0):
        cfg = linear_cfg(horizon=0.02)
        rec = run_ensemble(cfg, u0, 4)
        vals = [path_functional(rec, "lp", S) for S in (0.02, 0.01, 0.005)]
        assert np.all(vals[0] >= vals[1]) and np.all(vals[1] >= vals[2])
        assert np.all(until(rec, 0.005).stop_index <= 5)

    def test_tail_needs_level(self, u0):
        rec = run_ensemble(linear_cfg(), u0, 1)
        with pytest.raises(ValueError, match="level"):
            path_functional(rec, "tail")
        with pytest.raises(ValueError, match="unknown"):
            path_functional(rec, "bogus")


class TestCauchy:
    def test_equal_levels_give_zero(self, u0):
        run = coupled_run(linear_cfg(), u0, (4, 4), 2)
        assert np.all(run.sup_part == 0.0) and np.all(run.int_part == 0.0)

    def test_levels_match_separate_runs(self, u0):
        cfg = linear_cfg(M=1e9)
        run = coupled_run(cfg, u0, (4, 8), 2)
        a = simulate(cfg.replace(n=4), u0, paths=2, history=True, energy=False)
        b = simulate(cfg.replace(n=8), u0, paths=2, history=True, energy=False)
        # oracle: the difference on the fine grid, from independently stepped histories
        grid = cfg.replace(n=8).grid
        from snse.fourier import field_from_box, resample

        sups = []
        for i in range(2):
            fa = resample(field_from_box(cfg.replace(n=4).grid, 4, a.history[i]), grid)
            fb = field_from_box(grid, 8, b.history[i])
            sups.append(np.max(lp_norm(inverse_transform(fb - fa), cfg.p)) ** cfg.p)
        np.testing.assert_allclose(run.sup_part[0], sups, rtol=1e-10)

    def test_initial_difference(self, u0):
        cfg = linear_cfg(horizon=0.0)
        run = coupled_run(cfg, u0, (4, 8), 1)
        expected = float(lp_norm(inverse_transform(rect_truncate(u0, 8) - rect_truncate(u0, 4)), 4)) ** 4
        assert run.sup_part[0, 0] == pytest.approx(expected, rel=1e-10)
        assert run.int_part[0, 0] == 0.0

    def test_deterministic_refinement(self, u0):
        cfg = SolverConfig(d=2, n=4, dt=1e-3, horizon=0.01, p=4, noise=ZeroNoise(4))
        reps, report = cauchy_study(cfg, u0, (4, 8, 16), paths=1, min_slope=1.0)
        assert [r.pair for r in reps] == [(4, 8), (8, 16)]
        assert reps[0].stderr is None
        assert report.passed and report.measured["slope"] >= 1

    def test_requires_ascending(self, u0):
        with pytest.raises(ValueError, match="ascending"):
            cauchy_study(linear_cfg(), u0, (8, 4), paths=1)

    def test_zero_data_fails_decrease(self):
        cfg = SolverConfig(d=2, n=4, horizon=0.002, noise=ZeroNoise(4))
        _, report = cauchy_study(cfg, SpectralField.zeros(Grid(2, 18), ncomp=2), (4, 8, 16), paths=1, M=1.0)
        assert not report.passed


class TestUniqueness:
    def test_rerun_is_exact(self, u0):
        assert uniqueness_check(linear_cfg(), u0, other="rerun") == 0.0

    def test_picard_close(self):
        cfg = SolverConfig(d=2, n=4, dt=1e-3, horizon=0.01, p=4, noise=make_noise("additive", Grid(2, 18), K=8))
        u = solenoidal(Grid(2, 18), np.random.default_rng(2), kmax=4, amplitude=0.5)
        assert uniqueness_check(cfg, u, seed=3) < 10 * cfg.dt

    def test_other_seed_differs(self):
        cfg = SolverConfig(d=2, n=4, dt=1e-3, horizon=0.05, p=4, noise=make_noise("additive", Grid(2, 18), K=8, c0=5.0))
        u = solenoidal(Grid(2, 18), np.random.default_rng(2), kmax=4, amplitude=0.5)
        assert uniqueness_check(cfg, u, other="seed") > 0.1

    def test_unknown_mode(self, u0):
        with pytest.raises(ValueError):
            uniqueness_check(linear_cfg(), u0, other="nope")


class TestSchemeChecks:
    def test_ou_statistics(self):
        cfg = SolverConfig(d=2, n=3, dt=1e-3, p=4, noise=make_noise("additive", Grid(2, 14), K=4))
        rep = ou_check(cfg, steps=2000, paths=16)
        assert rep.passed, rep.measured["z"]
        assert len(rep.params["modes"]) == 2  # |k| = 1 shell: (0, 1) and (1, 0)

    def test_ou_rejects_multiplicative(self):
        with pytest.raises(ValueError, match="additive"):
            ou_check(linear_cfg(), steps=10)

    def test_ou_detects_wrong_variance(self):
        # doubling every increment quadruples the second moments
        cfg = SolverConfig(d=2, n=3, dt=1e-3, p=4, noise=make_noise("additive", Grid(2, 14), K=4))
        from snse.diagnostics import stochastic

        real = stochastic.brownian_increments
        try:
            stochastic.brownian_increments = lambda c, paths, *a: 2.0 * real(c, paths, *a)
            rep = ou_check(cfg, steps=500, paths=8)
        finally:
            stochastic.brownian_increments = real
        assert not rep.passed

    def test_strong_order_additive(self, u0):
        cfg = SolverConfig(d=2, n=4, horizon=0.02, p=4, noise=make_noise("additive", Grid(2, 18), K=8))
        rep = strong_order_study(cfg, u0, dts=(4e-3, 2e-3, 1e-3), ref_factor=4, paths=8)
        assert rep.measured["order"] >= 0.4
        assert rep.measured["errors"][0] > rep.measured["errors"][-1]

    def test_strong_order_rejects_bad_ladder(self, u0):
        with pytest.raises(ValueError, match="divide"):
            strong_order_study(linear_cfg(horizon=0.01), u0, dts=(3e-3, 1e-3), ref_factor=2, paths=1)
