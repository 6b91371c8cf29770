import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from snse.fields import random_field
from snse.fourier import (
    HalfSpectrum,
    AliasingError,
    Grid,
    MeanValueError,
    PhysicalField,
    SpectralField,
    bessel_potential,
    box_coefficients,
    dealias_product,
    dealias_size,
    divergence,
    forward_transform,
    grad_l2_norm,
    gradient,
    inner,
    inv_laplace_div,
    inverse_transform,
    iter_modes,
    l2_norm,
    leray_project,
    lp_norm,
    rect_truncate,
    resample,
    riesz_transform,
    sobolev_norm,
    square_truncate,
)

from conftest import direct_series, naive_dft, solenoidal

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestGrid:
    def test_rejects_odd_or_tiny(self):
        with pytest.raises(ValueError):
            Grid(2, 7)
        with pytest.raises(ValueError):
            Grid(2, 2)
        with pytest.raises(ValueError):
            Grid(4, 8)

    @pytest.mark.parametrize("n", [1, 4, 8, 16, 32])
    def test_dealias_size(self, n):
        N = dealias_size(n)
        assert N >= 4 * n + 2 and N % 2 == 0
        assert Grid(2, N).max_dealiased_index >= n


class TestTransforms:
    def test_single_cosine(self):
        grid = Grid(3, 8)
        f = PhysicalField.from_function(grid, lambda x, y, z: np.cos(2 * np.pi * x))
        F = forward_transform(f).coef[0]
        expected = np.zeros(grid.shape, dtype=complex)
        expected[1, 0, 0] = expected[-1, 0, 0] = 0.5
        np.testing.assert_allclose(F, expected, atol=1e-15)

    def test_constant(self):
        grid = Grid(2, 8)
        F = forward_transform(PhysicalField(np.full((1, 8, 8), 3.25), grid)).coef[0].copy()
        assert F[0, 0] == pytest.approx(3.25)
        F[0, 0] = 0
        assert np.max(np.abs(F)) < 1e-15

    @pytest.mark.parametrize("d,N", [(1, 16), (2, 8), (3, 6)])
    def test_matches_naive_dft(self, d, N, rng):
        grid = Grid(d, N)
        F = random_field(grid, rng, ncomp=2, kmax=N // 2 - 1)
        samples = inverse_transform(F).values
        np.testing.assert_allclose(naive_dft(samples, grid), forward_transform(PhysicalField(samples, grid)).coef, atol=1e-10)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_round_trip(self, d, rng):
        grid = Grid(d, 12)
        v = rng.standard_normal((3,) + grid.shape)
        back = inverse_transform(forward_transform(PhysicalField(v, grid))).values
        assert np.max(np.abs(back - v)) <= 1e-12 * np.max(np.abs(v))

    def test_mismatched_extents(self):
        with pytest.raises(ValueError, match="do not match"):
            SpectralField(np.zeros((1, 8, 6)), Grid(2, 8))

    def test_fields_are_read_only(self, rng):
        F = random_field(Grid(2, 8), rng, kmax=3)
        with pytest.raises(ValueError):
            F.coef[0, 0, 0] = 1.0

    def test_resample_round_trip(self, rng):
        coarse, fine = Grid(2, 8), Grid(2, 20)
        F = random_field(coarse, rng, kmax=3, ncomp=2)
        back = resample(resample(F, fine), coarse)
        np.testing.assert_array_equal(back.coef, F.coef)
        np.testing.assert_allclose(l2_norm(resample(F, fine)), l2_norm(F))


class TestTruncation:
    def test_mode_outside_box(self):
        grid = Grid(1, 16)
        F = SpectralField.from_modes(grid, {(3,): 1.0})
        assert np.all(rect_truncate(F, (2,)).coef == 0)

    def test_mode_inside_box(self):
        grid = Grid(1, 16)
        F = SpectralField.from_modes(grid, {(1,): 1.0 + 2.0j})
        np.testing.assert_array_equal(rect_truncate(F, (2,)).coef, F.coef)

    def test_direct_summation_oracle(self, rng):
        grid = Grid(3, 18)
        F = random_field(grid, rng, kmax=8)
        modes = iter_modes((4, 4, 4))
        amps = box_coefficients(F, (4, 4, 4))[0]
        pts = np.stack([c.ravel() for c in grid.coords], axis=1)
        expected = direct_series(modes, amps, pts).reshape(grid.shape)
        got = inverse_transform(rect_truncate(F, (4, 4, 4))).values[0]
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_square_is_cubic_rect(self, rng):
        F = random_field(Grid(3, 12), rng, kmax=5)
        np.testing.assert_array_equal(square_truncate(F, 3).coef, rect_truncate(F, (3, 3, 3)).coef)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, n=st.tuples(*[st.integers(0, 6)] * 2), m=st.tuples(*[st.integers(0, 6)] * 2))
    def test_composition_is_min(self, seed, n, m):
        F = random_field(Grid(2, 16), np.random.default_rng(seed), kmax=7)
        lo = tuple(min(a, b) for a, b in zip(n, m))
        np.testing.assert_array_equal(rect_truncate(rect_truncate(F, n), m).coef, rect_truncate(F, lo).coef)


class TestMultipliers:
    def test_bessel_identity_at_zero(self, rng):
        F = random_field(Grid(2, 10), rng, ncomp=2)
        np.testing.assert_allclose(bessel_potential(F, 0.0).coef, F.coef, atol=1e-15)

    def test_bessel_single_mode(self):
        grid = Grid(3, 8)
        F = SpectralField.from_modes(grid, {(1, 0, 0): 1.0})
        out = bessel_potential(F, 2.0).coef[0, 1, 0, 0]
        assert out == pytest.approx(1 + 4 * math.pi**2, rel=1e-14)

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.5])
    def test_bessel_inverse(self, s, rng):
        F = random_field(Grid(3, 10), rng, ncomp=3, kmax=4)
        back = bessel_potential(bessel_potential(F, s), -s)
        assert np.max(np.abs(back.coef - F.coef)) <= 1e-12 * np.max(np.abs(F.coef))

    def test_riesz_symbol_on_cosine(self):
        grid = Grid(2, 8)
        F = SpectralField.from_modes(grid, {(1, 0): 0.5})
        R = riesz_transform(F, 0)
        assert R.coef[0, 1, 0] == pytest.approx(-0.5j)
        # R_1 = -d_1 (-Laplacian)^(-1/2) sends cos(2 pi x_1) to sin(2 pi x_1)
        x = grid.coords[0]
        np.testing.assert_allclose(inverse_transform(R).values[0], np.sin(2 * np.pi * x), atol=1e-14)

    def test_riesz_rejects_mean(self):
        grid = Grid(2, 8)
        F = SpectralField.from_modes(grid, {(0, 0): 1.0, (1, 0): 0.5})
        with pytest.raises(MeanValueError):
            riesz_transform(F, 0)

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_riesz_squares_sum_to_minus_identity(self, d, rng):
        F = random_field(Grid(d, 10), rng, kmax=4)
        total = sum(riesz_transform(riesz_transform(F, j), j).coef for j in range(d))
        np.testing.assert_allclose(total, -F.coef, atol=1e-13)

    def test_leray_kills_gradients(self, rng):
        grid = Grid(3, 12)
        phi = random_field(grid, rng, kmax=4)
        np.testing.assert_allclose(leray_project(gradient(phi)).coef, 0, atol=1e-12)

    def test_leray_fixes_solenoidal(self, rng):
        u = solenoidal(Grid(3, 12), rng, kmax=4)
        np.testing.assert_allclose(leray_project(u).coef, u.coef, atol=1e-12)

    def test_leray_single_mode(self):
        grid = Grid(3, 8)
        F = SpectralField.from_modes(grid, {(1, 0, 0): (1.0, 1.0, 0.0)})
        np.testing.assert_allclose(leray_project(F).coef[:, 1, 0, 0], [0, 1, 0], atol=1e-15)

    @pytest.mark.parametrize("d", [2, 3])
    def test_leray_properties(self, d, rng):
        U = random_field(Grid(d, 12), rng, ncomp=d, kmax=5)
        P = leray_project(U)
        np.testing.assert_allclose(leray_project(P).coef, P.coef, atol=1e-13)
        np.testing.assert_allclose(divergence(P).coef, 0, atol=1e-12)
        assert l2_norm(P) <= l2_norm(U) + 1e-14

    def test_leray_rejects_mean(self):
        grid = Grid(2, 8)
        with pytest.raises(MeanValueError):
            leray_project(SpectralField.from_modes(grid, {(0, 0): (1.0, 0.0)}))

    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_inv_laplace_div_of_gradient(self, d, rng):
        f = random_field(Grid(d, 12), rng, kmax=5)
        np.testing.assert_allclose(inv_laplace_div(gradient(f)).coef, f.coef, atol=1e-13)

    def test_inv_laplace_div_constant(self):
        grid = Grid(2, 8)
        U = SpectralField.from_modes(grid, {(0, 0): (2.0, -1.0)})
        assert np.all(inv_laplace_div(U).coef == 0)

    def test_inv_laplace_div_single_mode(self):
        # hand evaluation: k=(1,2), u_hat=(a, b): -(2 pi i (a + 2 b)) / (4 pi^2 * 5)
        grid = Grid(2, 8)
        a, b = 0.3 + 0.1j, -0.7 + 0.2j
        U = SpectralField.from_modes(grid, {(1, 2): (a, b)})
        expected = -(2j * math.pi * (a + 2 * b)) / (4 * math.pi**2 * 5)
        assert inv_laplace_div(U).coef[0, 1, 2] == pytest.approx(expected, rel=1e-14)


class TestNorms:
    def test_constant_one(self):
        f = PhysicalField(np.ones((1, 8, 8)), Grid(2, 8))
        for p in (1, 2, 3.5, 12):
            assert lp_norm(f, p) == pytest.approx(1.0, rel=1e-14)

    def test_sine_l2(self):
        grid = Grid(1, 16)
        f = PhysicalField.from_function(grid, lambda x: np.sin(2 * np.pi * x))
        oracle = math.sqrt(quad(lambda x: math.sin(2 * math.pi * x) ** 2, 0, 1)[0])
        assert oracle == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert lp_norm(f, 2) == pytest.approx(oracle, rel=1e-13)

    def test_sine_l3_against_quadrature(self):
        # |sin|^3 is not a trigonometric polynomial; lattice quadrature converges fast
        oracle = quad(lambda x: abs(math.sin(2 * math.pi * x)) ** 3, 0, 1, limit=200)[0] ** (1 / 3)
        grid = Grid(1, 256)
        f = PhysicalField.from_function(grid, lambda x: np.sin(2 * np.pi * x))
        assert lp_norm(f, 3) == pytest.approx(oracle, rel=1e-6)

    def test_rejects_p_below_one(self):
        with pytest.raises(ValueError):
            lp_norm(PhysicalField(np.ones((1, 8)), Grid(1, 8)), 0.5)

    @settings(max_examples=20, deadline=None)
    @given(seed=seeds, lam=st.floats(-50, 50, allow_nan=False), p=st.floats(1, 12))
    def test_homogeneity(self, seed, lam, p):
        f = inverse_transform(random_field(Grid(2, 10), np.random.default_rng(seed), ncomp=2))
        scaled = PhysicalField(lam * f.values, f.grid)
        assert lp_norm(scaled, p) == pytest.approx(abs(lam) * lp_norm(f, p), rel=1e-12, abs=1e-300)

    def test_parseval_matches_quadrature(self, rng):
        F = random_field(Grid(3, 12), rng, ncomp=3)
        assert l2_norm(F) == pytest.approx(lp_norm(inverse_transform(F), 2), rel=1e-13)

    def test_sobolev_zero_is_lp(self, rng):
        F = random_field(Grid(2, 12), rng)
        assert sobolev_norm(F, 0, 3) == pytest.approx(lp_norm(inverse_transform(F), 3), rel=1e-14)

    @pytest.mark.parametrize("d", [2, 3])
    def test_poincare_and_inverse_bound(self, d, rng):
        n = 4
        for _ in range(10):
            F = random_field(Grid(d, 12), rng, ncomp=d, kmax=n)
            assert l2_norm(F) <= grad_l2_norm(F) / (2 * math.pi) + 1e-14
            assert grad_l2_norm(F) <= 2 * math.pi * math.sqrt(d) * n * l2_norm(F) + 1e-12


def convolution_oracle(U, V, n):
    """Truncated coefficient convolution by explicit double loop over the boxes."""
    grid = U.grid
    d = grid.d
    out = np.zeros_like(U.coef)
    box = [tuple(k) for k in iter_modes((n,) * d)]
    idx = lambda k: tuple(v % grid.N for v in k)
    for k1, k2 in itertools.product(box, box):
        k = tuple(a + b for a, b in zip(k1, k2))
        if all(abs(v) <= n for v in k):
            out[(slice(None),) + idx(k)] += U.coef[(slice(None),) + idx(k1)] * V.coef[(slice(None),) + idx(k2)]
    return out


class TestDealiasedProduct:
    def test_two_modes(self):
        grid = Grid(2, 18)
        U = SpectralField.from_modes(grid, {(1, 2): 0.5})
        V = SpectralField.from_modes(grid, {(2, -1): 2.0})
        out = dealias_product(U, V, 4).coef.copy()
        # (1,2)+(2,-1) lands at (3,1); the other three sums are (-1,3), (1,-3), (-3,-1)
        for k in [(3, 1), (-1, 3), (1, -3), (-3, -1)]:
            assert out[0, k[0], k[1]] == pytest.approx(1.0)
            out[0, k[0], k[1]] = 0
        assert np.max(np.abs(out)) < 1e-15

    @pytest.mark.parametrize("d,n", [(1, 5), (2, 3), (3, 2)])
    def test_convolution_oracle(self, d, n, rng):
        grid = Grid(d, dealias_size(n))
        U = random_field(grid, rng, ncomp=2, kmax=n, mean_zero=False)
        V = random_field(grid, rng, ncomp=2, kmax=n, mean_zero=False)
        got = dealias_product(U, V, n).coef
        np.testing.assert_allclose(got, convolution_oracle(U, V, n), atol=1e-12)

    def test_mean_is_parseval_pairing(self, rng):
        grid = Grid(2, 18)
        U = random_field(grid, rng, kmax=4, mean_zero=False)
        V = random_field(grid, rng, kmax=4, mean_zero=False)
        mean = dealias_product(U, V, 4).coef[0, 0, 0]
        pairing = np.sum(U.coef[0] * np.conj(V.coef[0]))  # V real: V_hat(-k) = conj V_hat(k)
        assert mean == pytest.approx(pairing, abs=1e-14)
        assert mean == pytest.approx(inner(U, V), abs=1e-14)

    def test_rejects_coarse_grid(self, rng):
        grid = Grid(2, 16)
        U = random_field(grid, rng, kmax=4)
        with pytest.raises(AliasingError, match="4n\\+2"):
            dealias_product(U, U, 4)

    def test_rejects_untruncated_factor(self, rng):
        grid = Grid(2, 24)
        U = random_field(grid, rng, kmax=5)
        with pytest.raises(ValueError, match="outside"):
            dealias_product(U, U, 4)


class TestHalfSpectrum:
    @pytest.fixture(params=[(1, 12), (2, 18), (3, 10)])
    def case(self, request, rng):
        d, N = request.param
        grid = Grid(d, N)
        return grid, HalfSpectrum(grid), random_field(grid, rng, ncomp=max(d, 1), kmax=3 if N > 8 else 2)

    def test_round_trip(self, case):
        grid, hs, u = case
        assert np.array_equal(hs.to_full(hs.from_full(u.coef)), u.coef)

    def test_transforms_match_full(self, case):
        grid, hs, u = case
        v = inverse_transform(u).values
        np.testing.assert_allclose(hs.inverse(hs.from_full(u.coef)), v, atol=1e-12)
        np.testing.assert_allclose(hs.to_full(hs.forward(v)), u.coef, atol=1e-14)

    def test_weighted_norm(self, case):
        grid, hs, u = case
        assert float(hs.sq_norm(hs.from_full(u.coef))) == pytest.approx(float(l2_norm(u)) ** 2, rel=1e-13)

    def test_leray(self, rng):
        grid = Grid(3, 12)
        hs = HalfSpectrum(grid)
        u = random_field(grid, rng, ncomp=3, kmax=3)
        np.testing.assert_allclose(hs.to_full(hs.leray(hs.from_full(u.coef))), leray_project(u).coef, atol=1e-14)

    def test_fix_planes_symmetrizes(self, rng):
        grid = Grid(3, 8)
        hs = HalfSpectrum(grid)
        h = rng.standard_normal((3,) + grid.shape[:-1] + (hs.H,)) * (1 + 1j)
        fixed = hs.fix_planes(h.copy())
        full = hs.to_full(fixed)
        reflected = np.conj(np.roll(np.flip(full, axis=(-3, -2, -1)), 1, axis=(-3, -2, -1)))
        np.testing.assert_allclose(full, reflected, atol=1e-15)
