"""Tests for the closed forms, superposition bounds, support scans and bilinear benches."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsbesov.blocks import build_ladder, iterate_blocks
from nsbesov.estimates import (
    PreconditionError,
    SuperpositionSpec,
    alpha,
    beta,
    bilinear_bench,
    bilinear_form,
    check_bilinear_exponents,
    check_duhamel_exponents,
    duhamel_bench,
    duhamel_integral,
    gradient_power_norm,
    prop31_refinement,
    random_solenoidal,
    required_constant,
    scaling_sweep,
    sigma,
    verify_freq_support,
    verify_prop31,
    write_sweep,
)
from nsbesov.nash import build_nash_system
from nsbesov.littlewood_paley import AngularLocalizers, BesovParams, besov_norm
from nsbesov.spectral import Grid, SpectralField, divergence, lp_norm


def _sigma_oracle(Lambda, s, q, lam):
    """``σ^q`` summed as an exact rational (integer ``s``, even ``q``), then one rounding."""
    total = sum((Fraction(lam) ** (s * q * ell) / Fraction(ell) ** (q // 2) for ell in Lambda), Fraction(0))
    return float(total) ** (1.0 / q)


class TestClosedForms:
    def test_sigma_reciprocal_sum(self):
        assert sigma([2, 3, 4], 0, 2, 8) == pytest.approx(math.sqrt(13 / 12), rel=1e-15)

    def test_sigma_sup(self):
        assert sigma([2, 3, 4], 0, math.inf, 8) == pytest.approx(1 / math.sqrt(2), rel=1e-15)

    @pytest.mark.parametrize("q", [1.0, 2.0, 5.0, math.inf])
    def test_sigma_single(self, q):
        assert sigma([3], 0.5, q, 4) == pytest.approx(4**1.5 / math.sqrt(3), rel=1e-15)

    @pytest.mark.parametrize("Lambda", [[1], [2, 3, 4], [1, 5, 9, 13]])
    @pytest.mark.parametrize("s", [-2, -1, 0, 1, 2])
    @pytest.mark.parametrize("q", [2, 4])
    def test_sigma_rational_oracle(self, Lambda, s, q):
        assert sigma(Lambda, s, q, 2) == pytest.approx(_sigma_oracle(Lambda, s, q, 2), rel=1e-14)

    def test_sigma_empty(self):
        with pytest.raises(ValueError):
            sigma([], 0, 2, 2)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_alpha_at_infinity(self, n):
        a = alpha(math.inf, n)
        assert a == 12 * n + 11
        assert a < beta(n)

    def test_alpha_exact(self):
        assert alpha(3, 3) == Fraction(2 * 17 - 4 - 1)
        assert isinstance(alpha(Fraction(7, 2), 3), Fraction)

    @settings(max_examples=100, deadline=None)
    @given(p=st.fractions(min_value=1, max_value=1000), n=st.integers(3, 8))
    def test_alpha_below_beta(self, p, n):
        assert alpha(p, n) < beta(n)


class TestSuperposition:
    def test_zero_coefficients(self):
        sp = SuperpositionSpec(2, 8, [[1, 0]], [0.0, 0.0])
        rep = verify_prop31(sp, BesovParams(2, 2, 0))
        assert rep.measured[0] == 0.0 and rep.passed

    @pytest.mark.parametrize("bp", [BesovParams(2, 2, 0), BesovParams(np.inf, 1, 1.5), BesovParams(4, np.inf, -1)])
    def test_constant_amplitude_exact(self, bp):
        """Single direction with unit length: each ℓ sits on a block plateau, so the ratio is exactly one."""
        sp = SuperpositionSpec(3, 16, [[1, 0, 0]], [1.0], amplitude="constant")
        rep = verify_prop31(sp, bp)
        assert rep.ratio == pytest.approx(1.0, rel=1e-12)

    def test_two_level_constant_amplitude(self):
        sp = SuperpositionSpec(2, 4, [[0, 1]], [1.0, -0.5], amplitude="constant")
        bp = BesovParams(2, 2, 1.0)
        rep = verify_prop31(sp, bp)
        assert rep.ratio == pytest.approx(1.0, rel=1e-12)

    def test_gaussian_single(self):
        sp = SuperpositionSpec(2, 16, [[1, 0]], [1.0])
        rep = verify_prop31(sp, BesovParams(2, 2, 0))
        assert 1 / 3 <= rep.ratio <= 3
        assert rep.details["tail_upper"] >= 0

    def test_refinement(self):
        sp = SuperpositionSpec(2, 8, [[1, 0], [0, 1]], [1.0, -1.0])
        r1, r2, comb = prop31_refinement(sp, BesovParams(4, 1, -1))
        assert comb.passed and comb.ratio <= 0.2

    @pytest.mark.parametrize("p,s", [(2, -1.5), (np.inf, -3)])
    def test_precondition(self, p, s):
        sp = SuperpositionSpec(3, 16, [[1, 0, 0]], [1.0])
        with pytest.raises(PreconditionError):
            verify_prop31(sp, BesovParams(p, 2, s))

    def test_tail_order(self):
        sp = SuperpositionSpec(2, 16, [[1, 0]], [1.0])
        with pytest.raises(PreconditionError):
            verify_prop31(sp, BesovParams(2, 2, 3), M=2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n=2, lam=8, directions=[[1, 0], [2, 0]], coeffs=[1]),
            dict(n=2, lam=1, directions=[[1, 0]], coeffs=[1]),
            dict(n=3, lam=8, directions=[[1, 0]], coeffs=[1]),
            dict(n=2, lam=8, directions=[[1, 0]], coeffs=[1], amplitude="box"),
        ],
    )
    def test_invalid_spec(self, kwargs):
        with pytest.raises(ValueError):
            SuperpositionSpec(**kwargs)

    def test_grid_too_small(self):
        sp = SuperpositionSpec(2, 16, [[1, 0]], [1.0, 1.0])
        with pytest.raises(ValueError):
            sp.build(Grid(2, 64))

    def test_bump_normalized(self):
        sp = SuperpositionSpec(2, 16, [[1, 0]], [1.0])
        f = sp.bump(Grid(2, 64))
        assert f.physical()[0, 0].real == pytest.approx(1.0, rel=1e-14)


class TestGradientPower:
    def test_against_hand_calculus(self):
        """``∇²cos(2x)cos(3y)`` has Frobenius norm ``sqrt(16c²C² + 2·36s²S² + 81c²C²)``."""
        grid = Grid(2, 32)
        f = SpectralField.from_function(grid, lambda x, y: np.cos(2 * x) * np.cos(3 * y))
        x, y = np.meshgrid(2 * np.pi * np.arange(32) / 32, 2 * np.pi * np.arange(32) / 32, indexing="ij")
        c, C, s, S = np.cos(2 * x), np.cos(3 * y), np.sin(2 * x), np.sin(3 * y)
        mag = np.sqrt(16 * c**2 * C**2 + 2 * 36 * s**2 * S**2 + 81 * c**2 * C**2)
        assert gradient_power_norm(f, 2, np.inf) == pytest.approx(mag.max(), rel=1e-13)
        ref = np.sqrt(np.sum(mag**2) * grid.cell_volume)
        assert gradient_power_norm(f, 2, 2.0) == pytest.approx(ref, rel=1e-13)

    def test_order_zero(self):
        grid = Grid(2, 16)
        f = SpectralField.from_function(grid, lambda x, y: np.sin(x))
        assert gradient_power_norm(f, 0, 3.0) == lp_norm(f, 3.0)


LOC3 = AngularLocalizers(np.eye(3))


class TestFreqSupport:
    def test_own_cap_far_shell(self):
        rep = verify_freq_support(1, 7, 1, 1, LOC3, 16)
        assert rep.passed
        assert rep.measured[0] >= required_constant(1, 1, LOC3)

    @pytest.mark.parametrize("j", [3, 4, 5])
    def test_excluded(self, j):
        with pytest.raises(PreconditionError):
            verify_freq_support(1, j, 1, 1, LOC3, 16)

    def test_other_cap(self):
        rep = verify_freq_support(2, 4, 1, 1, LOC3, 16)
        assert rep.passed
        assert rep.measured[0] >= required_constant(2, 1, LOC3)

    def test_complement(self):
        assert verify_freq_support(0, 4, 1, 1, LOC3, 16).passed

    def test_rejects_non_power(self):
        with pytest.raises(ValueError):
            verify_freq_support(1, 7, 1, 1, LOC3, 12)

    def test_rejects_index(self):
        with pytest.raises(IndexError):
            verify_freq_support(1, 8, 4, 1, LOC3, 16)


def _bilinear_oracle(V, W):
    """Plain-grid product (exact for low bands) followed by the symbols of ℙ div and (-Δ)^{-1}."""
    grid = V.grid
    N, n = grid.N, grid.n
    v, w = V.physical(), W.physical()
    T = np.fft.fftn(np.einsum("i...,j...->ij...", v, w), axes=tuple(range(2, 2 + n))) / N**n
    k = np.meshgrid(*([np.fft.fftfreq(N, 1 / N)] * n), indexing="ij")
    k2 = sum(ki**2 for ki in k)
    inv = np.where(k2 > 0, 1 / np.where(k2 > 0, k2, 1), 0)
    div = np.stack([sum(1j * k[j] * T[i, j] for j in range(n)) for i in range(n)])
    kd = sum(k[i] * div[i] for i in range(n))
    proj = np.stack([div[i] - k[i] * kd * inv for i in range(n)])
    return proj * inv


class TestBilinear:
    def test_exponent_window(self):
        check_bilinear_exponents(3, 4, 2)
        with pytest.raises(PreconditionError):
            check_bilinear_exponents(3, 2, 4)

    def test_duhamel_window(self):
        check_duhamel_exponents(3, 2, 4)
        for p, th in [(6, 4), (2, 2), (2, math.inf), (1.5, 4)]:
            with pytest.raises(PreconditionError):
                check_duhamel_exponents(3, p, th)

    def test_form_against_oracle(self):
        grid = Grid(3, 16)
        rng = np.random.default_rng(0)
        V, W = random_solenoidal(grid, rng, 3), random_solenoidal(grid, rng, 3)
        got = bilinear_form(V, W).full_coeffs()
        ref = _bilinear_oracle(V, W)
        assert np.max(np.abs(got - ref)) <= 1e-13 * np.max(np.abs(ref))

    def test_zero_partner(self):
        grid = Grid(3, 16)
        V = random_solenoidal(grid, np.random.default_rng(1), 3)
        out = bilinear_form(V, SpectralField.zeros(grid, "vector"))
        assert besov_norm(out, BesovParams(2, 1, 0.5)).value == 0.0

    def test_random_solenoidal(self):
        rng = np.random.default_rng(2)
        a = random_solenoidal(Grid(3, 16), rng, 3)
        b = random_solenoidal(Grid(3, 32), np.random.default_rng(2), 3)
        assert divergence(a).max_coeff() <= 1e-15
        assert lp_norm(a, 2) == pytest.approx(1.0)
        assert np.max(np.abs(a.physical()[:, ::1, ::1, ::1] - b.physical()[:, ::2, ::2, ::2])) <= 1e-14

    def test_bench_frozen(self):
        res = bilinear_bench(1, 4, 2, 2, Grid(3, 16), band=3)
        assert res.passed
        np.testing.assert_allclose(res.measured, [0.05717488398222565, 0.05717488398222562], rtol=1e-9)

    def test_bench_precondition(self):
        with pytest.raises(PreconditionError):
            bilinear_bench(1, 2, 2, 4, Grid(3, 16))


class TestDuhamel:
    def test_zero(self):
        grid = Grid(3, 8)
        z = SpectralField.zeros(grid, "vector")
        out = duhamel_integral([z] * 5, np.linspace(0, 1, 5))
        assert all(f.max_coeff() == 0 for f in out)

    @pytest.mark.parametrize("steps", [1, 4, 33])
    def test_constant_forcing(self, steps):
        grid = Grid(3, 16)
        f = random_solenoidal(grid, np.random.default_rng(3), 5)
        f.coeffs[(slice(None), 0, 0, 0)] = [0.3, 0, 0]
        T = 0.7
        times = np.linspace(0, T, steps + 1)
        D = duhamel_integral([f] * len(times), times)[-1]
        a = grid.k2()
        mult = np.where(a > 0, -np.expm1(-T * a) / np.where(a > 0, a, 1), T)
        assert np.max(np.abs(D.coeffs - f.coeffs * mult)) <= 1e-8 * np.max(np.abs(f.coeffs * mult))

    def test_linear_forcing(self):
        """``N(t) = t·g`` integrates to ``(t a - 1 + e^{-ta})/a² ĝ`` per mode."""
        grid = Grid(3, 8)
        g = random_solenoidal(grid, np.random.default_rng(4), 3)
        times = np.linspace(0, 1.3, 7)
        D = duhamel_integral([g * t for t in times], times)[-1]
        a = grid.k2()
        safe = np.where(a > 0, a, 1)
        mult = np.where(a > 0, (1.3 * a - 1 + np.exp(-1.3 * a)) / safe**2, 1.3**2 / 2)
        assert np.max(np.abs(D.coeffs - g.coeffs * mult)) <= 1e-12

    def test_length_mismatch(self):
        z = SpectralField.zeros(Grid(3, 8))
        with pytest.raises(ValueError):
            duhamel_integral([z, z], [0.0])

    def test_bench_frozen(self):
        res = duhamel_bench(1, 2, 2, 4, 1.0, Grid(3, 16), steps=8, band=3)
        assert res.passed
        np.testing.assert_allclose(res.measured, [0.0020665874775184618, 0.001993065476596259], rtol=1e-9)

    def test_bench_odd_steps(self):
        with pytest.raises(ValueError):
            duhamel_bench(1, 2, 2, 4, 1.0, Grid(3, 16), steps=7)


class TestScaling:
    def test_needs_three_lambdas(self):
        with pytest.raises(ValueError):
            scaling_sweep([8, 16], BesovParams(2, 2, 0.5))

    def test_unknown_cutoff(self):
        with pytest.raises(ValueError):
            scaling_sweep([2, 4, 8], BesovParams(2, 2, 0.5), cutoff="other")

    def test_torus_cutoff_flat(self, tmp_path):
        res = scaling_sweep([2, 4, 8], BesovParams(2, 2, 0.5), cutoff="torus")
        assert res.passed and res.drift == pytest.approx(1.0, abs=1e-6)
        csv, js = write_sweep(res, tmp_path / "sweep" / "s")
        assert csv.read_text().count("\n") >= 4 and js.exists()

    def test_literal_cutoff_drift(self):
        """The literal λ^{n/p} normalization drifts by exactly λ_max/λ_min to the power n/p."""
        res = scaling_sweep([2, 4, 8], BesovParams(2, 2, 0.5), cutoff="literal")
        assert res.drift == pytest.approx(4.0 ** 1.5, rel=1e-6)

    def test_q_monotone_at_fixed_level(self):
        grid = Grid(3, 32)
        lad = build_ladder(2, grid=grid, Lambda=[[1, 2]], scales=[1.0])
        V = iterate_blocks(lad, build_nash_system(3), grid).V
        vals = [besov_norm(V, BesovParams(2, q, 0.5)).value for q in (1, 2, 4, math.inf)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
