"""Tests for the frequency ladder, oscillatory blocks and the residual force."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from nsbesov.blocks import (
    LadderError,
    block_operator,
    build_ladder,
    f12_pair_sum,
    iterate_blocks,
    mollifier_symbol,
    oscillator_profile,
    paper_mu,
    pdiv,
    relative_error,
    residual_force,
    tower_descriptor,
    tower_inner_exponent,
)
from nsbesov.estimates import gradient_power_norm
from nsbesov.identities import identity_checks
from nsbesov.nash import NashDomainError, build_nash_system
from nsbesov.spectral import Grid, SpectralField, deformation, divergence, laplacian

SYS3 = build_nash_system(3)


@pytest.fixture(scope="module")
def two_level():
    grid = Grid(3, 32)
    lad = build_ladder(2, J=2, grid=grid, Lambda=[[1], [2]], scales=(0.01, 50.0))
    bundle = iterate_blocks(lad, SYS3, grid)
    return bundle, residual_force(bundle)


class TestLadder:
    def test_paper_mode_tower(self):
        lad = build_ladder(2, mode="paper", n=3)
        assert lad.mu == paper_mu(3) == 17
        assert lad.tower[0] == "2^(2^68)"
        assert tower_inner_exponent(2, 17) == 68
        assert not lad.representable

    def test_paper_mode_refuses_fields(self):
        lad = build_ladder(2, mode="paper", n=3, J=2)
        with pytest.raises(LadderError, match="2\\^\\(2\\^68\\)"):
            iterate_blocks(lad, SYS3, Grid(3, 32))
        with pytest.raises(LadderError):
            oscillator_profile(1, 0, lad, Grid(3, 32), SYS3)

    def test_nested_tower(self):
        assert tower_descriptor(2, 17, 2) == "2^(2^(68*2^(2^68)))"

    def test_harmonic_weight(self):
        lad = build_ladder(2, Lambda=[[2, 3, 4]], scales=[1.0])
        assert lad.h_exact(1) == Fraction(13, 12)
        assert abs(lad.h(1) - 13 / 12) <= 1e-15

    def test_singleton(self):
        lad = build_ladder(2, Lambda=[[3]], scales=[1.0])
        assert lad.h_exact(1) == Fraction(1, 3)

    def test_two_levels_separated(self):
        lad = build_ladder(2, J=2, Lambda=[[2, 3, 4], [5, 6]], scales=[1.0, 2.0])
        assert max(lad.Lambda(1)) < min(lad.Lambda(2))

    def test_auto_fill(self):
        lad = build_ladder(2, J=2, grid=Grid(3, 64))
        assert lad.Lambda_sets == ((1, 2), (3,))

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(lam=3, Lambda=[[1]]),
            dict(lam=2, Lambda=[[]]),
            dict(lam=2, Lambda=[[2, 2]]),
            dict(lam=2, Lambda=[[0]]),
            dict(lam=2, J=2, Lambda=[[1, 2], [2, 3]]),
            dict(lam=2, J=2, Lambda=[[1]]),
            dict(lam=2, Lambda=[[1]], scales=[-1.0]),
            dict(lam=4, Lambda=[[2]], grid=Grid(3, 32)),
            dict(lam=2, J=0, Lambda=[]),
            dict(lam=2, mode="other"),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(LadderError):
            build_ladder(**kwargs)

    def test_serializes(self):
        d = build_ladder(4, grid=Grid(3, 32), Lambda=[[1]], scales=[0.01]).to_dict()
        assert d["h"] == ["1"] and d["Lambda"] == [[1]]


class TestProfile:
    def test_singleton_amplitude(self):
        grid = Grid(3, 32)
        lad = build_ladder(4, grid=grid, Lambda=[[1]], scales=[1.0])
        for k in range(SYS3.size):
            psi = oscillator_profile(1, k, lad, grid, SYS3)
            b = SYS3.a_dirs[k]
            amp = 1.0 / (16 * float(b @ b) * math.sqrt(1.0))
            x = grid.coordinates()
            ref = amp * np.cos(4 * sum(bi * xi for bi, xi in zip(b, x)))
            assert np.max(np.abs(psi.physical() - ref)) <= 1e-15

    def test_support_and_parseval(self):
        grid = Grid(2, 64)
        sys2 = build_nash_system(2)
        lad = build_ladder(2, grid=grid, Lambda=[[1, 2, 3]], scales=[1.0])
        h = 1 + 1 / 2 + 1 / 3
        for k in range(sys2.size):
            psi = oscillator_profile(1, k, lad, grid, sys2)
            b = sys2.a_dirs[k]
            full = psi.full_coeffs()
            support = {tuple(int(v) for v in np.where(i > 32, i - 64, i)) for i in np.argwhere(np.abs(full) > 1e-16)}
            expected = {tuple(int(s * 2**ell * c) for c in b) for ell in (1, 2, 3) for s in (1, -1)}
            assert support == expected
            w = [1 / (4**ell * float(b @ b) * math.sqrt(h * ell)) for ell in (1, 2, 3)]
            energy = (2 * math.pi) ** 2 * sum(x**2 for x in w) / 2
            got = float(np.sum(psi.physical() ** 2) * grid.cell_volume)
            assert got == pytest.approx(energy, rel=1e-13)


def _radial_symbol(eta, n=3):
    """Fourier transform of the normalized bump at |η| by direct radial quadrature in three dimensions."""
    bump = lambda r: math.exp(-1 / (1 - r * r)) if r < 1 else 0.0  # noqa: E731
    mass = integrate.quad(lambda r: bump(r) * r * r, 0, 1, epsabs=0, epsrel=1e-13)[0]
    if eta == 0:
        return 1.0
    val = integrate.quad(lambda r: bump(r) * r * r * math.sin(eta * r) / (eta * r), 0, 1, epsabs=0, epsrel=1e-13, limit=200)[0]
    return val / mass


class TestMollifier:
    @pytest.mark.parametrize("eta", [0.0, 0.3, 1.0, 2.5, 7.0])
    def test_symbol_against_quadrature(self, eta):
        assert float(mollifier_symbol(np.array([eta]), 3)[0]) == pytest.approx(_radial_symbol(eta), abs=1e-12)


class TestBlockOperator:
    def test_level_one_closed_form(self):
        grid = Grid(3, 32)
        s = 0.01
        lad = build_ladder(4, grid=grid, Lambda=[[1]], scales=[s])
        V = block_operator(None, 1, lad, SYS3, grid)
        x = grid.coordinates()
        g = SYS3.gamma(np.eye(3))
        ref = np.zeros((3,) + grid.shape)
        freq = lad.mollifier_freqs[0]
        for k in range(SYS3.size):
            b = SYS3.a_dirs[k]
            m = 4 * b
            rho = _radial_symbol(float(np.linalg.norm(m)) / freq**2)
            wave = np.cos(sum(mi * xi for mi, xi in zip(m, x)))
            for i in range(3):
                ref[i] += math.sqrt(2 * s) * g[k] * rho * wave * SYS3.K_set[k][i]
        assert np.max(np.abs(V.physical() - ref)) / np.max(np.abs(ref)) <= 1e-11

    def test_divergence_free(self, two_level):
        bundle, _ = two_level
        for lv in bundle.levels:
            assert divergence(lv.V).max_coeff() <= 1e-12 * lv.V.max_coeff()

    def test_split_identity(self, two_level):
        bundle, _ = two_level
        for lv in bundle.levels:
            assert relative_error(lv.V, lv.Vp + lv.Vr1 + lv.Vr2 + lv.Vr3) <= 1e-11

    def test_gamma_fields_vary_at_level_two(self, two_level):
        bundle, _ = two_level
        assert all(np.count_nonzero(g.coeffs) == 1 for g in bundle.levels[0].gammas)
        assert any(np.count_nonzero(g.coeffs) > 1 for g in bundle.levels[1].gammas)

    def test_real_mean_zero(self, two_level):
        bundle, _ = two_level
        V = bundle.V
        assert V.real
        assert np.all(V.mean == 0)

    def test_principal_shell(self, two_level):
        """Level-two principal mass sits within one previous-level frequency of its oscillation shell."""
        bundle, _ = two_level
        grid = bundle.grid
        lv = bundle.levels[1]
        r = np.sqrt(grid.k2())
        width = 2**1 * math.sqrt(2)
        outside = (r < 4 - width) | (r > 4 * math.sqrt(2) + width)
        w = np.abs(lv.Vp.coeffs) ** 2
        assert w[:, outside].sum() / w.sum() <= 1e-6

    def test_inadmissible_scale(self):
        grid = Grid(3, 32)
        lad = build_ladder(2, J=2, grid=grid, Lambda=[[1], [2]], scales=(1.0, 1e-3))
        with pytest.raises(NashDomainError, match="level 2"):
            iterate_blocks(lad, SYS3, grid)

    @pytest.mark.parametrize("p", [2.0, np.inf])
    def test_derivative_growth_bound(self, p):
        """``‖∇^m V_1‖_p / λ_1^{2m+4}`` does not grow with λ for m = 0, 1, 2."""
        grid = Grid(3, 64)
        ratios = {m: [] for m in range(3)}
        for lam in (2, 4, 8):
            lad = build_ladder(lam, grid=grid, Lambda=[[1]], scales=[0.01])
            V = block_operator(None, 1, lad, SYS3, grid)
            for m in range(3):
                ratios[m].append(gradient_power_norm(V, m, p) / float(lam) ** (2 * m + 4))
        for m, r in ratios.items():
            assert all(b <= a * (1 + 1e-9) for a, b in zip(r, r[1:])), (m, r)


class TestForce:
    def test_direct_equals_split(self, two_level):
        _, force = two_level
        assert relative_error(force.F, force.split_sum) <= 1e-10

    def test_identities_report(self, two_level):
        bundle, force = two_level
        reports = identity_checks(bundle, force, nash_samples=200)
        assert len(reports) == 2 * 2 + 3 + 2 * 2 + 1
        assert all(r.passed for r in reports), [r.line() for r in reports if not r.passed]

    def test_cancellation(self, two_level):
        bundle, _ = two_level
        lv = bundle.levels[1]
        grid = bundle.grid
        sI = SpectralField.zeros(grid, "matrix")
        for i in range(3):
            sI.coeffs[(i, i, 0, 0, 0)] = lv.scale
        total = laplacian(lv.previous) * -1.0 + pdiv(sI - deformation(lv.previous))
        assert total.max_coeff() <= 1e-11 * laplacian(lv.previous).max_coeff()

    def test_level_one_force_has_no_linear_term(self, two_level):
        bundle, force = two_level
        ref = pdiv(force.F11[0] + force.F12[0])
        assert relative_error(pdiv(force.VpVp[0]), ref) <= 1e-12

    def test_f12_pair_sum(self, two_level):
        bundle, force = two_level
        for lv, f12 in zip(bundle.levels, force.F12):
            assert relative_error(f12, f12_pair_sum(lv)) <= 1e-12

    def test_cross_level_support(self, two_level):
        bundle, force = two_level
        grid = bundle.grid
        lam = 2
        bound = (1 - lam ** (1 - 2)) * lam**2 * 1.0
        w = np.abs(force.F2[(1, 2)].coeffs) ** 2
        below = np.sqrt(grid.k2()) < bound
        assert w[:, below].sum() <= 1e-20 * w.sum()

    def test_top_level_term(self, two_level):
        bundle, force = two_level
        assert relative_error(force.F_top, laplacian(bundle.levels[-1].V) * -1.0) == 0.0
