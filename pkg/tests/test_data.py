import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubicheat.data import (
    Bump,
    BumpSpec,
    OscillatingDatumSpec,
    ShellModel,
    build_bump,
    build_u0N,
    bump_spectrum,
    carrier,
    eps_N,
    gaussian,
    modulated_lp_norm,
    scale_datum,
    u0N_besov_shell,
    u0N_spectrum,
)
from cubicheat.errors import ConfigError, IncompatibleLambda, NTooSmall, ResolutionError
from cubicheat.field import Grid, RealField, dft_forward, lp_norm, to_physical, to_spectral
from cubicheat.field import _ifftn
from cubicheat.littlewood_paley import caloric_characterization

LINE = Grid(1, 8192, 128 * np.pi)


class TestBump:
    def test_even_on_lattice(self):
        g = Grid(3, 32)
        W = bump_spectrum(BumpSpec(), g).coeffs
        flipped = np.roll(np.flip(W), 1, axis=(0, 1, 2))
        assert np.array_equal(W, flipped)

    def test_support(self):
        g = Grid(3, 32)
        spec = BumpSpec()
        W = bump_spectrum(spec, g).coeffs.real
        xi = g.xi()
        d_plus = np.sqrt((xi[0] - spec.center) ** 2 + xi[1] ** 2 + xi[2] ** 2)
        d_minus = np.sqrt((xi[0] + spec.center) ** 2 + xi[1] ** 2 + xi[2] ** 2)
        outside = (d_plus >= spec.radius) & (d_minus >= spec.radius)
        assert np.all(W[outside] == 0)
        assert np.all(W >= 0)

    def test_real_profile(self):
        g = Grid(3, 32)
        W = bump_spectrum(BumpSpec(), g).coeffs
        v = _ifftn(W) * (2 * np.pi * g.n / g.L) ** 3
        assert np.max(np.abs(v.imag)) <= 1e-12

    def test_unit_mass_is_peak(self):
        g = Grid(3, 32)
        w = build_bump(BumpSpec(), g)
        assert np.max(w.values) == pytest.approx(1.0, rel=1e-12)
        assert w.values[0, 0, 0] == pytest.approx(1.0, rel=1e-12)

    def test_too_few_modes(self):
        with pytest.raises(ResolutionError):
            Bump(BumpSpec(), Grid(1, 64))

    def test_beyond_nyquist(self):
        with pytest.raises(ResolutionError):
            Bump(BumpSpec(center=3.5, radius=1), Grid(3, 32))

    def test_bad_radius(self):
        with pytest.raises(ConfigError):
            BumpSpec(radius=0)


class TestOscillatingDatum:
    def test_eps(self):
        assert eps_N(16) == pytest.approx(1 / math.log(math.log(16)))
        with pytest.raises(NTooSmall):
            eps_N(2)

    def test_nonnegative_spectrum(self):
        F = u0N_spectrum(OscillatingDatumSpec(5), LINE).coeffs
        assert np.all(F.real >= 0) and np.all(F.imag == 0)

    def test_needs_resolution(self):
        with pytest.raises(ResolutionError):
            u0N_spectrum(OscillatingDatumSpec(8), LINE)

    def test_sixteen_disjoint_shells(self):
        g = Grid(1, 2**22, 64 * np.pi)
        spec = OscillatingDatumSpec(16)
        F = u0N_spectrum(spec, g).coeffs.real
        xi = g.xi_1d
        live = F > 0
        count = np.zeros(g.n, dtype=int)
        for k in range(1, 17):
            for sign in (1, -1):
                M = sign * carrier(k)
                shell = (np.abs(xi - M - spec.bump.center) < spec.bump.radius) | (
                    np.abs(xi - M + spec.bump.center) < spec.bump.radius
                )
                assert np.any(live & shell)
                count += shell
        assert count.max() == 1
        assert np.all(count[live] == 1)

    def test_physical_formula(self):
        N = 4
        bump = BumpSpec()
        u = build_u0N(OscillatingDatumSpec(N, bump), LINE)
        w = build_bump(bump, LINE).values
        x = LINE.x(centered=False)[0]
        ref = eps_N(N) * sum(2 ** (2 * k / 3) * k ** (-1 / 3) * np.cos((2**k - 1) * x) for k in range(1, N + 1)) * w
        assert np.max(np.abs(u.values - ref)) < 1e-12 * np.max(np.abs(ref))


class TestScaling:
    def test_identity(self):
        f = build_bump(BumpSpec(), Grid(3, 16))
        g = scale_datum(f, 1)
        assert g.grid == f.grid and np.array_equal(g.values, f.values)

    def test_bad_lambda(self):
        f = build_bump(BumpSpec(), Grid(3, 16))
        with pytest.raises(IncompatibleLambda):
            scale_datum(f, 3)

    def test_l3_invariant(self):
        f = build_bump(BumpSpec(), Grid(3, 32))
        assert lp_norm(scale_datum(f, 2), 3) == pytest.approx(lp_norm(f, 3), rel=1e-10)

    def test_proxy_invariant(self):
        # sigma = 1 - d/p makes the proxy scale-free in any dimension
        f = build_u0N(OscillatingDatumSpec(3), LINE)
        t = np.logspace(-4, 4, 161)
        a = caloric_characterization(f, 2.5, t)
        b = caloric_characterization(scale_datum(f, 2), 2.5, t)
        assert b == pytest.approx(a, rel=0.02)


class TestGaussian:
    G = Grid(3, 32, 8 * np.pi)

    def test_mass(self):
        assert np.sum(gaussian(2.0, self.G).values) * self.G.cell_volume == pytest.approx(1.0, abs=1e-8)

    def test_semigroup(self):
        a = to_spectral(gaussian(2.0, self.G).values, self.G)
        b = to_spectral(gaussian(3.0, self.G).values, self.G)
        # convolution of densities is (2 pi)^d times the product of transforms
        conv = to_physical((2 * np.pi) ** 3 * a * b, self.G)
        ref = gaussian(5.0, self.G).values
        assert np.max(np.abs(conv - ref)) < 1e-8 * ref.max()

    def test_transform(self):
        F = dft_forward(gaussian(2.0, self.G)).coeffs * (2 * np.pi) ** 3
        assert np.max(np.abs(F - np.exp(-2.0 * self.G.xi_sq))) < 1e-8

    def test_underresolved(self):
        with pytest.raises(ResolutionError):
            gaussian(1e-3, self.G)


class TestShellModel:
    def test_modulated_norm_matches_grid(self):
        w = build_bump(BumpSpec(), LINE)
        x = LINE.x(centered=False)[0]
        for M in (3, 15):
            direct = lp_norm(RealField(LINE, w.values * np.cos(M * x)), 9)
            assert modulated_lp_norm(w, M, 9) == pytest.approx(direct, rel=1e-8)

    def test_q6_decreases(self):
        vals6 = [u0N_besov_shell(N, -2 / 3, 9, 6) for N in (100, 1000, 10**4, 10**5)]
        assert all(b < a for a, b in zip(vals6, vals6[1:]))

    def test_huge_N(self):
        v = u0N_besov_shell(10**30, -2 / 3, 9, 6)
        assert np.isfinite(v) and v > 0

    def test_norm_drops_from_12_to_16(self):
        model = ShellModel(BumpSpec(), Grid(3, 64), 9.0)
        assert model.norm(12, -2 / 3, 6) > model.norm(16, -2 / 3, 6)


@settings(max_examples=10, deadline=None)
@given(st.integers(min_value=3, max_value=5), st.floats(min_value=0.1, max_value=3.0))
def test_spectrum_scales_linearly_and_stays_nonnegative(N, amp):
    F = u0N_spectrum(OscillatingDatumSpec(N), LINE).coeffs
    assert np.all((amp * F).real >= 0)
    assert np.max(np.abs(F.imag)) == 0
