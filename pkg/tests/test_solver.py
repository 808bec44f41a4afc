import csv

import numpy as np
import pytest

from cubicheat.data import BumpSpec, build_bump, gaussian, scale_datum
from cubicheat.errors import ConfigError, InsufficientSamples, NegativeTime
from cubicheat.field import Grid, RealField, SpectralField, dft_forward, to_physical, to_spectral
from cubicheat.solver import SolverConfig, etd_step, heat_propagate, solve, weissler_trace

LINE = Grid(1, 256)


def constant(grid, c):
    return RealField(grid, np.full(grid.shape, float(c)))


def small_wave(grid, amp=0.1, seed=0):
    F = to_spectral(np.random.default_rng(seed).standard_normal(grid.shape), grid)
    F[grid.xi_abs > grid.nyquist / 4] = 0
    F[(0,) * grid.dim] = 0
    v = to_physical(F, grid)
    return RealField(grid, amp * v / np.max(np.abs(v)))


class TestHeat:
    def test_zero_time(self):
        F = dft_forward(small_wave(LINE))
        assert heat_propagate(F, 0) is F

    def test_negative_time(self):
        with pytest.raises(NegativeTime):
            heat_propagate(dft_forward(small_wave(LINE)), -1)

    def test_semigroup_law(self):
        F = dft_forward(small_wave(Grid(2, 32)))
        a = heat_propagate(heat_propagate(F, 0.3), 0.7).coeffs
        b = heat_propagate(F, 1.0).coeffs
        assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(b))

    def test_gaussian_to_gaussian(self):
        g = Grid(3, 32, 8 * np.pi)
        F = dft_forward(gaussian(2.0, g))
        u = to_physical(heat_propagate(F, 1.5).coeffs, g)
        assert np.max(np.abs(u - gaussian(3.5, g).values)) < 1e-8


class TestStep:
    def test_zero(self):
        Z = SpectralField(LINE, np.zeros(LINE.shape))
        assert np.all(etd_step(Z, 0.1).coeffs == 0)

    def test_linear_only_is_heat(self):
        F = dft_forward(small_wave(LINE))
        assert np.array_equal(etd_step(F, 0.05, nonlinear=False).coeffs, heat_propagate(F, 0.05).coeffs)

    def test_bad_dt(self):
        with pytest.raises(ConfigError):
            etd_step(dft_forward(small_wave(LINE)), 0.0)

    def test_constant_tracks_ode(self):
        g = Grid(1, 16)
        F = dft_forward(constant(g, 1.0))
        dt, t = 1e-3, 0.0
        while t < 0.45 - 1e-12:
            F = etd_step(F, dt)
            t += dt
        u = to_physical(F.coeffs, g)[0]
        assert u == pytest.approx((1 - 2 * t) ** -0.5, rel=0.01)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            SolverConfig(LINE, t_end=0)
        with pytest.raises(ConfigError):
            SolverConfig(LINE, 1.0, track_p=3.5)
        with pytest.raises(ConfigError):
            SolverConfig(LINE, 1.0, track_p=2, safety=1.5)
        with pytest.raises(ConfigError):
            SolverConfig(LINE, 1.0, track_p=2, snapshot_times=(2.0,))
        with pytest.raises(ConfigError):
            solve(small_wave(Grid(1, 64)), SolverConfig(LINE, 1.0, track_p=2))

    def test_default_dt_min(self):
        assert SolverConfig(LINE, 2.0, track_p=2).dt_min == pytest.approx(2e-12)


class TestSolve:
    def test_zero_is_global(self):
        out = solve(constant(LINE, 0), SolverConfig(LINE, 1.0, track_p=2))
        assert out.verdict == "Global"
        assert np.all(out.final.coeffs == 0)
        assert np.all(out.diagnostics.Linf == 0)

    @pytest.mark.parametrize("c", [0.5, 1.0, 2.0])
    def test_constant_blowup(self, c):
        out = solve(constant(LINE, c), SolverConfig(LINE, 4.0, amplitude_cap=1e6, track_p=2))
        assert out.verdict == "Blowup"
        assert out.T_star_estimate == pytest.approx(1 / (2 * c * c), rel=0.02)

    def test_small_data_global_and_decaying_trace(self):
        # an odd datum keeps u^3 odd, so no zero mode is generated and the
        # torus solution decays like the whole-space one
        g = Grid(1, 64, 2 * np.pi)
        x = g.x()[0]
        u0 = RealField(g, 0.1 * (np.sin(x) + 0.5 * np.sin(2 * x)))
        out = solve(u0, SolverConfig(g, 30.0, track_p=2))
        assert out.verdict == "Global"
        d = out.diagnostics
        assert np.all(np.isfinite(d.Linf)) and d.Linf.max() <= d.Linf[0] * (1 + 1e-9)
        assert weissler_trace(out, 2).tends_to_zero
        w = d.weissler_p[1:]
        assert w[-1] < 1e-6 * w.max()

    def test_snapshots_and_csv(self, tmp_path):
        g = Grid(1, 64, 2 * np.pi)
        out = solve(small_wave(g), SolverConfig(g, 1.0, track_p=2, snapshot_times=(0.25, 0.5), snapshot_stride=5))
        assert sorted(out.snapshots) == [0.25, 0.5]
        assert 0.5 in out.diagnostics.t and 0.25 in out.diagnostics.t
        assert len(out.strided) == out.steps // 5
        path = tmp_path / "diag.csv"
        out.write_csv(path)
        rows = list(csv.reader(open(path)))
        assert rows[0] == ["t", "L3", "Linf", "weissler_p", "min_spec", "dt"]
        assert len(rows) == len(out.diagnostics) + 1
        assert float(rows[-1][0]) == 1.0

    def test_positive_spectrum_stays_positive(self):
        g = Grid(2, 64, 64 * np.pi)
        w = build_bump(BumpSpec(), g) * 2.0
        out = solve(w, SolverConfig(g, 0.2, track_p=3))
        d = out.diagnostics
        assert np.all(d.min_spec >= -1e-10 * d.max_spec)

    def test_summary(self):
        out = solve(constant(LINE, 1), SolverConfig(LINE, 1.0, amplitude_cap=1e4, track_p=2))
        s = out.summary()
        assert s["verdict"] == "Blowup" and s["trigger"] == "amplitude_cap"
        assert s["grid"]["mode"] == "analog"


class TestWeissler:
    def test_zero(self):
        out = solve(constant(LINE, 0), SolverConfig(LINE, 1.0, track_p=2))
        tr = weissler_trace(out, 2)
        assert np.all(tr.values == 0) and tr.tends_to_zero

    def test_heat_flow_trace_vanishes_at_zero(self):
        g = Grid(3, 16)
        w = build_bump(BumpSpec(), g)
        out = solve(w, SolverConfig(g, 1.0, nonlinear=False, track_p=6))
        tr = weissler_trace(out, 6)
        assert tr.exponent > 0 and tr.tends_to_zero

    def test_untracked_exponent(self):
        out = solve(constant(LINE, 0), SolverConfig(LINE, 1.0, track_p=2))
        with pytest.raises(ConfigError):
            weissler_trace(out, 2.5)

    def test_too_few_samples(self):
        out = solve(constant(LINE, 0), SolverConfig(LINE, 1.0, dt_init=0.5, track_p=2))
        with pytest.raises(InsufficientSamples):
            weissler_trace(out, 2)

    def test_self_similar_trace(self):
        g = Grid(1, 1024, 64 * np.pi)
        f = build_bump(BumpSpec(), g) * 0.5
        lam = 2.0
        a = solve(f, SolverConfig(g, 4.0, track_p=2))
        b = solve(scale_datum(f, lam), SolverConfig(g.rescaled(lam), 1.0, track_p=2))
        ta, va = a.diagnostics.t[1:], a.diagnostics.weissler_p[1:]
        tb, vb = b.diagnostics.t[1:], b.diagnostics.weissler_p[1:]
        probe = np.linspace(0.1, 1.0, 10)
        ref = np.interp(probe * lam**2, ta, va)
        got = np.interp(probe, tb, vb)
        assert np.max(np.abs(got / ref - 1)) < 0.03
