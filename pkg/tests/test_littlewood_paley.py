import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubicheat.data import BumpSpec, ShellModel, OscillatingDatumSpec, build_bump, build_u0N, eps_N, eta
from cubicheat.errors import ConfigError, OutOfRange
from cubicheat.field import Grid, RealField, lp_norm, to_spectral
from cubicheat.littlewood_paley import (
    BesovParams,
    besov_norm,
    besov_report,
    block_norms,
    build_partition,
    caloric_characterization,
    chi,
    lp_block,
    psi,
    smooth_step,
)

LINE = Grid(1, 8192, 128 * np.pi)


def test_smooth_step_limits():
    x = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    assert np.array_equal(smooth_step(x), [0.0, 0.0, 0.5, 1.0, 1.0])


def test_chi_plateaus():
    assert np.all(chi(np.linspace(0, 0.6, 50)) == 1.0)
    assert np.all(chi(np.linspace(5 / 6, 3, 50)) == 0.0)


def test_psi_below_annulus():
    assert psi(0.5) == 0.0


@pytest.mark.parametrize("grid", [Grid(1, 256), Grid(2, 64), Grid(3, 32)])
def test_partition_of_unity(grid):
    part = build_partition(grid)
    total = sum(part.multiplier(j) for j in part.j_range)
    lo, hi = part.resolved_annulus
    r = grid.xi_abs
    inside = (r >= lo) & (r <= hi)
    assert np.max(np.abs(total[inside] - 1)) < 1e-10
    # the blocks reach every nonzero lattice frequency on this grid
    assert np.max(np.abs(total[r > 0] - 1)) < 1e-10


@pytest.mark.parametrize("grid", [Grid(1, 256), Grid(3, 32)])
def test_block_supports(grid):
    part = build_partition(grid)
    r = grid.xi_abs
    for j in part.j_range:
        m = part.multiplier(j)
        scaled = r * 2.0**-j
        assert np.max(m[(scaled < 3 / 5) | (scaled > 5 / 3)]) == 0.0


def test_unknown_block():
    part = build_partition(LINE)
    with pytest.raises(OutOfRange):
        part.multiplier(part.j_max + 1)


def test_single_mode_blocks():
    g = Grid(1, 1024)
    x = g.x(centered=False)[0]
    f = RealField(g, np.cos(x))
    norms = block_norms(f, 2, build_partition(g))
    top = max(norms.values())
    nonzero = {j for j, v in norms.items() if v > 1e-12 * top}
    assert nonzero == {j for j in norms if 3 / 5 <= 2.0**-j <= 5 / 3}


def test_modulated_bump_blocks():
    bump = BumpSpec()
    w = build_bump(bump, LINE)
    x = LINE.x(centered=False)[0]
    part = build_partition(LINE)
    for k in (2, 3, 4, 5):
        f = RealField(LINE, np.cos((2**k - 1) * x) * w.values)
        norms = block_norms(f, 9, part)
        top = max(norms.values())
        alive = {j for j, v in norms.items() if v > 1e-12 * top}
        assert alive <= {k - 1, k, k + 1}
        assert k in alive


def test_reconstruction():
    g = Grid(2, 64)
    rng = np.random.default_rng(0)
    F = to_spectral(rng.standard_normal(g.shape), g)
    F[0, 0] = 0
    f = RealField(g, np.fft.ifftn(F).real / (g.L / (2 * np.pi * g.n)) ** 2)
    part = build_partition(g)
    rebuilt = sum(lp_block(f, j, part).values for j in part.j_range)
    assert np.max(np.abs(rebuilt - f.values)) < 1e-8 * np.max(np.abs(f.values))


def test_besov_zero_and_single_block():
    part = build_partition(LINE)
    zero = RealField(LINE, np.zeros(LINE.shape))
    assert besov_norm(zero, BesovParams(-0.5, 3, 2), part) == 0
    # the k = 5 modulated bump sits inside the plateau of one block
    w = build_bump(BumpSpec(), LINE)
    x = LINE.x(centered=False)[0]
    f = RealField(LINE, np.cos(31 * x) * w.values)
    rep = besov_report(f, BesovParams(-2 / 3, 9, 6), part)
    top = max(v for _, v in rep["per_block"])
    live = [(j, v) for j, v in rep["per_block"] if v > 1e-12 * top]
    assert [j for j, _ in live] == [5]
    assert rep["total"] == pytest.approx(2.0 ** (-2 / 3 * 5) * lp_norm(f, 9), rel=1e-12)


def test_besov_params_validation():
    with pytest.raises(ConfigError):
        BesovParams(-1, 0.5, 2)
    with pytest.raises(ConfigError):
        BesovParams(0.5, 2, 2)


def test_u0N_block_identity():
    N = 5
    bump = BumpSpec()
    u = build_u0N(OscillatingDatumSpec(N, bump), LINE)
    w = build_bump(bump, LINE)
    x = LINE.x(centered=False)[0]
    part = build_partition(LINE)
    peak = np.max(np.abs(u.values))
    for j in (3, 4, 5):
        expect = eps_N(N) * 2.0 ** (2 * j / 3) * float(eta(j)) * w.values * np.cos((2**j - 1) * x)
        assert np.max(np.abs(lp_block(u, j, part).values - expect)) <= 1e-10 * peak


def test_shell_model_matches_grid_blocks():
    bump = BumpSpec()
    N = 5
    u = build_u0N(OscillatingDatumSpec(N, bump), LINE)
    grid_norm = besov_norm(u, BesovParams(-2 / 3, 9, 6), build_partition(LINE))
    model = ShellModel(bump, LINE, 9.0).norm(N, -2 / 3, 6)
    assert model == pytest.approx(grid_norm, rel=1e-6)


class TestCaloric:
    T = np.logspace(-3, 1, 25)

    def test_zero(self):
        assert caloric_characterization(RealField(LINE, np.zeros(LINE.shape)), 2, self.T) == 0

    def test_needs_three_decades(self):
        with pytest.raises(ConfigError):
            caloric_characterization(RealField(LINE, np.zeros(LINE.shape)), 2, [1, 2])

    def test_equivalent_to_besov_inf(self):
        g = Grid(1, 512)
        part = build_partition(g)
        rng = np.random.default_rng(7)
        ratios = []
        for _ in range(8):
            F = to_spectral(rng.standard_normal(g.shape), g)
            F[g.xi_abs > g.nyquist / 2] = 0
            F[0] = 0
            f = RealField(g, np.fft.ifftn(F).real / (g.L / (2 * np.pi * g.n)))
            p = 2.0
            b = besov_norm(f, BesovParams(-(1 - 1 / p), p, np.inf), part)
            c = caloric_characterization(f, p, np.logspace(-4, 3, 57), exclude_mean=True)
            ratios.append(c / b)
        assert 0.1 <= min(ratios) and max(ratios) <= 10

    def test_u0N_proxy_decreases(self):
        g = LINE
        vals = [
            caloric_characterization(build_u0N(OscillatingDatumSpec(N), g), 2.5, np.logspace(-4, 2, 49))
            for N in (3, 4, 5)
        ]
        assert vals[0] > vals[1] > vals[2]


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=1.0, max_value=12.0), st.floats(min_value=1.0, max_value=20.0))
def test_aggregate_monotone_in_q(p, q):
    g = Grid(1, 256)
    x = g.x(centered=False)[0]
    f = RealField(g, np.cos(x) + 0.3 * np.cos(7 * x))
    part = build_partition(g)
    a = besov_norm(f, BesovParams(-0.5, p, q), part)
    b = besov_norm(f, BesovParams(-0.5, p, q + 1), part)
    assert b <= a * (1 + 1e-12)
