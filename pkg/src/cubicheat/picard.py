"""Fixed-point machinery for the mild formulation x = e^{t Lap} u0 + Gamma(x, x, x).

Time is discretised on a graded grid tau_i = t_end (i/M)^gamma that clusters
nodes at t = 0, where the Weissler weight t^(sigma/2) degenerates.  The
trilinear Duhamel operator is integrated mode by mode by exponential
product quadrature: the heat factor is exact and the triple product is
interpolated quadratically through neighbouring nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigError, ExponentOutOfRange, GridMismatch, NonPositive
from .field import Grid, RealField, lp_norm_values, product3_spectral, to_physical, to_spectral

__all__ = [
    "TimeGrid",
    "Trajectory",
    "PicardRecord",
    "PicardTrace",
    "weissler_sigma",
    "beta_constant",
    "eta_threshold",
    "ball_radius",
    "gamma_trilinear",
    "heat_trajectory",
    "y_norm",
    "strong_norm",
    "picard_iterate",
    "duhamel_residual",
    "calibrate_trilinear_constant",
]

P_EDGE = 1e-3


def weissler_sigma(p: float, dim: int = 3) -> float:
    return 1 - dim / p


def _check_exponent(p: float, dim: int) -> None:
    if not (dim + P_EDGE <= p <= 3 * dim - P_EDGE):
        raise ExponentOutOfRange(f"p={p} must lie in ({dim}, {3 * dim}) for dim={dim}")


def beta_constant(p: float, dim: int = 3) -> float:
    """B(1 - dim/p, 1 - 3 sigma/2), the constant in

        int_0^t (t - tau)^(-dim/p) tau^(-3 sigma/2) dtau = C t^(-sigma/2).
    """
    _check_exponent(p, dim)
    sigma = weissler_sigma(p, dim)
    return float(special.beta(1 - dim / p, 1 - 1.5 * sigma))


def eta_threshold(C0: float) -> float:
    """Smallness radius (2 / (3 sqrt 3)) C0^(-1/2) for x = x0 + B(x, x, x)."""
    if not C0 > 0:
        raise NonPositive(f"C0 must be positive, got {C0}")
    return 2 / (3 * math.sqrt(3)) / math.sqrt(C0)


def ball_radius(C0: float) -> float:
    """Radius (1/sqrt 3) C0^(-1/2) of the ball holding the fixed point."""
    if not C0 > 0:
        raise NonPositive(f"C0 must be positive, got {C0}")
    return 1 / math.sqrt(3 * C0)


@dataclass(frozen=True)
class TimeGrid:
    """Graded nodes 0 = tau_0 < tau_1 < ... < tau_M = t_end."""

    t_end: float
    M: int
    gamma: float = 4.0

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.M < 2:
            raise ConfigError("need at least two nodes")
        if self.gamma < 1:
            raise ConfigError("grading exponent must be >= 1")

    @property
    def all_nodes(self) -> np.ndarray:
        """Nodes including tau_0 = 0."""
        return self.t_end * (np.arange(self.M + 1) / self.M) ** self.gamma

    @property
    def nodes(self) -> np.ndarray:
        return self.all_nodes[1:]

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_end, self.M * factor, self.gamma)

    def singular_weights(self, i: int, a: float, b: float) -> np.ndarray:
        """Weights w_j, j = 0..i, with

            sum_j w_j g(tau_j) ~ int_0^{tau_i} (tau_i - tau)^(-a) tau^(-b) g(tau) dtau

        by product integration of the piecewise-linear interpolant of g.
        Exact for g = const, hence for the pure power weight itself.
        """
        if not (a < 1 and b < 1):
            raise ExponentOutOfRange("both exponents must be below 1")
        tau = self.all_nodes[: i + 1]
        t = tau[-1]
        s = tau / t
        # moments of s^(-b) (1-s)^(-a) and s^(1-b) (1-s)^(-a) on each cell
        m0 = _beta_increments(s, 1 - b, 1 - a) * t ** (1 - a - b)
        m1 = _beta_increments(s, 2 - b, 1 - a) * t ** (2 - a - b)
        h = np.diff(tau)
        w = np.zeros(i + 1)
        w[:-1] += (tau[1:] * m0 - m1) / h
        w[1:] += (m1 - tau[:-1] * m0) / h
        return w

    def to_dict(self) -> dict:
        return {"t_end": self.t_end, "M": self.M, "gamma": self.gamma}


def _beta_increments(s: np.ndarray, a: float, b: float) -> np.ndarray:
    """B(a, b) [I_{s[k+1]}(a, b) - I_{s[k]}(a, b)], using the complement past 1/2."""
    lo, hi = s[:-1], s[1:]
    inc = np.where(
        hi <= 0.5,
        special.betainc(a, b, hi) - special.betainc(a, b, lo),
        special.betaincc(a, b, lo) - special.betaincc(a, b, hi),
    )
    return special.beta(a, b) * inc


@dataclass
class Trajectory:
    """Spectral samples at every node of a TimeGrid, tau_0 = 0 included."""

    grid: Grid
    tg: TimeGrid
    coeffs: np.ndarray

    def __post_init__(self):
        want = (self.tg.M + 1,) + self.grid.shape
        if self.coeffs.shape != want:
            raise GridMismatch(f"trajectory shape {self.coeffs.shape} != {want}")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        _same(self, other)
        return Trajectory(self.grid, self.tg, self.coeffs + other.coeffs)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        _same(self, other)
        return Trajectory(self.grid, self.tg, self.coeffs - other.coeffs)

    def values(self, i: int) -> np.ndarray:
        return to_physical(self.coeffs[i], self.grid)

    def at_end(self) -> RealField:
        return RealField(self.grid, self.values(self.tg.M))


def _same(*trajs: Trajectory) -> None:
    g, tg = trajs[0].grid, trajs[0].tg
    for tr in trajs[1:]:
        if tr.grid != g:
            raise GridMismatch("trajectories live on different spatial grids")
        if tr.tg != tg:
            raise GridMismatch("trajectories live on different time grids")


def heat_trajectory(u0: RealField, tg: TimeGrid) -> Trajectory:
    grid = u0.grid
    F = to_spectral(u0.values, grid)
    tau = tg.all_nodes.reshape((-1,) + (1,) * grid.dim)
    return Trajectory(grid, tg, F[None] * np.exp(-tau * grid.xi_sq[None]))


def _exp_moments(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """E_m(z) = int_0^1 v^m e^(-z v) dv for m = 0, 1, 2."""
    small = z < 1.0
    zs = np.where(small, 1.0, z)
    ez = np.exp(-zs)
    e0 = -np.expm1(-zs) / zs
    e1 = (e0 - ez) / zs
    e2 = (2 * e1 - ez) / zs
    out = []
    zz = np.where(small, z, 0.0)
    for m, big in enumerate((e0, e1, e2)):
        term = np.ones_like(zz) / (m + 1)
        acc = term.copy()
        fact = 1.0
        for j in range(1, 22):
            fact *= j
            acc = acc + (-zz) ** j / (fact * (m + j + 1))
        out.append(np.where(small, acc, big))
    return tuple(out)


def _duhamel(F: np.ndarray, grid: Grid, tg: TimeGrid) -> np.ndarray:
    """int_0^t e^{(t - tau) Lap} F(tau) dtau at every node.

    Per step the integrand's heat factor is exact and F is replaced by its
    Lagrange interpolant through the last three nodes (two on the first step).
    """
    tau = tg.all_nodes
    out = np.zeros_like(F)
    lam = grid.xi_sq
    for i in range(1, tg.M + 1):
        h = tau[i] - tau[i - 1]
        z = h * lam
        e0, e1, e2 = _exp_moments(z)
        # v = (tau_i - s)/h runs from 0 at node i to 1 at node i-1
        if i == 1:
            incr = h * ((e0 - e1) * F[i] + e1 * F[i - 1])
        else:
            r = (tau[i - 1] - tau[i - 2]) / h
            w_i = ((1 + r) * e0 - (2 + r) * e1 + e2) / (1 + r)
            w_im1 = ((1 + r) * e1 - e2) / r
            w_im2 = (e2 - e1) / (r * (1 + r))
            incr = h * (w_i * F[i] + w_im1 * F[i - 1] + w_im2 * F[i - 2])
        out[i] = np.exp(-z) * out[i - 1] + incr
    return out


def gamma_trilinear(u1: Trajectory, u2: Trajectory, u3: Trajectory, tg: TimeGrid | None = None) -> Trajectory:
    """Gamma(u1, u2, u3)(t) = int_0^t e^{(t - tau) Lap} (u1 u2 u3)(tau) dtau at every node."""
    _same(u1, u2, u3)
    if tg is not None and tg != u1.tg:
        raise GridMismatch("inputs are not sampled on the given time grid")
    grid, tg = u1.grid, u1.tg
    F = np.empty_like(u1.coeffs)
    for i in range(tg.M + 1):
        F[i] = product3_spectral(u1.coeffs[i], u2.coeffs[i], u3.coeffs[i], grid)
    return Trajectory(grid, tg, _duhamel(F, grid, tg))


def y_norm(x: Trajectory, p: float) -> float:
    """max over positive nodes of tau^(sigma/2) ||x(tau)||_p."""
    sigma = weissler_sigma(p, x.grid.dim)
    tau = x.tg.all_nodes
    return max(tau[i] ** (sigma / 2) * float(lp_norm_values(x.values(i), x.grid, p)) for i in range(1, x.tg.M + 1))


def l3_sup(x: Trajectory) -> float:
    return max(float(lp_norm_values(x.values(i), x.grid, 3)) for i in range(x.tg.M + 1))


def strong_norm(x: Trajectory, p: float) -> float:
    """sup ||x||_{L^3} + Y-norm."""
    return l3_sup(x) + y_norm(x, p)


@dataclass
class PicardRecord:
    Y_norm: float
    strong_norm: float
    L3_norm: float
    update_ratio: float
    update: float


@dataclass
class PicardTrace:
    iterates: list[PicardRecord]
    verdict: str
    final_Y: float
    C0: float
    eta: float
    p: float
    tol: float
    x0_Y: float
    solution: Trajectory | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "final_Y": self.final_Y,
            "C0": self.C0,
            "eta": self.eta,
            "ball": ball_radius(self.C0),
            "x0_Y": self.x0_Y,
            "p": self.p,
            "tol": self.tol,
            "iterates": [vars(r) for r in self.iterates],
        }


def picard_iterate(
    u0: RealField,
    tg: TimeGrid,
    p: float,
    max_iter: int = 60,
    tol: float = 1e-10,
    C0: float | None = None,
) -> PicardTrace:
    """Iterate x_{n+1} = x_0 + Gamma(x_n, x_n, x_n) from x_0 = e^{t Lap} u0.

    ``C0`` defaults to the calibrated discrete trilinear constant.  The run is
    Diverged once the Y-norm leaves ten times the fixed-point ball or turns
    non-finite, and Stalled if ``max_iter`` passes without convergence.
    """
    grid = u0.grid
    _check_exponent(p, grid.dim)
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if C0 is None:
        C0 = calibrate_trilinear_constant(grid, tg, p)
    limit = 10 * ball_radius(C0)
    x0 = heat_trajectory(u0, tg)
    x0_Y = y_norm(x0, p)
    x, prev = x0, x0_Y
    records: list[PicardRecord] = []
    verdict = "Stalled"
    for _ in range(max_iter):
        with np.errstate(all="ignore"):
            nxt = x0 + gamma_trilinear(x, x, x)
        if not np.all(np.isfinite(nxt.coeffs)):
            verdict = "Diverged"
            break
        upd = y_norm(nxt - x, p)
        ratio = upd / prev if prev > 0 else 0.0
        Y = y_norm(nxt, p)
        records.append(PicardRecord(Y, l3_sup(nxt) + Y, float(lp_norm_values(nxt.values(tg.M), grid, 3)), ratio, upd))
        x, prev = nxt, upd
        if Y > limit:
            verdict = "Diverged"
            break
        if upd < tol:
            verdict = "Converged"
            break
    final_Y = records[-1].Y_norm if records else x0_Y
    return PicardTrace(records, verdict, final_Y, C0, eta_threshold(C0), p, tol, x0_Y, x)


def duhamel_residual(x: Trajectory, u0: RealField, p: float) -> float:
    """||x - e^{t Lap} u0 - Gamma(x, x, x)||_Y."""
    r = x - heat_trajectory(u0, x.tg) - gamma_trilinear(x, x, x)
    return y_norm(r, p)


def _random_band_limited(grid: Grid, rng: np.random.Generator, band: float) -> RealField:
    noise = rng.standard_normal(grid.shape)
    F = to_spectral(noise, grid)
    F = np.where(grid.xi_abs <= band, F, 0)
    F[(0,) * grid.dim] = 0
    vals = to_physical(F, grid)
    return RealField(grid, vals / np.max(np.abs(vals)))


def calibrate_trilinear_constant(grid: Grid, tg: TimeGrid, p: float, samples: int = 6, seed: int = 0) -> float:
    """Largest ||Gamma(u1,u2,u3)||_Y / prod ||u_i||_Y over a seeded corpus.

    The inputs are heat flows of mean-zero random fields band-limited to
    half the Nyquist radius; diagonal triples (u, u, u) are included.
    """
    _check_exponent(p, grid.dim)
    rng = np.random.default_rng(seed)
    band = grid.nyquist / 2
    trajs = [heat_trajectory(_random_band_limited(grid, rng, band), tg) for _ in range(samples)]
    norms = [y_norm(tr, p) for tr in trajs]
    best = 0.0
    for i in range(samples):
        triples = [(i, i, i), (i, (i + 1) % samples, (i + 2) % samples)]
        for a, b, c in triples:
            g = gamma_trilinear(trajs[a], trajs[b], trajs[c])
            best = max(best, y_norm(g, p) / (norms[a] * norms[b] * norms[c]))
    return best
