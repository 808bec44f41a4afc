"""Pseudospectral integrating-factor solver for u_t = Lap u + u^3 on the torus.

The linear part is integrated exactly by the heat multiplier.  The nonlinear
part uses the two-stage strong-stability-preserving Runge-Kutta scheme
(Heun) in integrating-factor form,

    u1 = E (u + dt N(u))
    u  <- 1/2 E u + 1/2 (u1 + dt N(u1)),        E = exp(-dt |xi|^2),

whose abscissae are nondecreasing, so only decaying multipliers appear and
every stage is a nonnegative combination of nonnegative spectra.  The
embedded first-order stage ``u1`` provides the step-error estimate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientSamples, NegativeTime, NumericalFailure
from .field import (
    Grid,
    RealField,
    SpectralField,
    cube_spectral,
    hermitian_project,
    lp_norm_values,
    to_physical,
    to_spectral,
)

__all__ = [
    "SolverConfig",
    "SolveOutcome",
    "Diagnostics",
    "WeisslerTrace",
    "heat_propagate",
    "etd_step",
    "solve",
    "weissler_trace",
]


def heat_propagate(F: SpectralField, t: float) -> SpectralField:
    if t < 0:
        raise NegativeTime(f"heat semigroup needs t >= 0, got {t}")
    if t == 0:
        return F
    return SpectralField(F.grid, F.coeffs * np.exp(-t * F.grid.xi_sq))


def _nonlinear(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return cube_spectral(coeffs, grid)


def _heun(u: np.ndarray, dt: float, grid: Grid, nonlinear: bool = True):
    E = np.exp(-dt * grid.xi_sq)
    if not nonlinear:
        v = E * u
        return v, v
    u1 = E * (u + dt * _nonlinear(u, grid))
    u2 = 0.5 * (E * u) + 0.5 * (u1 + dt * _nonlinear(u1, grid))
    return u2, u1


def etd_step(u: SpectralField, dt: float, nonlinear: bool = True) -> SpectralField:
    """One integrating-factor Heun step."""
    if not dt > 0:
        raise ConfigError(f"step size must be positive, got {dt}")
    u2, _ = _heun(u.coeffs, dt, u.grid, nonlinear)
    return SpectralField(u.grid, u2)


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    t_end: float
    dt_init: float = 1e-3
    dt_min: float | None = None
    amplitude_cap: float = 1e8
    safety: float = 0.9
    rtol: float = 1e-4
    track_p: float = 6.0
    symmetrize: bool = False
    nonlinear: bool = True
    snapshot_times: tuple[float, ...] = ()
    snapshot_stride: int = 0
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.dt_min is None:
            object.__setattr__(self, "dt_min", 1e-12 * self.t_end)
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if not 0 < self.dt_min <= self.dt_init:
            raise ConfigError("need 0 < dt_min <= dt_init")
        if not self.amplitude_cap > 0:
            raise ConfigError("amplitude_cap must be positive")
        if not 0 < self.safety < 1:
            raise ConfigError("safety must lie in (0, 1)")
        if not self.rtol > 0:
            raise ConfigError("rtol must be positive")
        d = self.grid.dim
        if not d < self.track_p < 3 * d:
            raise ConfigError(f"track_p must lie in ({d}, {3 * d})")
        times = tuple(sorted(float(t) for t in self.snapshot_times))
        if any(t <= 0 or t > self.t_end for t in times):
            raise ConfigError("snapshot times must lie in (0, t_end]")
        object.__setattr__(self, "snapshot_times", times)

    @property
    def sigma(self) -> float:
        return 1 - self.grid.dim / self.track_p


_COLUMNS = ("t", "L3", "Linf", "weissler_p", "min_spec", "max_spec", "im_max", "dt", "mass", "cube_mass")
CSV_COLUMNS = ("t", "L3", "Linf", "weissler_p", "min_spec", "dt")


@dataclass
class Diagnostics:
    t: np.ndarray
    L3: np.ndarray
    Linf: np.ndarray
    weissler_p: np.ndarray
    min_spec: np.ndarray
    max_spec: np.ndarray
    im_max: np.ndarray
    dt: np.ndarray
    mass: np.ndarray
    cube_mass: np.ndarray

    @classmethod
    def from_rows(cls, rows: list[tuple]) -> "Diagnostics":
        cols = np.array(rows, dtype=float).reshape(-1, len(_COLUMNS)).T
        return cls(*cols)

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class SolveOutcome:
    verdict: str
    t_final: float
    diagnostics: Diagnostics
    final: SpectralField
    config: SolverConfig
    T_star_estimate: float | None = None
    trigger: str | None = None
    snapshots: dict[float, SpectralField] = field(default_factory=dict)
    strided: list[tuple[float, SpectralField]] = field(default_factory=list)
    steps: int = 0
    rejected: int = 0

    @property
    def is_blowup(self) -> bool:
        return self.verdict == "Blowup"

    def write_csv(self, path: str | Path) -> None:
        d = self.diagnostics
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(CSV_COLUMNS)
            for i in range(len(d)):
                wr.writerow([repr(float(getattr(d, c)[i])) for c in CSV_COLUMNS])

    def summary(self) -> dict:
        return {
            "verdict": self.verdict,
            "t_final": self.t_final,
            "T_star_estimate": self.T_star_estimate,
            "trigger": self.trigger,
            "steps": self.steps,
            "rejected": self.rejected,
            "grid": self.config.grid.describe(),
            "track_p": self.config.track_p,
        }


def _record(coeffs: np.ndarray, grid: Grid, t: float, dt: float, p: float, sigma: float) -> tuple:
    vals = to_physical(coeffs, grid)
    vol = (2 * np.pi) ** grid.dim
    zero = (0,) * grid.dim
    cube_mass = float(np.sum(vals**3) * grid.cell_volume)
    return (
        t,
        float(lp_norm_values(vals, grid, 3)),
        float(np.max(np.abs(vals))),
        t ** (sigma / 2) * float(lp_norm_values(vals, grid, p)),
        float(np.min(coeffs.real)),
        float(np.max(np.abs(coeffs))),
        float(np.max(np.abs(coeffs.imag))),
        dt,
        float(coeffs[zero].real * vol),
        cube_mass,
    )


def _increasing(rows: list[tuple]) -> bool:
    linf = [r[2] for r in rows[-3:]]
    return len(linf) >= 2 and all(b > a for a, b in zip(linf, linf[1:]))


def _fit_blowup_time(t: np.ndarray, linf: np.ndarray) -> float:
    """Zero of a linear fit to Linf^-2, the square-root blow-up profile."""
    tt, yy = t[-10:], linf[-10:] ** -2.0
    if len(tt) < 2:
        return float(t[-1])
    slope, intercept = np.polyfit(tt - tt[-1], yy, 1)
    if slope >= 0:
        return float(t[-1])
    return float(tt[-1] - intercept / slope)


def solve(u0: RealField, cfg: SolverConfig) -> SolveOutcome:
    grid = cfg.grid
    if u0.grid != grid:
        raise ConfigError("initial datum lives on a different grid than the config")
    u = to_spectral(u0.values, grid)
    if cfg.symmetrize:
        u = hermitian_project(u)
    sigma, p = cfg.sigma, cfg.track_p
    rows = [_record(u, grid, 0.0, 0.0, p, sigma)]
    snaps: dict[float, SpectralField] = {}
    strided: list[tuple[float, SpectralField]] = []
    pending = list(cfg.snapshot_times)

    t, dt = 0.0, cfg.dt_init
    steps = rejected = 0
    verdict, trigger = "Global", None

    while t < cfg.t_end:
        if steps >= cfg.max_steps:
            raise NumericalFailure(f"max_steps={cfg.max_steps} reached at t={t}")
        target = pending[0] if pending else cfg.t_end
        h = min(dt, target - t)
        landing = h < dt
        new, low = _heun(u, h, grid, cfg.nonlinear)
        scale = np.sum(np.abs(new))
        finite = np.isfinite(scale)
        err = float(np.sum(np.abs(new - low)) / scale) if finite and scale > 0 else (0.0 if finite else np.inf)
        if not finite or err > cfg.rtol:
            rejected += 1
            dt = h / 2
            if dt < cfg.dt_min:
                if _increasing(rows):
                    verdict, trigger = "Blowup", "dt_floor"
                    break
                raise NumericalFailure(f"step size fell below dt_min={cfg.dt_min} at t={t} without growth")
            continue

        u = hermitian_project(new) if cfg.symmetrize else new
        t = target if landing or h == target - t else t + h
        steps += 1
        rows.append(_record(u, grid, t, h, p, sigma))
        if pending and t >= pending[0]:
            snaps[pending.pop(0)] = SpectralField(grid, u)
        if cfg.snapshot_stride and steps % cfg.snapshot_stride == 0:
            strided.append((t, SpectralField(grid, u)))
        if rows[-1][2] >= cfg.amplitude_cap:
            verdict, trigger = "Blowup", "amplitude_cap"
            break
        if not landing:
            growth = 2.0 if err == 0 else min(2.0, max(0.5, cfg.safety * math.sqrt(cfg.rtol / err)))
            dt = h * growth
            if dt < cfg.dt_min:
                if _increasing(rows):
                    verdict, trigger = "Blowup", "dt_floor"
                    break
                raise NumericalFailure(f"step size fell below dt_min={cfg.dt_min} at t={t} without growth")

    diag = Diagnostics.from_rows(rows)
    T_star = None
    if verdict == "Blowup":
        T_star = min(max(_fit_blowup_time(diag.t, diag.Linf), t), cfg.t_end)
    try:
        final = SpectralField(grid, u)
    except ConfigError:
        final = SpectralField(grid, np.nan_to_num(u))
    return SolveOutcome(verdict, t, diag, final, cfg, T_star, trigger, snaps, strided, steps, rejected)


@dataclass
class WeisslerTrace:
    t: np.ndarray
    values: np.ndarray
    exponent: float
    tends_to_zero: bool


def weissler_trace(outcome: SolveOutcome, p: float) -> WeisslerTrace:
    """t^(sigma/2) ||u(t)||_p along the run and its small-time power law."""
    if p != outcome.config.track_p:
        raise ConfigError(f"p={p} was not tracked (track_p={outcome.config.track_p})")
    d = outcome.diagnostics
    t, v = d.t, d.weissler_p
    pos = t > 0
    t, v = t[pos], v[pos]
    if len(t) == 0:
        raise InsufficientSamples("no samples at positive times")
    first = t <= 10 * t[0]
    if np.count_nonzero(first) < 3:
        raise InsufficientSamples("fewer than three samples in the first decade")
    if np.all(v == 0):
        return WeisslerTrace(t, v, math.inf, True)
    tf, vf = t[first], v[first]
    keep = vf > 0
    slope = float(np.polyfit(np.log(tf[keep]), np.log(vf[keep]), 1)[0])
    return WeisslerTrace(t, v, slope, slope > 0)
