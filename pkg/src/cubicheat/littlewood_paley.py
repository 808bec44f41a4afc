"""Dyadic Littlewood-Paley blocks and homogeneous Besov norms on the torus.

The generating cutoff ``chi`` equals 1 on |xi| <= 3/5 and vanishes for
|xi| >= 5/6, glued by the C-infinity step built from exp(-1/x).  The annular
profile is psi(xi) = chi(xi/2) - chi(xi), so supp psi lies in [3/5, 5/3] and
the blocks telescope:

    sum_{j=a}^{b} psi(2^-j xi) = chi(2^-(b+1) xi) - chi(2^-a xi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, GridTooCoarse, OutOfRange
from .field import Grid, RealField, lp_norm_values, to_physical, to_spectral

CHI_INNER = 3 / 5
CHI_OUTER = 5 / 6
PSI_INNER = 3 / 5
PSI_OUTER = 5 / 3


def _exp_inv(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    a = _exp_inv(x)
    b = _exp_inv(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def chi(r):
    r = np.asarray(r, dtype=float)
    return smooth_step((CHI_OUTER - r) / (CHI_OUTER - CHI_INNER))


def psi(r):
    r = np.asarray(r, dtype=float)
    return chi(r / 2) - chi(r)


def phi(r):
    return chi(r)


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ConfigError(f"need p, q >= 1, got p={self.p}, q={self.q}")
        if self.s > 0:
            raise ConfigError("only s <= 0 is supported")


@dataclass
class DyadicPartition:
    """Radial dyadic blocks tabulated on a grid.

    ``j_min`` is the coarsest block needed to reach the box's fundamental
    frequency and ``j_max`` the finest one touching the grid corner, so the
    blocks sum to one at every nonzero lattice frequency.
    """

    grid: Grid
    j_min: int
    j_max: int
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def j_range(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def resolved_annulus(self) -> tuple[float, float]:
        return 2.0**self.j_min * CHI_OUTER, 2.0 ** (self.j_max + 1) * CHI_INNER

    def multiplier(self, j: int) -> np.ndarray:
        if j not in self.j_range:
            raise OutOfRange(f"block {j} outside [{self.j_min}, {self.j_max}]")
        if j not in self._cache:
            self._cache[j] = psi(self.grid.xi_abs * 2.0 ** (-j))
        return self._cache[j]

    def low_pass(self) -> np.ndarray:
        return phi(self.grid.xi_abs)

    def describe(self) -> dict:
        lo, hi = self.resolved_annulus
        return {"j_min": self.j_min, "j_max": self.j_max, "annulus": [lo, hi]}


def build_partition(grid: Grid) -> DyadicPartition:
    xi_low = grid.dk
    xi_high = math.sqrt(grid.dim) * grid.nyquist
    j_min = math.floor(math.log2(xi_low / CHI_OUTER))
    j_max = math.ceil(math.log2(xi_high / CHI_INNER)) - 1
    if j_max - j_min + 1 < 3:
        raise GridTooCoarse(f"only {j_max - j_min + 1} dyadic shells fit on {grid}")
    return DyadicPartition(grid, j_min, j_max)


def _block_values(F_hat: np.ndarray, j: int, part: DyadicPartition) -> np.ndarray:
    return to_physical(F_hat * part.multiplier(j), part.grid)


def lp_block(f: RealField, j: int, part: DyadicPartition) -> RealField:
    if f.grid != part.grid:
        raise ConfigError("field and partition live on different grids")
    F = to_spectral(f.values, f.grid)
    return RealField(f.grid, _block_values(F, j, part))


def block_norms(f: RealField, p: float, part: DyadicPartition) -> dict[int, float]:
    """||Delta_j f||_p for every block in the partition."""
    F = to_spectral(f.values, f.grid)
    out = {}
    for j in part.j_range:
        mult = part.multiplier(j)
        if not np.any(mult * np.abs(F) > 0):
            out[j] = 0.0
            continue
        out[j] = float(lp_norm_values(_block_values(F, j, part), f.grid, p))
    return out


def aggregate(values, q: float) -> float:
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        return 0.0
    if np.isinf(q):
        return float(v.max())
    top = v.max()
    if top == 0:
        return 0.0
    return float(top * np.sum((v / top) ** q) ** (1.0 / q))


def besov_report(f: RealField, params: BesovParams, part: DyadicPartition) -> dict:
    norms = block_norms(f, params.p, part)
    per_block = [(j, 2.0 ** (j * params.s) * v) for j, v in norms.items()]
    return {
        "s": params.s,
        "p": params.p,
        "q": params.q,
        "j_min": part.j_min,
        "j_max": part.j_max,
        "per_block": per_block,
        "total": aggregate((v for _, v in per_block), params.q),
    }


def besov_norm(f: RealField, params: BesovParams, part: DyadicPartition) -> float:
    return besov_report(f, params, part)["total"]


def caloric_characterization(f: RealField, p: float, t_samples, exclude_mean: bool = False) -> float:
    """sup_t t^(sigma/2) ||exp(t Lap) f||_p with sigma = 1 - dim/p.

    Heat-semigroup proxy for the homogeneous B^{-sigma, inf}_p norm.  Set
    ``exclude_mean`` to drop the zero mode, which no dyadic block sees.
    """
    t = np.asarray(t_samples, dtype=float)
    if t.size == 0 or np.any(t <= 0):
        raise ConfigError("time samples must be positive")
    if t.max() / t.min() < 1e3 * (1 - 1e-12):
        raise ConfigError("time samples must span at least three decades")
    grid = f.grid
    sigma = 1 - grid.dim / p
    F = to_spectral(f.values, grid)
    if exclude_mean:
        F[(0,) * grid.dim] = 0
    best = 0.0
    for tk in t:
        v = to_physical(F * np.exp(-tk * grid.xi_sq), grid)
        best = max(best, tk ** (sigma / 2) * float(lp_norm_values(v, grid, p)))
    return best
