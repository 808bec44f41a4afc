"""Initial data: Fourier bumps, the oscillating family u_{0,N}, heat kernels.

u_{0,N}(x) = eps_N * sum_{k=1}^N 2^(2k/3) eta_k cos((2^k - 1) x_1) w(x),
eta_k = k^(-1/3),  eps_N = 1 / log(log N).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.special as sps

from .errors import ConfigError, IncompatibleLambda, NTooSmall, ResolutionError
from .field import (
    Grid,
    RealField,
    SpectralField,
    _reflect,
    lp_norm_values,
    pad_spectrum,
    to_physical,
)
from .littlewood_paley import (
    PSI_INNER,
    PSI_OUTER,
    CHI_INNER,
    CHI_OUTER,
    aggregate,
    build_partition,
    block_norms,
)

MIN_N = 3
MIN_BUMP_MODES = 8


def eps_N(N: int) -> float:
    if N < MIN_N:
        raise NTooSmall(f"N must be >= {MIN_N} so that log log N > 0, got {N}")
    return 1.0 / math.log(math.log(N))


def eta(k):
    return np.asarray(k, dtype=float) ** (-1.0 / 3.0)


@dataclass(frozen=True)
class BumpSpec:
    """Smooth compactly supported Fourier bump.

    ``l1_mass`` rescales the spectrum so that ||w_hat||_{L^1} equals it; with
    a nonnegative even spectrum this is also w(0) = max |w|.  ``None`` keeps
    the raw profile exp(-r^2 / (r^2 - |xi - c|^2)).
    """

    center: float = 1 / 6
    radius: float = 1 / 6
    evenize: bool = True
    l1_mass: float | None = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("bump radius must be positive")

    @property
    def extent(self) -> float:
        """Radius of the smallest origin-centred ball holding the support."""
        return abs(self.center) + self.radius

    def to_dict(self) -> dict:
        return asdict(self)


def _raw_bump(xi: list[np.ndarray], center: float, radius: float) -> np.ndarray:
    d2 = (xi[0] - center) ** 2
    for comp in xi[1:]:
        d2 = d2 + comp**2
    r2 = radius**2
    inside = d2 < r2
    out = np.zeros(np.broadcast_shapes(*(c.shape for c in xi)))
    out[inside] = np.exp(-r2 / (r2 - d2[inside]))
    return out


class Bump:
    """Evaluable bump profile with the lattice normalisation baked in."""

    def __init__(self, spec: BumpSpec, grid: Grid):
        if spec.extent >= grid.nyquist:
            raise ResolutionError(f"bump extent {spec.extent} exceeds Nyquist {grid.nyquist}")
        self.spec = spec
        self.grid = grid
        xi = grid.xi()
        lobe = _raw_bump(xi, spec.center, spec.radius)
        modes = int(np.count_nonzero(lobe))
        if modes < MIN_BUMP_MODES:
            raise ResolutionError(f"only {modes} lattice modes inside the bump support; refine the box")
        self.modes = modes
        base = 0.5 * (lobe + _reflect(lobe)) if spec.evenize else lobe
        mass = float(np.sum(base) * grid.spectral_cell)
        self.scale = 1.0 if spec.l1_mass is None else spec.l1_mass / mass

    def lobe(self, xi: list[np.ndarray], shift: float = 0.0) -> np.ndarray:
        """The un-symmetrised lobe b(xi - shift e_1), normalised."""
        s = self.spec
        return self.scale * _raw_bump(xi, s.center + shift, s.radius)

    def __call__(self, xi: list[np.ndarray], shift: float = 0.0) -> np.ndarray:
        """w_hat(xi - shift e_1)."""
        s = self.spec
        b = _raw_bump(xi, s.center + shift, s.radius)
        if s.evenize:
            b = 0.5 * (b + _raw_bump(xi, shift - s.center, s.radius))
        return self.scale * b


def bump_spectrum(spec: BumpSpec, grid: Grid) -> SpectralField:
    bump = Bump(spec, grid)
    coeffs = bump(grid.xi())
    if spec.evenize:
        # exact lattice evenness regardless of rounding in the profile
        coeffs = 0.5 * (coeffs + _reflect(coeffs))
    return SpectralField(grid, coeffs)


def build_bump(spec: BumpSpec, grid: Grid) -> RealField:
    W = bump_spectrum(spec, grid)
    if not spec.evenize:
        raise ConfigError("a non-evenised bump has a complex inverse transform; use bump_spectrum")
    return RealField(grid, to_physical(W.coeffs, grid))


@dataclass(frozen=True)
class OscillatingDatumSpec:
    N: int
    bump: BumpSpec = BumpSpec()

    def __post_init__(self):
        eps_N(self.N)

    def to_dict(self) -> dict:
        return {"N": self.N, "bump": self.bump.to_dict()}


def carrier(k: int) -> int:
    """Frequency 2^k - 1 of the k-th cosine."""
    return 2**k - 1


def u0N_spectrum(spec: OscillatingDatumSpec, grid: Grid, terms=None) -> SpectralField:
    """Spectrum of u_{0,N}; ``terms`` restricts the sum to selected k."""
    N = spec.N
    ks = list(range(1, N + 1) if terms is None else terms)
    top = carrier(max(ks)) + spec.bump.extent
    if top >= grid.nyquist:
        raise ResolutionError(f"u0N needs |xi| up to {top:.4g}, Nyquist is {grid.nyquist:.4g}")
    bump = Bump(spec.bump, grid)
    xi = grid.xi()
    eps = eps_N(N)
    coeffs = np.zeros(grid.shape)
    for k in ks:
        M = carrier(k)
        weight = eps * 2.0 ** (2 * k / 3) * float(eta(k))
        coeffs += weight * 0.5 * (bump(xi, shift=-M) + bump(xi, shift=M))
    coeffs = 0.5 * (coeffs + _reflect(coeffs))
    return SpectralField(grid, coeffs)


def build_u0N(spec: OscillatingDatumSpec, grid: Grid) -> RealField:
    F = u0N_spectrum(spec, grid)
    return RealField(grid, to_physical(F.coeffs, grid))


def scale_datum(f: RealField, lam: float) -> RealField:
    """lam * f(lam x) on the box of length L / lam (lam a power of two)."""
    m = math.log2(lam) if lam > 0 else float("nan")
    if not (lam > 0 and m == round(m)):
        raise IncompatibleLambda(f"lambda must be a power of two, got {lam}")
    return RealField(f.grid.rescaled(lam), lam * f.values)


def _periodized_gauss_1d(x: np.ndarray, t: float, L: float) -> np.ndarray:
    images = int(math.ceil(math.sqrt(4 * t * 50) / L)) + 1
    out = np.zeros_like(x)
    for m in range(-images, images + 1):
        out += np.exp(-((x - m * L) ** 2) / (4 * t))
    return out / math.sqrt(4 * math.pi * t)


def gaussian(t: float, grid: Grid) -> RealField:
    """Periodised heat kernel (4 pi t)^(-d/2) exp(-|x|^2 / 4t) centred at 0."""
    if not t > 0:
        raise ConfigError("heat kernel time must be positive")
    if t * grid.nyquist**2 < 30:
        raise ResolutionError(f"G_t with t={t} is under-resolved on {grid}")
    x = grid.x(centered=True)
    vals = np.ones(grid.shape)
    for comp in x:
        vals = vals * _periodized_gauss_1d(comp, t, grid.L)
    return RealField(grid, vals)


# -- shell mode Besov norms of u_{0,N} ----------------------------------------

def _abs_cos_power_series(p: float, terms: int = 24) -> np.ndarray:
    """a_m with |cos th|^p = sum_m a_m cos(2 m th)."""
    n = 4096
    th = np.pi * np.arange(n) / n
    vals = np.abs(np.cos(th)) ** p
    c = np.fft.rfft(vals).real / n
    a = 2 * c[: terms + 1]
    a[0] = c[0]
    return a


def modulated_lp_norm(w: RealField, M: float, p: float, terms: int = 24) -> float:
    """||w(x) cos(M x_1)||_p from the cosine-power expansion of |cos|^p.

    Harmonics 2 m M beyond the (2x refined) grid's Nyquist are dropped; for a
    band-limited ``w`` they carry only the tail of |w|^p's spectrum.
    """
    grid = w.grid
    fine = grid.refined(2 * grid.n)
    W = np.fft.fftn(w.values) * (grid.L / (2 * np.pi * grid.n)) ** grid.dim
    wf = to_physical(pad_spectrum(W, fine.n), fine)
    wp = np.abs(wf) ** p
    x1 = fine.x(centered=False)[0]
    a = _abs_cos_power_series(p, terms)
    total = a[0] * np.sum(wp) * fine.cell_volume
    for m in range(1, terms + 1):
        nu = 2 * m * M
        if nu >= fine.nyquist:
            break
        total += a[m] * np.sum(wp * np.cos(nu * x1)) * fine.cell_volume
    return float(max(total, 0.0) ** (1.0 / p))


def _power_sum(a: int, b: int, expo: float) -> float:
    """sum_{j=a}^{b} j^(-expo) for expo >= 1, any size b."""
    if b < a:
        return 0.0
    if b > 10**15:
        # b beyond float precision: use the leading asymptotics of the upper end
        lb = math.log(b)
        if expo == 1:
            return float(lb + 0.5 / b - sps.digamma(float(a)))
        if expo > 1:
            return float(sps.zeta(expo, float(a)) - math.exp((1 - expo) * lb) / (expo - 1))
    if expo == 1:
        return float(sps.digamma(float(b) + 1.0) - sps.digamma(float(a)))
    if expo > 1:
        return float(sps.zeta(expo, float(a)) - sps.zeta(expo, float(b) + 1.0))
    if b - a > 10**7:
        raise ConfigError("divergent power sum is only summed directly up to 1e7 terms")
    j = np.arange(a, b + 1, dtype=float)
    return float(np.sum(j ** (-expo)))


def exact_block(k: int, bump: BumpSpec) -> bool:
    """True when the k-th term sits where psi_k == 1 and no other block reaches."""
    M = carrier(k)
    lo, hi = (M - bump.extent) / 2**k, (M + bump.extent) / 2**k
    # psi(r) == 1 exactly on [CHI_OUTER, 2 * CHI_INNER]
    return lo >= CHI_OUTER - 1e-12 and hi <= 2 * CHI_INNER


class ShellModel:
    """Closed-form block norms of u_{0,N} for arbitrarily large N.

    Terms below ``k_exact`` overlap several blocks and are evaluated on the
    grid once; every later term occupies exactly one block with unit
    multiplier, so ||Delta_j u_{0,N}||_p = eps_N 2^(2j/3) eta_j c_j with
    c_j = ||w cos((2^j - 1) x_1)||_p.  Beyond ``j_direct`` c_j is replaced by
    its limit (mean |cos|^p)^(1/p) ||w||_p.
    """

    def __init__(self, bump: BumpSpec, grid: Grid, p: float, j_direct: int = 10):
        self.bump = bump
        self.grid = grid
        self.p = p
        k_exact = 1
        while not exact_block(k_exact, bump):
            k_exact += 1
            if k_exact > 60:
                raise ConfigError("bump too wide for single-block shells")
        self.k_exact = k_exact
        self.j_direct = max(j_direct, k_exact)
        w = build_bump(bump, grid)
        self.w_norm = float(lp_norm_values(w.values, grid, p))
        a = _abs_cos_power_series(p)
        self.c_inf = float(a[0] ** (1 / p)) * self.w_norm
        self.c = {j: modulated_lp_norm(w, carrier(j), p) for j in range(k_exact, self.j_direct + 1)}
        # unit-eps low part: terms k < k_exact, on the grid
        self.low = {}
        if k_exact > 1:
            spec = OscillatingDatumSpec(max(MIN_N, k_exact - 1), bump)
            low = u0N_spectrum(spec, grid, terms=range(1, k_exact))
            vals = to_physical(low.coeffs, grid) / eps_N(spec.N)
            norms = block_norms(RealField(grid, vals), p, build_partition(grid))
            leak = max((v for j, v in norms.items() if j >= k_exact), default=0.0)
            peak = max(norms.values())
            if leak > 1e-10 * peak:
                raise ConfigError(f"low terms leak into exact shells (rel {leak / peak:.2e})")
            self.low = {j: v for j, v in norms.items() if j < k_exact and v > 1e-14 * peak}

    def c_j(self, j: int) -> float:
        return self.c.get(j, self.c_inf)

    def block_values(self, N: int, s: float, j_stop: int | None = None) -> list[tuple[int, float]]:
        """Explicit (j, 2^(js) ||Delta_j u0N||_p) for j up to ``j_stop``."""
        eps = eps_N(N)
        out = [(j, eps * 2.0 ** (j * s) * v) for j, v in sorted(self.low.items())]
        last = N if j_stop is None else min(N, j_stop)
        for j in range(self.k_exact, last + 1):
            out.append((j, eps * 2.0 ** (j * (s + 2 / 3)) * float(eta(j)) * self.c_j(j)))
        return out

    def norm(self, N: int, s: float, q: float) -> float:
        eps = eps_N(N)
        head_stop = min(N, self.j_direct)
        head = [v for _, v in self.block_values(N, s, head_stop)]
        if N <= self.j_direct:
            return aggregate(head, q)
        if np.isinf(q):
            tail_max = eps * 2.0 ** ((self.j_direct + 1) * (s + 2 / 3)) * float(eta(self.j_direct + 1)) * self.c_inf
            if s + 2 / 3 > 0:
                raise ConfigError("q = inf shell norm needs s <= -2/3")
            return max(aggregate(head, q), tail_max)
        a = self.j_direct + 1
        if abs(s + 2 / 3) < 1e-12:
            tail = (eps * self.c_inf) ** q * _power_sum(a, N, q / 3)
        else:
            if N > 10**7:
                raise ConfigError("closed-form tails are implemented for s = -2/3 only")
            j = np.arange(a, N + 1, dtype=float)
            tail = float(np.sum((eps * self.c_inf * 2.0 ** (j * (s + 2 / 3)) * j ** (-1 / 3)) ** q))
        return float((np.sum(np.asarray(head) ** q) + tail) ** (1.0 / q))


def u0N_besov_shell(N: int, s: float, p: float, q: float, bump: BumpSpec = BumpSpec(),
                    grid: Grid | None = None) -> float:
    grid = Grid(3, 64) if grid is None else grid
    return ShellModel(bump, grid, p).norm(N, s, q)


__all__ = [
    "BumpSpec",
    "Bump",
    "OscillatingDatumSpec",
    "ShellModel",
    "build_bump",
    "bump_spectrum",
    "build_u0N",
    "u0N_spectrum",
    "u0N_besov_shell",
    "scale_datum",
    "gaussian",
    "eps_N",
    "eta",
    "carrier",
    "modulated_lp_norm",
    "PSI_INNER",
    "PSI_OUTER",
]
