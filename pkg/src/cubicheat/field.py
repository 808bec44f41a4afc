"""Periodic grids, real/spectral fields and the cubic nonlinearity.

Spectral coefficients are samples of the Fourier density

    u_hat(xi) = (2 pi)^-d  int u(x) exp(-i x.xi) dx,      u(x) = int u_hat(xi) exp(i x.xi) dxi,

on the lattice xi_k = 2 pi k / L.  With this normalisation products become
plain convolutions, (uvw)^ = u_hat * v_hat * w_hat, the heat semigroup is the
multiplier exp(-t |xi|^2), and for a nonnegative spectrum the peak of ``u``
equals ``sum |u_hat| (2 pi / L)^d``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import BadExponent, ConfigError, GridMismatch, SymmetryViolation

__all__ = [
    "Grid",
    "RealField",
    "SpectralField",
    "dft_forward",
    "dft_inverse",
    "cube_dealiased",
    "cube_spectral",
    "product3_spectral",
    "lp_norm",
    "l1_norm_spectral",
    "hermitian_defect",
    "hermitian_project",
    "HERMITIAN_TOL",
]

HERMITIAN_TOL = 1e-10
NORMALIZATION = "fourier-density"


def _workers() -> int | None:
    value = os.environ.get("CHL_THREADS")
    if value is None:
        return None
    return max(1, int(value))


def _fftn(a, axes=None):
    return sfft.fftn(a, axes=axes, workers=_workers())


def _ifftn(a, axes=None):
    return sfft.ifftn(a, axes=axes, workers=_workers())


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus [0, L)^dim."""

    dim: int
    n: int
    L: float = 16 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ConfigError(f"box length must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dk(self) -> float:
        """Lattice spacing of the frequency grid, 2 pi / L."""
        return 2 * np.pi / self.L

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def spectral_cell(self) -> float:
        return self.dk**self.dim

    @property
    def volume(self) -> float:
        return self.L**self.dim

    @property
    def nyquist(self) -> float:
        return np.pi * self.n / self.L

    @property
    def is_analog(self) -> bool:
        """True when running below the physical dimension 3."""
        return self.dim != 3

    @cached_property
    def xi_1d(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.n, d=self.dx)

    @cached_property
    def x_1d(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def xi(self) -> list[np.ndarray]:
        """Frequency components as broadcastable open meshes (FFT order)."""
        out = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            out.append(self.xi_1d.reshape(shape))
        return out

    @cached_property
    def xi_sq(self) -> np.ndarray:
        k2 = np.zeros(self.shape)
        for comp in self.xi():
            k2 = k2 + comp**2
        return k2

    @cached_property
    def xi_abs(self) -> np.ndarray:
        return np.sqrt(self.xi_sq)

    def x(self, centered: bool = True) -> list[np.ndarray]:
        """Physical coordinates; ``centered`` maps each axis to [-L/2, L/2)."""
        xs = self.x_1d
        if centered:
            xs = (xs + self.L / 2) % self.L - self.L / 2
        out = []
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            out.append(xs.reshape(shape))
        return out

    def refined(self, m: int) -> "Grid":
        """Same box with ``m`` points per axis."""
        return Grid(self.dim, m, self.L)

    def rescaled(self, lam: float) -> "Grid":
        return Grid(self.dim, self.n, self.L / lam)

    def describe(self) -> dict:
        return {
            "dim": self.dim,
            "n": self.n,
            "L": self.L,
            "mode": "analog" if self.is_analog else "physical",
            "normalization": NORMALIZATION,
        }


def _check_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch(f"grids differ: {g} vs {f.grid}")
    return g


@dataclass(frozen=True, eq=False)
class RealField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ConfigError(f"values shape {values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigError("field contains non-finite values")
        values = values.copy() if values is self.values else values
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __add__(self, other: "RealField") -> "RealField":
        _check_grid(self, other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_grid(self, other)
        return RealField(self.grid, self.values - other.values)

    def __mul__(self, c: float) -> "RealField":
        return RealField(self.grid, c * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier density samples in FFT index order."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ConfigError(f"coeff shape {coeffs.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ConfigError("spectrum contains non-finite values")
        coeffs = coeffs.copy() if coeffs is self.coeffs else coeffs
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.grid, c * self.coeffs)

    __rmul__ = __mul__

    def __getitem__(self, k) -> complex:
        """Coefficient at integer lattice index ``k`` (negative indices allowed)."""
        if np.isscalar(k):
            k = (k,)
        idx = tuple(int(i) % self.grid.n for i in k)
        return self.coeffs[idx]


def _forward_scale(grid: Grid) -> float:
    return (grid.L / (2 * np.pi * grid.n)) ** grid.dim


def _reflect(a: np.ndarray) -> np.ndarray:
    """Return b with b[k] = a[-k] on the periodic index lattice."""
    axes = tuple(range(a.ndim))
    return np.roll(np.flip(a, axis=axes), 1, axis=axes)


def hermitian_defect(coeffs: np.ndarray) -> float:
    """Max |F(k) - conj F(-k)| relative to max |F|."""
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(_reflect(coeffs)))) / scale)


def hermitian_project(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(_reflect(coeffs)))


def dft_forward(f: RealField) -> SpectralField:
    coeffs = _fftn(f.values) * _forward_scale(f.grid)
    return SpectralField(f.grid, coeffs)


def to_physical(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Real part of the inverse transform, no symmetry check (hot loops)."""
    return _ifftn(coeffs).real / _forward_scale(grid)


def to_spectral(values: np.ndarray, grid: Grid) -> np.ndarray:
    return _fftn(values) * _forward_scale(grid)


def dft_inverse(F: SpectralField, tol: float = HERMITIAN_TOL) -> RealField:
    defect = hermitian_defect(F.coeffs)
    if defect > tol:
        raise SymmetryViolation(f"Hermitian defect {defect:.3e} exceeds {tol:.1e}")
    return RealField(F.grid, to_physical(F.coeffs, F.grid))


# -- zero padding ---------------------------------------------------------


def _pad_axis(a: np.ndarray, axis: int, m: int) -> np.ndarray:
    n = a.shape[axis]
    h = n // 2
    shape = list(a.shape)
    shape[axis] = m
    out = np.zeros(shape, dtype=a.dtype)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim

    src[axis], dst[axis] = slice(0, h), slice(0, h)
    out[tuple(dst)] = a[tuple(src)]
    src[axis], dst[axis] = slice(h + 1, n), slice(m - h + 1, m)
    out[tuple(dst)] = a[tuple(src)]
    # the Nyquist entry stands for +h and -h at once: split it evenly
    src[axis] = h
    nyq = 0.5 * a[tuple(src)]
    dst[axis] = h
    out[tuple(dst)] = nyq
    dst[axis] = m - h
    out[tuple(dst)] = nyq
    return out


def _truncate_axis(a: np.ndarray, axis: int, n: int) -> np.ndarray:
    m = a.shape[axis]
    h = n // 2
    shape = list(a.shape)
    shape[axis] = n
    out = np.zeros(shape, dtype=a.dtype)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim

    src[axis], dst[axis] = slice(0, h), slice(0, h)
    out[tuple(dst)] = a[tuple(src)]
    src[axis], dst[axis] = slice(m - h + 1, m), slice(h + 1, n)
    out[tuple(dst)] = a[tuple(src)]
    dst[axis] = h
    src[axis] = h
    top = a[tuple(src)]
    src[axis] = m - h
    out[tuple(dst)] = top + a[tuple(src)]
    return out


def pad_spectrum(coeffs: np.ndarray, m: int) -> np.ndarray:
    out = coeffs
    for ax in range(coeffs.ndim):
        out = _pad_axis(out, ax, m)
    return out


def truncate_spectrum(coeffs: np.ndarray, n: int) -> np.ndarray:
    out = coeffs
    for ax in range(coeffs.ndim):
        out = _truncate_axis(out, ax, n)
    return out


PAD_FACTOR = 2


def _reflect_leading(a: np.ndarray) -> np.ndarray:
    """Index reflection k -> -k on every axis but the last."""
    axes = tuple(range(a.ndim - 1))
    if not axes:
        return a
    return np.roll(np.flip(a, axis=axes), 1, axis=axes)


def _to_fine_real(a: np.ndarray, m: int) -> np.ndarray:
    """Physical values of a Hermitian spectrum zero-padded to m points per axis."""
    half = m // 2 + 1
    padded = a
    for ax in range(a.ndim - 1):
        padded = _pad_axis(padded, ax, m)
    padded = _pad_axis(padded, a.ndim - 1, m)[..., :half]
    return sfft.irfftn(padded, s=(m,) * a.ndim, workers=_workers())


def _from_fine_real(v: np.ndarray, n: int) -> np.ndarray:
    """Full n-point truncated spectrum of real fine-grid values."""
    R = sfft.rfftn(v, workers=_workers())
    for ax in range(v.ndim - 1):
        R = _truncate_axis(R, ax, n)
    h = n // 2
    out = np.empty(R.shape[:-1] + (n,), dtype=complex)
    out[..., :h] = R[..., :h]
    out[..., h + 1:] = np.conj(_reflect_leading(R[..., 1:h]))[..., ::-1]
    nyq = R[..., h]
    out[..., h] = nyq + np.conj(_reflect_leading(nyq[..., None])[..., 0])
    return out


def product3_spectral(a: np.ndarray, b: np.ndarray, c: np.ndarray, grid: Grid,
                      real: bool = True) -> np.ndarray:
    """Alias-free spectrum of the pointwise product of three fields.

    Works on raw coefficient arrays.  ``real=True`` assumes Hermitian input
    and runs on real transforms.
    """
    m = PAD_FACTOR * grid.n
    fine = grid.refined(m)
    if real:
        scale = 1.0 / _forward_scale(fine)
        prod = _to_fine_real(a, m) * _to_fine_real(b, m) * _to_fine_real(c, m) * scale**3
        return _from_fine_real(prod, grid.n) * _forward_scale(fine)
    vals = [_ifftn(pad_spectrum(arr, m)) / _forward_scale(fine) for arr in (a, b, c)]
    prod = vals[0] * vals[1] * vals[2]
    return truncate_spectrum(_fftn(prod) * _forward_scale(fine), grid.n)


def cube_spectral(a: np.ndarray, grid: Grid, real: bool = True) -> np.ndarray:
    m = PAD_FACTOR * grid.n
    fine = grid.refined(m)
    if real:
        v = _to_fine_real(a, m) / _forward_scale(fine)
        return _from_fine_real(v * v * v, grid.n) * _forward_scale(fine)
    v = _ifftn(pad_spectrum(a, m)) / _forward_scale(fine)
    return truncate_spectrum(_fftn(v * v * v) * _forward_scale(fine), grid.n)


def cube_dealiased(f: RealField) -> RealField:
    """u**3 with 2x zero padding, exact on the retained modes."""
    F = to_spectral(f.values, f.grid)
    return RealField(f.grid, to_physical(cube_spectral(F, f.grid), f.grid))


def lp_norm(f: RealField, p: float) -> float:
    return lp_norm_values(f.values, f.grid, p)


def lp_norm_values(values: np.ndarray, grid: Grid, p: float, axes=None) -> float | np.ndarray:
    if not p >= 1:
        raise BadExponent(f"Lebesgue exponent must be >= 1, got {p}")
    a = np.abs(values)
    if axes is None:
        axes = tuple(range(a.ndim))
    if np.isinf(p):
        return np.max(a, axis=axes)
    # rescale by the max to keep |f|^p finite for large p
    scale = np.max(a, axis=axes, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    s = np.sum((a / safe) ** p, axis=axes) * grid.cell_volume
    out = np.squeeze(safe, axis=axes) * s ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def l1_norm_spectral(F: SpectralField) -> float:
    return float(np.sum(np.abs(F.coeffs)) * F.grid.spectral_cell)
