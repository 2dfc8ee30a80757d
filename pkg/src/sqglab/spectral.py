"""
Core spectral infrastructure on the periodic box [0, L)^d.

- Grid: points per axis, box side and dimension, with cached wavenumber lattice
- PhysicalField / SpectralField: the two representations of a scalar field
- Multiplier: Fourier multipliers (|D|^a, |D|^-1, Riesz transforms, derivatives)
- forward / inverse: full complex FFT normalised by n^d, so coeff(k) is the
  mean of u * exp(-i k.x); forward snaps a round-off mean to exactly zero
- riesz_velocity, rescale, dealias, gradient and the grid-quadrature L^p norm

Axis 0 carries the first coordinate x, axis 1 the second coordinate y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from loguru import logger
from scipy import fft as sfft

from .errors import ConfigurationError, DomainError, UnsupportedScaleError

Wavenumbers = tuple[np.ndarray, ...]

# a zero mode below this fraction of the largest coefficient is transform round-off
MEAN_ROUNDOFF = 1e-12


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@lru_cache(maxsize=32)
def _lattice(n: int, length: float, d: int) -> dict[str, object]:
    idx1 = np.rint(sfft.fftfreq(n, d=1.0 / n)).astype(np.int64)
    k1 = idx1 * (2.0 * np.pi / length)
    idx = tuple(np.meshgrid(*([idx1] * d), indexing="ij"))
    ks = tuple(np.meshgrid(*([k1] * d), indexing="ij"))
    kmag = np.sqrt(sum(k * k for k in ks))
    # 2/3 rule on lattice indices; n is a power of two so n/3 is never attained
    keep = np.ones((n,) * d, dtype=bool)
    for i in idx:
        keep &= np.abs(i) < n / 3.0
    out = {"idx": idx, "k": ks, "kmag": kmag, "dealias": keep}
    for arr in (*idx, *ks, kmag, keep):
        arr.setflags(write=False)
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with n points per axis on a box of side `length`."""

    n: int
    length: float = 2.0 * math.pi
    d: int = 2

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)) or self.n < 16:
            raise ConfigurationError(f"grid size must be a power of two >= 16, got n={self.n}")
        if not self.length > 0:
            raise ConfigurationError(f"box length must be positive, got {self.length}")
        if self.d not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got d={self.d}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.d

    @property
    def size(self) -> int:
        return self.n ** self.d

    @property
    def indices(self) -> tuple[np.ndarray, ...]:
        """Integer lattice indices per axis, in FFT order (-n/2 <= i < n/2)."""
        return _lattice(self.n, float(self.length), self.d)["idx"]  # type: ignore[return-value]

    @property
    def wavenumbers(self) -> Wavenumbers:
        return _lattice(self.n, float(self.length), self.d)["k"]  # type: ignore[return-value]

    @property
    def kmag(self) -> np.ndarray:
        return _lattice(self.n, float(self.length), self.d)["kmag"]  # type: ignore[return-value]

    @property
    def dealias_mask(self) -> np.ndarray:
        return _lattice(self.n, float(self.length), self.d)["dealias"]  # type: ignore[return-value]

    @property
    def k_min(self) -> float:
        """Smallest nonzero lattice wavenumber modulus."""
        return 2.0 * math.pi / self.length

    @property
    def k_max(self) -> float:
        return float(self.kmag.max())

    def coordinates(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([x] * self.d), indexing="ij"))


@dataclass(frozen=True)
class PhysicalField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ConfigurationError(f"values of shape {vals.shape} do not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("physical field contains NaN or Inf")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "PhysicalField":
        return cls(grid, np.broadcast_to(fn(*grid.coordinates()), grid.shape).astype(np.float64))

    @classmethod
    def zeros(cls, grid: Grid) -> "PhysicalField":
        return cls(grid, np.zeros(grid.shape))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients on the full lattice (FFT ordering)."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.grid.shape:
            raise ConfigurationError(f"coefficients of shape {c.shape} do not match grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[(0,) * self.grid.d])

    @property
    def mean_zero(self) -> bool:
        return self.mean == 0

    def without_mean(self) -> "SpectralField":
        c = self.coeffs.copy()
        c[(0,) * self.grid.d] = 0.0
        return SpectralField(self.grid, c)

    def _check(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ConfigurationError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def l2_norm(self) -> float:
        """Parseval: ||u||_{L^2} = L^{d/2} * sqrt(sum |coeff|^2)."""
        return float(self.grid.length ** (self.grid.d / 2) * np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))


@dataclass(frozen=True)
class Multiplier:
    """A Fourier multiplier.

    `symbol` maps the tuple of wavenumber arrays to the symbol values. A
    mean-zero-only multiplier has its symbol at k = 0 replaced by 0 and refuses
    fields with a nonzero mean.
    """

    symbol: Callable[[Wavenumbers], np.ndarray]
    name: str
    mean_zero_only: bool = False

    def values(self, grid: Grid) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(self.symbol(grid.wavenumbers), dtype=np.complex128)
        vals = np.broadcast_to(vals, grid.shape).copy()
        if self.mean_zero_only:
            vals[(0,) * grid.d] = 0.0
        elif not np.isfinite(vals[(0,) * grid.d]):
            raise DomainError(f"multiplier {self.name} is singular at k=0 but not declared mean-zero-only")
        return vals


def _kmag(ks: Wavenumbers) -> np.ndarray:
    return np.sqrt(sum(k * k for k in ks))


def frac_power(alpha: float) -> Multiplier:
    """|D|^alpha; the zero mode maps to zero for every alpha."""

    def symbol(ks: Wavenumbers) -> np.ndarray:
        km = _kmag(ks)
        return np.where(km > 0, km ** alpha, 0.0) if alpha >= 0 else np.where(km > 0, km, 1.0) ** alpha

    return Multiplier(symbol, f"|D|^{alpha:g}", mean_zero_only=alpha < 0)


def inverse_abs() -> Multiplier:
    return Multiplier(lambda ks: 1.0 / _kmag(ks), "|D|^-1", mean_zero_only=True)


def riesz(j: int) -> Multiplier:
    """R_j with symbol i k_j / |k| (j is 1-based)."""
    return Multiplier(lambda ks: 1j * ks[j - 1] / _kmag(ks), f"R_{j}", mean_zero_only=True)


def partial(j: int) -> Multiplier:
    return Multiplier(lambda ks: 1j * ks[j - 1], f"d_{j}")


def forward(u: PhysicalField) -> SpectralField:
    g = u.grid
    if not _is_power_of_two(g.n):
        raise ConfigurationError(f"grid size must be a power of two, got n={g.n}")
    coeffs = sfft.fftn(u.values) / g.size
    zero = (0,) * g.d
    if abs(coeffs[zero]) <= MEAN_ROUNDOFF * float(np.abs(coeffs).max()):
        coeffs[zero] = 0.0
    return SpectralField(g, coeffs)


def inverse(u: SpectralField) -> PhysicalField:
    return PhysicalField(u.grid, to_physical(u.coeffs, u.grid))


def to_physical(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Real part of the inverse transform, batched over leading axes."""
    axes = tuple(range(-grid.d, 0))
    return np.real(sfft.ifftn(coeffs, axes=axes)) * grid.size


def to_spectral(values: np.ndarray, grid: Grid) -> np.ndarray:
    axes = tuple(range(-grid.d, 0))
    return sfft.fftn(values, axes=axes) / grid.size


def apply_multiplier(u: SpectralField, m: Multiplier) -> SpectralField:
    if m.mean_zero_only and not u.mean_zero:
        raise DomainError(f"{m.name} is only defined on mean-zero fields (coeff(0) = {u.mean!r})")
    return SpectralField(u.grid, m.values(u.grid) * u.coeffs)


def riesz_velocity(theta: SpectralField) -> tuple[SpectralField, SpectralField]:
    """v = (-R_2 theta, R_1 theta); requires a mean-zero theta in d = 2."""
    if theta.grid.d != 2:
        raise ConfigurationError("riesz_velocity requires d = 2")
    if not theta.mean_zero:
        raise DomainError(f"riesz_velocity needs a mean-zero field (coeff(0) = {theta.mean!r})")
    v1 = -apply_multiplier(theta, riesz(2))
    v2 = apply_multiplier(theta, riesz(1))
    return v1, v2


def gradient(u: SpectralField) -> tuple[SpectralField, ...]:
    return tuple(apply_multiplier(u, partial(j)) for j in range(1, u.grid.d + 1))


def divergence(v: tuple[SpectralField, ...]) -> SpectralField:
    out = apply_multiplier(v[0], partial(1))
    for j, vj in enumerate(v[1:], start=2):
        out = out + apply_multiplier(vj, partial(j))
    return out


def dealias(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, np.where(u.grid.dealias_mask, u.coeffs, 0.0))


def lp_norm(values: np.ndarray | PhysicalField, p: float, grid: Grid | None = None) -> float:
    """Grid-quadrature L^p norm with uniform weights (L/n)^d; L^inf is the grid max.

    Leading axes of `values` beyond the grid dimension are reduced separately
    when an ndarray is passed together with its grid.
    """
    if isinstance(values, PhysicalField):
        grid, arr = values.grid, values.values
    else:
        if grid is None:
            raise ConfigurationError("lp_norm on a bare array needs the grid")
        arr = np.asarray(values)
    axes = tuple(range(arr.ndim - grid.d, arr.ndim))
    a = np.abs(arr)
    if math.isinf(p):
        out = a.max(axis=axes)
    elif p == 1:
        out = a.sum(axis=axes) * grid.cell_volume
    elif p == 2:
        out = np.sqrt((a * a).sum(axis=axes) * grid.cell_volume)
    else:
        out = ((a ** p).sum(axis=axes) * grid.cell_volume) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def velocity_gradient_sup(v1: SpectralField, v2: SpectralField) -> float:
    """sup over the grid of the operator 2-norm of the velocity Jacobian."""
    grid = v1.grid
    parts = np.stack([c.coeffs for c in (*gradient(v1), *gradient(v2))])
    a, b, c, d = to_physical(parts, grid)
    s = a * a + b * b + c * c + d * d
    det = a * d - b * c
    sigma2 = 0.5 * (s + np.sqrt(np.maximum(s * s - 4.0 * det * det, 0.0)))
    return float(np.sqrt(sigma2.max()))


def rescale(theta: PhysicalField, lam: float, alpha: float) -> PhysicalField:
    """x -> lam^(alpha-1) theta(lam x) on the same periodic grid.

    lam must be a power of two. Upward scaling needs every active mode to stay
    below the Nyquist index after multiplication; downward scaling needs every
    active mode index to be divisible by 1/lam.
    """
    if not lam > 0:
        raise UnsupportedScaleError(f"scale must be positive, got {lam}")
    j = math.log2(lam)
    if abs(j - round(j)) > 1e-12:
        raise UnsupportedScaleError(f"scale must be a power of two, got {lam}")
    j = int(round(j))
    if j == 0:
        return PhysicalField(theta.grid, theta.values.copy())
    grid = theta.grid
    c = forward(theta).coeffs
    scale = lam ** (alpha - 1.0)
    cmax = np.abs(c).max()
    active = np.abs(c) > 1e-13 * cmax if cmax > 0 else np.zeros(grid.shape, dtype=bool)
    dropped = float(np.sqrt(np.sum(np.abs(c[~active]) ** 2)))
    if dropped > 0:
        logger.debug(f"rescale by {lam:g} drops {int((~active).sum())} modes below 1e-13 x max, l2 mass {dropped:.3e}")
    idx = [i[active] for i in grid.indices]
    if j > 0:
        factor = 2 ** j
        if any(np.any(np.abs(i) * factor >= grid.n // 2) for i in idx):
            raise UnsupportedScaleError(f"scale {lam} pushes active modes past the Nyquist index on n={grid.n}")
        target = tuple((i * factor) % grid.n for i in idx)
    else:
        factor = 2 ** (-j)
        if any(np.any(i % factor != 0) for i in idx):
            raise UnsupportedScaleError(f"scale {lam} needs every active mode index divisible by {factor}")
        target = tuple((i // factor) % grid.n for i in idx)
    out = np.zeros(grid.shape, dtype=np.complex128)
    out[target] = c[active] * scale
    return inverse(SpectralField(grid, out))
