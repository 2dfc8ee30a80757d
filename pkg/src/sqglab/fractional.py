"""
Fractional Laplacian, dissipative semigroup and composition commutators.

|D|^alpha is available in its spectral form (multiplier |k|^alpha) and, for
0 < alpha < 1, as the singular integral

    C_alpha * sum_{y != 0} (u(x) - u(x - y)) |y|^{-d-alpha} h^d

over the lattice of shifts with the periodic distance. The shift sum is a
circular convolution and is evaluated with FFTs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from loguru import logger
from scipy import fft as sfft
from scipy.special import gamma

from .dyadic import BesovSpec, DyadicFamily, besov_norm, build_family, cutoff
from .errors import ConfigurationError, DomainError, UndefinedRatioError
from .maps import MeasurePreservingMap, compose_with_map
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    apply_multiplier,
    forward,
    frac_power,
    inverse,
    lp_norm,
    to_physical,
)


@dataclass(frozen=True)
class SemigroupSpec:
    alpha: float
    t: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 2.0:
            raise ConfigurationError(f"semigroup order must lie in [0, 2], got {self.alpha}")
        if self.t < 0:
            raise ConfigurationError(f"semigroup time must be nonnegative, got {self.t}")


def frac_laplacian_spectral(u: SpectralField, alpha: float) -> SpectralField:
    return apply_multiplier(u, frac_power(alpha))


@lru_cache(maxsize=16)
def _kernel_hat(grid: Grid, alpha: float) -> tuple[np.ndarray, float]:
    n, h = grid.n, grid.spacing
    shifts = np.arange(n)
    dist1 = np.minimum(shifts, n - shifts) * h
    if grid.d == 1:
        dist = dist1
    else:
        dist = np.sqrt(dist1[:, None] ** 2 + dist1[None, :] ** 2)
    kernel = np.zeros(grid.shape)
    nz = dist > 0
    kernel[nz] = dist[nz] ** (-grid.d - alpha)
    khat = sfft.fftn(kernel)
    khat.setflags(write=False)
    return khat, float(kernel.sum())


def frac_laplacian_singular_integral(u: PhysicalField, alpha: float, c_alpha: float) -> PhysicalField:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"singular-integral form needs 0 < alpha < 1, got {alpha}")
    grid = u.grid
    khat, ksum = _kernel_hat(grid, float(alpha))
    conv = np.real(sfft.ifftn(khat * sfft.fftn(u.values)))
    return PhysicalField(grid, c_alpha * grid.cell_volume * (u.values * ksum - conv))


def analytic_c_alpha(d: int, alpha: float) -> float:
    """Whole-space constant 2^a Gamma((d+a)/2) / (pi^{d/2} |Gamma(-a/2)|)."""
    return float(2.0 ** alpha * gamma((d + alpha) / 2.0) / (math.pi ** (d / 2.0) * abs(gamma(-alpha / 2.0))))


@dataclass(frozen=True)
class Calibration:
    alpha: float
    c_alpha: float
    analytic: float
    fit_residual: float

    def discrepancy(self, u: SpectralField) -> float:
        """Relative L^2 gap between the calibrated quadrature and the spectral operator."""
        oracle = inverse(frac_laplacian_spectral(u, self.alpha))
        quad = frac_laplacian_singular_integral(inverse(u), self.alpha, self.c_alpha)
        base = lp_norm(oracle, 2)
        if base == 0:
            raise UndefinedRatioError("spectral oracle vanishes")
        return lp_norm(quad.values - oracle.values, 2, u.grid) / base


def calibrate_c_alpha(fields: Sequence[SpectralField], alpha: float) -> Calibration:
    """Least-squares C_alpha matching the quadrature to the spectral operator."""
    if not fields:
        raise ConfigurationError("calibration needs at least one field")
    num = den = 0.0
    pairs = []
    for u in fields:
        oracle = inverse(frac_laplacian_spectral(u, alpha)).values
        quad = frac_laplacian_singular_integral(inverse(u), alpha, 1.0).values
        num += float(np.sum(oracle * quad))
        den += float(np.sum(quad * quad))
        pairs.append((oracle, quad))
    if den == 0:
        raise UndefinedRatioError("quadrature vanishes on every calibration field")
    c = num / den
    resid = math.sqrt(sum(float(np.sum((o - c * q) ** 2)) for o, q in pairs) / sum(float(np.sum(o * o)) for o, _ in pairs))
    d = fields[0].grid.d
    cal = Calibration(alpha=alpha, c_alpha=c, analytic=analytic_c_alpha(d, alpha), fit_residual=resid)
    logger.debug(f"C_alpha calibration alpha={alpha}: fitted {c:.6g}, analytic {cal.analytic:.6g}")
    return cal


def _symbol(grid: Grid, alpha: float) -> np.ndarray:
    km = grid.kmag
    return np.where(km > 0, km, 0.0) ** alpha if alpha > 0 else np.where(km > 0, 1.0, 0.0)


def semigroup_spectral(u: SpectralField, spec: SemigroupSpec) -> SpectralField:
    """e^{-t |D|^alpha}, the dissipative semigroup."""
    return SpectralField(u.grid, np.exp(-spec.t * _symbol(u.grid, spec.alpha)) * u.coeffs)


@dataclass(frozen=True)
class DecayFit:
    q: int
    C: float
    c: float
    rate: float


def semigroup_decay_fit(block: SpectralField, alpha: float, q: int, times: Sequence[float]) -> DecayFit:
    """Fit ||e^{-t|D|^a} u||_inf / ||u||_inf ~ C exp(-c t 2^{qa}) by least squares in log."""
    base = lp_norm(to_physical(block.coeffs, block.grid), math.inf, block.grid)
    if base == 0:
        raise UndefinedRatioError(f"block q={q} is zero")
    ts = np.asarray(times, dtype=np.float64)
    sym = _symbol(block.grid, alpha)
    shape = (-1,) + (1,) * block.grid.d
    stack = np.exp(-ts.reshape(shape) * sym[None]) * block.coeffs[None]
    ratios = np.atleast_1d(lp_norm(to_physical(stack, block.grid), math.inf, block.grid)) / base
    scale = 2.0 ** (q * alpha)
    slope, intercept = np.polyfit(ts * scale, np.log(ratios), 1)
    return DecayFit(q=q, C=float(math.exp(intercept)), c=float(-slope), rate=float(-slope * scale))


def _ring_cutoff(r: np.ndarray) -> np.ndarray:
    # 1 on [1, 8/3] (the support of phi), 0 outside [3/4, 10/3]
    return cutoff(r, 8.0 / 3.0, 10.0 / 3.0) - cutoff(r, 0.75, 1.0)


def semigroup_kernel_l1(
    spec: SemigroupSpec, q: int, fam: DyadicFamily, aux_n: int = 256, aux_length: float = 16.0 * math.pi
) -> float:
    """||h_lambda(t, .)||_{L^1} for lambda = 2^q on an auxiliary box.

    h is the inverse transform of ring_cutoff(xi) exp(-t lambda^a |xi|^a); with
    the continuous transform discretised on the auxiliary lattice the L^1
    quadrature reduces to sum |ifftn(symbol)|.
    """
    aux = Grid(aux_n, aux_length, fam.grid.d)
    if math.pi * aux_n / aux_length <= 10.0 / 3.0:
        raise ConfigurationError("auxiliary grid does not resolve the ring cutoff")
    km = aux.kmag
    lam = 2.0 ** q
    sym = _ring_cutoff(km) * np.exp(-spec.t * lam ** spec.alpha * km ** spec.alpha)
    return float(np.sum(np.abs(sfft.ifftn(sym))))


def compose_spectral(u: SpectralField, psi: MeasurePreservingMap) -> SpectralField:
    if psi.kind == "identity":
        return SpectralField(u.grid, u.coeffs.copy())
    return forward(compose_with_map(inverse(u), psi))


def commutator_frac_composition(
    u: PhysicalField,
    psi: MeasurePreservingMap,
    alpha: float,
    p: float = 2.0,
    fam: DyadicFamily | None = None,
) -> tuple[float, float]:
    """lhs = || |D|^a (u o psi) - (|D|^a u) o psi ||_{L^p} and the bound with C = 1."""
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"commutator estimate needs 0 <= alpha < 1, got {alpha}")
    grid = u.grid
    fam = fam or build_family(grid)
    m = frac_power(alpha)
    first = inverse(apply_multiplier(forward(compose_with_map(u, psi)), m))
    second = compose_with_map(inverse(apply_multiplier(forward(u), m)), psi)
    lhs = lp_norm(first.values - second.values, p, grid)
    d = grid.d
    lf, li = psi.lip_forward, psi.lip_inverse
    factor = max(abs(1.0 - li ** (d + alpha)), abs(1.0 - lf ** (-d - alpha))) * lf ** alpha
    bound = factor * besov_norm(forward(u).without_mean(), BesovSpec(alpha, p, 1.0), fam)
    return float(lhs), float(bound)


def vishik_block_transfer(
    f: SpectralField, psi: MeasurePreservingMap, j: int, q: int, fam: DyadicFamily, p: float = 2.0
) -> float:
    """||Delta_j((Delta_q f) o psi)||_{L^p}."""
    block = SpectralField(f.grid, fam.block_symbol(q) * f.coeffs)
    moved = compose_spectral(block, psi)
    return float(lp_norm(to_physical(fam.block_symbol(j) * moved.coeffs, f.grid), p, f.grid))


def vishik_reference(
    f: SpectralField, psi: MeasurePreservingMap, j: int, q: int, fam: DyadicFamily, p: float = 2.0
) -> float:
    """2^{-|j-q|} ||grad psi^{eps}||_inf ||Delta_q f||_{L^p}, eps = sign(j - q)."""
    lip = psi.lip_forward if j > q else psi.lip_inverse if j < q else 1.0
    block = to_physical(fam.block_symbol(q) * f.coeffs, f.grid)
    return float(2.0 ** (-abs(j - q)) * lip * lp_norm(block, p, f.grid))
