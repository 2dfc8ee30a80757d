"""
Littlewood-Paley toolkit on the periodic lattice.

The low-frequency cutoff chi is a C-infinity radial profile equal to 1 on
r <= 1 and 0 on r >= 4/3, glued with the exp(-1/x) transition. The ring
profile is phi(r) = chi(r/2) - chi(r), supported in [1, 8/3] inside the ring
{3/4 <= r <= 8/3}. Every partition identity then telescopes exactly.

Homogeneous blocks Delta_q = phi(2^-q D) run over q_min..q_max; the
inhomogeneous decomposition uses chi(D) as the q = -1 block and Delta_q for
q >= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from loguru import logger

from .errors import ConfigurationError, DomainError, UndefinedRatioError
from .spectral import (
    Grid,
    PhysicalField,
    SpectralField,
    to_physical,
    to_spectral,
    frac_power,
    apply_multiplier,
    lp_norm,
    riesz,
    velocity_gradient_sup,
)

Mode = Literal["homogeneous", "inhomogeneous"]
HOMOGENEOUS: Mode = "homogeneous"
INHOMOGENEOUS: Mode = "inhomogeneous"

RING_INNER = 3.0 / 4.0
RING_OUTER = 8.0 / 3.0


def _smooth_step(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def cutoff(r: np.ndarray | float, inner: float = 1.0, outer: float = 4.0 / 3.0) -> np.ndarray:
    """Radial C-infinity cutoff: 1 on r <= inner, 0 on r >= outer."""
    r = np.asarray(r, dtype=np.float64)
    a = _smooth_step(outer - r)
    b = _smooth_step(r - inner)
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = a / (a + b)
    return np.where(r <= inner, 1.0, np.where(r >= outer, 0.0, mid))


def chi(r: np.ndarray | float) -> np.ndarray:
    return cutoff(r)


def phi(r: np.ndarray | float) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    return chi(r / 2.0) - chi(r)


@dataclass(frozen=True)
class DyadicFamily:
    """Dyadic partition of unity evaluated on one grid."""

    grid: Grid
    q_min: int
    q_max: int
    phi: Callable[[np.ndarray], np.ndarray] = field(default=phi, repr=False)
    chi: Callable[[np.ndarray], np.ndarray] = field(default=chi, repr=False)
    _blocks: dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)
    _low: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def homogeneous_range(self) -> range:
        return range(self.q_min, self.q_max + 1)

    @property
    def inhomogeneous_range(self) -> range:
        return range(-1, self.q_max + 1)

    def block_symbol(self, q: int) -> np.ndarray:
        """phi(2^-q |k|); for q = -1 in inhomogeneous use `symbol(q, mode)`."""
        if q not in self._blocks:
            self._blocks[q] = self.phi(self.grid.kmag * 2.0 ** (-q))
        return self._blocks[q]

    @property
    def low_symbol(self) -> np.ndarray:
        if self._low is None:
            object.__setattr__(self, "_low", self.chi(self.grid.kmag))
        return self._low  # type: ignore[return-value]

    def symbol(self, q: int, mode: Mode) -> np.ndarray:
        if mode == INHOMOGENEOUS and q == -1:
            return self.low_symbol
        return self.block_symbol(q)

    def block_range(self, mode: Mode) -> range:
        return self.homogeneous_range if mode == HOMOGENEOUS else self.inhomogeneous_range

    def low_pass_symbol(self, level: int) -> np.ndarray:
        """S_level = chi(2^-level D), the inhomogeneous low-pass."""
        return self.chi(self.grid.kmag * 2.0 ** (-level))

    def stacked(self, mode: Mode) -> tuple[list[int], np.ndarray]:
        qs = list(self.block_range(mode))
        return qs, np.stack([self.symbol(q, mode) for q in qs])


def build_family(grid: Grid) -> DyadicFamily:
    q_min = math.floor(math.log2(RING_INNER * grid.k_min)) - 1
    q_max = math.ceil(math.log2(grid.k_max)) + 2
    fam = DyadicFamily(grid=grid, q_min=q_min, q_max=q_max)
    logger.debug(f"dyadic family on n={grid.n}: homogeneous q in [{q_min}, {q_max}]")
    return fam


def _check_mode(mode: str) -> Mode:
    if mode not in (HOMOGENEOUS, INHOMOGENEOUS):
        raise ConfigurationError(f"unknown decomposition mode {mode!r}")
    return mode  # type: ignore[return-value]


@dataclass(frozen=True)
class DyadicDecomposition:
    blocks: dict[int, SpectralField]
    low: SpectralField | None
    mode: Mode
    mean: complex = 0.0

    def reconstruct(self) -> SpectralField:
        grid = next(iter(self.blocks.values())).grid
        total = np.zeros(grid.shape, dtype=np.complex128)
        for b in self.blocks.values():
            total += b.coeffs
        if self.low is not None:
            total += self.low.coeffs
        if self.mode == HOMOGENEOUS:
            total[(0,) * grid.d] += self.mean
        return SpectralField(grid, total)


def decompose(u: SpectralField, fam: DyadicFamily, mode: Mode = HOMOGENEOUS) -> DyadicDecomposition:
    mode = _check_mode(mode)
    if mode == HOMOGENEOUS:
        if not u.mean_zero:
            logger.debug(f"homogeneous decomposition drops the zero mode {u.mean!r}")
        blocks = {q: SpectralField(u.grid, fam.block_symbol(q) * u.coeffs) for q in fam.homogeneous_range}
        return DyadicDecomposition(blocks=blocks, low=None, mode=mode, mean=u.mean)
    blocks = {q: SpectralField(u.grid, fam.block_symbol(q) * u.coeffs) for q in range(0, fam.q_max + 1)}
    low = SpectralField(u.grid, fam.low_symbol * u.coeffs)
    return DyadicDecomposition(blocks=blocks, low=low, mode=mode)


def low_pass(u: SpectralField, level: int, fam: DyadicFamily) -> SpectralField:
    return SpectralField(u.grid, fam.low_pass_symbol(level) * u.coeffs)


def block_fields(u: SpectralField, fam: DyadicFamily, mode: Mode = HOMOGENEOUS) -> tuple[list[int], np.ndarray]:
    """Physical values of every block, stacked along axis 0."""
    qs, symbols = fam.stacked(_check_mode(mode))
    return qs, to_physical(symbols * u.coeffs, u.grid)


def block_lp_norms(
    u: SpectralField,
    fam: DyadicFamily,
    ps: tuple[float, ...] = (1.0, 2.0, math.inf),
    mode: Mode = HOMOGENEOUS,
) -> dict[tuple[int, float], float]:
    qs, vals = block_fields(u, fam, mode)
    out: dict[tuple[int, float], float] = {}
    for p in ps:
        norms = np.atleast_1d(lp_norm(vals, p, u.grid))
        for q, nrm in zip(qs, norms):
            out[(q, p)] = float(nrm)
    return out


@dataclass(frozen=True)
class BesovSpec:
    """Norm descriptor: regularity s, Lebesgue p, summation m, homogeneous flag."""

    s: float
    p: float
    m: float = 1.0
    homogeneous: bool = True

    def __post_init__(self) -> None:
        for name in ("p", "m"):
            val = float(getattr(self, name))
            if not (val >= 1.0):
                raise ConfigurationError(f"Besov exponent {name} must lie in [1, inf], got {val}")
            object.__setattr__(self, name, val)
        object.__setattr__(self, "s", float(self.s))

    @property
    def mode(self) -> Mode:
        return HOMOGENEOUS if self.homogeneous else INHOMOGENEOUS

    def label(self) -> str:
        def fmt(x: float) -> str:
            return "inf" if math.isinf(x) else f"{x:g}"

        kind = "hom" if self.homogeneous else "inhom"
        return f"B({fmt(self.s)},{fmt(self.p)},{fmt(self.m)},{kind})"

    def with_s(self, s: float) -> "BesovSpec":
        return BesovSpec(s, self.p, self.m, self.homogeneous)


def sequence_norm(values: np.ndarray, m: float) -> float:
    values = np.abs(np.asarray(values, dtype=np.float64))
    if values.size == 0:
        return 0.0
    if math.isinf(m):
        return float(values.max())
    if m == 1:
        return float(values.sum())
    return float((values ** m).sum() ** (1.0 / m))


def besov_from_blocks(block_norms: dict[int, float], spec: BesovSpec) -> float:
    qs = sorted(block_norms)
    weighted = np.array([2.0 ** (q * spec.s) * block_norms[q] for q in qs])
    return sequence_norm(weighted, spec.m)


def besov_norm(u: SpectralField, spec: BesovSpec, fam: DyadicFamily) -> float:
    if spec.homogeneous and not u.mean_zero:
        logger.debug("homogeneous Besov norm ignores the zero mode")
    norms = block_lp_norms(u, fam, (spec.p,), spec.mode)
    return besov_from_blocks({q: v for (q, _), v in norms.items()}, spec)


def besov_norm_finite_difference(u: PhysicalField, s: float, p: float, m: float) -> float:
    """Finite-difference Besov norm over every nonzero lattice shift.

    (sum_x ||u(. - x) - u||_p^m |x|^(-s m - d) h^d)^(1/m), |x| the periodic
    distance; m = inf takes sup_x ||u(. - x) - u||_p / |x|^s.
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"finite-difference characterisation needs 0 < s < 1, got s={s}")
    grid = u.grid
    n, h, d = grid.n, grid.spacing, grid.d
    vals = u.values
    shifts = np.arange(n)
    dist1 = np.minimum(shifts, n - shifts) * h
    gather = (np.arange(n)[None, :] - shifts[:, None]) % n

    if d == 1:
        diffs = vals[gather] - vals[None, :]
        norms = np.atleast_1d(lp_norm(diffs, p, grid))
        dist = dist1
    else:
        norms = np.empty((n, n))
        for b in range(n):
            rolled = np.roll(vals, b, axis=1)
            diffs = rolled[gather] - vals[None, :, :]
            norms[:, b] = lp_norm(diffs, p, grid)
        dist = np.sqrt(dist1[:, None] ** 2 + dist1[None, :] ** 2)

    nonzero = dist > 0
    norms, dist = norms[nonzero], dist[nonzero]
    if math.isinf(m):
        return float((norms / dist ** s).max())
    total = np.sum(norms ** m * dist ** (-s * m - d)) * grid.cell_volume
    return float(total ** (1.0 / m))


def _reciprocal(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def _ring_support_ok(u: SpectralField, q: int) -> bool:
    c = np.abs(u.coeffs)
    cmax = c.max()
    if cmax == 0:
        return True
    km = u.grid.kmag
    outside = (km < RING_INNER * 2.0 ** q) | (km > RING_OUTER * 2.0 ** q)
    return bool(np.all(c[outside] <= 1e-13 * cmax))


def bernstein_ratio(
    u: SpectralField,
    q: int,
    k: float,
    a: float,
    b: float,
    fractional: bool = False,
) -> float:
    """||d^k u||_{L^b} / (2^{q(k + d(1/a - 1/b))} ||u||_{L^a}) for ring-q data.

    With `fractional` the derivative is |D|^k; otherwise the sup over all
    multi-indices of order k (k a nonnegative integer).
    """
    if b < a:
        raise DomainError(f"Bernstein ratio needs b >= a, got a={a}, b={b}")
    if not _ring_support_ok(u, q):
        raise DomainError(f"field is not supported in the ring of block q={q}")
    grid = u.grid
    base = lp_norm(to_physical(u.coeffs, grid), a, grid)
    if base == 0:
        raise UndefinedRatioError(f"block q={q} is zero")
    if fractional:
        num = lp_norm(to_physical(apply_multiplier(u.without_mean(), frac_power(k)).coeffs, grid), b, grid)
    else:
        order = int(k)
        if order != k or order < 0:
            raise DomainError(f"integer derivative order expected, got k={k}")
        ks = grid.wavenumbers
        parts = []
        orders = range(order + 1) if grid.d == 2 else [order]
        for i in orders:
            sym = (1j * ks[0]) ** i
            if grid.d == 2:
                sym = sym * (1j * ks[1]) ** (order - i)
            parts.append(sym * u.coeffs)
        num = float(np.max(np.atleast_1d(lp_norm(to_physical(np.stack(parts), grid), b, grid))))
    scale = 2.0 ** (q * (k + grid.d * (_reciprocal(a) - _reciprocal(b))))
    return float(num / (scale * base))


def _spectral(values: np.ndarray, grid: Grid, dealiased: bool = True) -> SpectralField:
    c = to_spectral(values, grid)
    if dealiased:
        c = np.where(grid.dealias_mask, c, 0.0)
    return SpectralField(grid, c)


def bony_decompose(
    u: SpectralField, v: SpectralField, fam: DyadicFamily
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Paraproducts T_u v, T_v u and remainder R(u, v), each dealiased.

    T_u v = sum_q S_{q-1}u Delta_q v with S_{q-1} = sum_{j <= q-2} Delta_j and
    R(u, v) = sum_q sum_{|i| <= 1} Delta_q u Delta_{q+i} v, so the three parts
    add up to the dealiased product of the mean-free parts.
    """
    if not (u.mean_zero and v.mean_zero):
        logger.debug("Bony decomposition works on the mean-free parts")
    grid = u.grid
    _, bu = block_fields(u, fam, HOMOGENEOUS)
    _, bv = block_fields(v, fam, HOMOGENEOUS)
    nq = bu.shape[0]
    zero = np.zeros(grid.shape)

    def low(blocks: np.ndarray) -> np.ndarray:
        # low[i] = sum of blocks[:i-1]
        csum = np.cumsum(blocks, axis=0)
        out = np.empty_like(blocks)
        out[:2] = zero
        out[2:] = csum[: nq - 2]
        return out

    t_uv = np.sum(low(bu) * bv, axis=0)
    t_vu = np.sum(low(bv) * bu, axis=0)
    rem = np.sum(bu * bv, axis=0)
    rem = rem + np.sum(bu[1:] * bv[:-1], axis=0) + np.sum(bu[:-1] * bv[1:], axis=0)
    return _spectral(t_uv, grid), _spectral(t_vu, grid), _spectral(rem, grid)


def dealiased_product(u: SpectralField, v: SpectralField) -> SpectralField:
    grid = u.grid
    pu = to_physical(u.without_mean().coeffs, grid)
    pv = to_physical(v.without_mean().coeffs, grid)
    return _spectral(pu * pv, grid)


def _advect(v: tuple[SpectralField, SpectralField], u_coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    ks = grid.wavenumbers
    parts = np.stack([v[0].coeffs, v[1].coeffs, 1j * ks[0] * u_coeffs, 1j * ks[1] * u_coeffs])
    v1, v2, du1, du2 = to_physical(parts, grid)
    return v1 * du1 + v2 * du2


def transport_commutator_sum(
    v: tuple[SpectralField, SpectralField],
    u: SpectralField,
    s: float,
    p: float,
    fam: DyadicFamily,
) -> tuple[float, float]:
    """sum_q 2^{qs} ||[Delta_q, v.grad] u||_{L^p} and ||grad v||_inf ||u||_{B^s_{p,1}}."""
    grid = u.grid
    full = _spectral(_advect(v, u.coeffs, grid), grid).coeffs
    lhs = 0.0
    for q in fam.homogeneous_range:
        sym = fam.block_symbol(q)
        if not np.any(sym):
            continue
        first = to_physical(np.where(grid.dealias_mask, sym * full, 0.0), grid)
        second = to_physical(_spectral(_advect(v, sym * u.coeffs, grid), grid).coeffs, grid)
        lhs += 2.0 ** (q * s) * lp_norm(first - second, p, grid)
    ref = velocity_gradient_sup(*v) * besov_norm(u, BesovSpec(s, p, 1.0), fam)
    return float(lhs), float(ref)


def product_law_ratio(v: tuple[SpectralField, SpectralField], theta: SpectralField, fam: DyadicFamily) -> tuple[float, float]:
    """||v.grad theta||_{B^0_{inf,1}} against ||v||_{B^0_{inf,1}} ||theta||_{B^1_{inf,1}}."""
    grid = theta.grid
    adv = _spectral(_advect(v, theta.coeffs, grid), grid)
    lhs = besov_norm(adv, BesovSpec(0.0, math.inf, 1.0), fam)
    v_norm = max(besov_norm(vj, BesovSpec(0.0, math.inf, 1.0), fam) for vj in v)
    rhs = v_norm * besov_norm(theta, BesovSpec(1.0, math.inf, 1.0), fam)
    return float(lhs), float(rhs)


def riesz_besov_ratio(theta: SpectralField, spec: BesovSpec, fam: DyadicFamily) -> float:
    """max_j ||R_j theta|| / ||theta|| in the given Besov norm."""
    theta = theta.without_mean()
    base = besov_norm(theta, spec, fam)
    if base == 0:
        raise UndefinedRatioError("zero field")
    return max(besov_norm(apply_multiplier(theta, riesz(j)), spec, fam) for j in (1, 2)) / base
