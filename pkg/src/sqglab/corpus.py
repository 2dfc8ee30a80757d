"""Seeded field generators shared by the suites, the CLI and the tests.

All randomness flows through numpy's counter-based Philox bit generator, keyed
by (seed, stream) through a SeedSequence, so corpora do not depend on the
platform or on the order in which suites draw from them.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .dyadic import BesovSpec, DyadicFamily, besov_norm
from .errors import ConfigurationError
from .spectral import Grid, PhysicalField, SpectralField, forward, to_physical


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(stream),))))


def _real_field(grid: Grid, coeffs: np.ndarray) -> SpectralField:
    # real part of the synthesis keeps the spectrum symmetric under k -> -k
    values = to_physical(coeffs, grid)
    return forward(PhysicalField(grid, values)).without_mean()


def _gaussian(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)


def random_field(grid: Grid, rng: np.random.Generator, k_max: float | None = None, slope: float = 2.0) -> SpectralField:
    """Mean-zero smooth field with spectrum ~ |k|^-slope for 0 < |k| <= k_max."""
    km = grid.kmag
    k_max = k_max if k_max is not None else grid.n / 4 * grid.k_min
    mask = (km > 0) & (km <= k_max)
    amp = np.where(mask, np.where(km > 0, km, 1.0) ** (-slope), 0.0)
    return _real_field(grid, amp * _gaussian(grid, rng))


def band_limited_field(grid: Grid, rng: np.random.Generator, k_low: float, k_high: float) -> SpectralField:
    """Flat-spectrum mean-zero field with k_low <= |k| <= k_high."""
    if not 0 < k_low <= k_high:
        raise ConfigurationError(f"bad band [{k_low}, {k_high}]")
    km = grid.kmag
    mask = (km >= k_low) & (km <= k_high)
    return _real_field(grid, np.where(mask, 1.0, 0.0) * _gaussian(grid, rng))


def block_field(grid: Grid, fam: DyadicFamily, rng: np.random.Generator, q: int) -> SpectralField:
    """Random data localised in the ring of block q."""
    base = random_field(grid, rng, k_max=grid.k_max, slope=0.0)
    return SpectralField(grid, fam.block_symbol(q) * base.coeffs)


def small_data_field(
    grid: Grid,
    fam: DyadicFamily,
    rng: np.random.Generator,
    alpha: float,
    target: float,
    k_max: float = 4.0,
) -> SpectralField:
    """Low-mode field rescaled so that ||theta||_{B^{1-alpha}_{inf,1}} = target."""
    theta = random_field(grid, rng, k_max=k_max * grid.k_min, slope=1.0)
    norm = besov_norm(theta, BesovSpec(1.0 - alpha, math.inf, 1.0), fam)
    if norm == 0:
        return theta
    return theta * (target / norm)


def single_mode(grid: Grid, k: tuple[int, ...], amplitude: float = 1.0, kind: str = "sin", phase: float = 0.0) -> PhysicalField:
    """amplitude * sin(k.x + phase) (or cos) with integer lattice k."""
    coords = grid.coordinates()
    arg = sum(ki * c * grid.k_min for ki, c in zip(k, coords)) + phase
    fn: Callable[[np.ndarray], np.ndarray] = np.sin if kind == "sin" else np.cos
    return PhysicalField(grid, amplitude * fn(arg))


def modes_field(grid: Grid, modes: list[dict]) -> PhysicalField:
    """Sum of amplitude * cos(k.x + phase) over {k, amplitude, phase} records."""
    total = np.zeros(grid.shape)
    for mode in modes:
        total += single_mode(grid, tuple(mode["k"]), mode.get("amplitude", 1.0), "cos", mode.get("phase", 0.0)).values
    return PhysicalField(grid, total)


def shear_flow(grid: Grid, amplitude: float, mode: int = 1) -> tuple[SpectralField, SpectralField]:
    """Divergence-free v = (A sin(mode y), 0)."""
    v1 = single_mode(grid, (0, mode), amplitude, "sin")
    return forward(v1), SpectralField.zeros(grid)
