"""Measure-preserving maps of the periodic box and composition u o psi."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import fft as sfft

from .errors import ConfigurationError, UnsupportedMapError
from .spectral import Grid, PhysicalField

MapKind = Literal["identity", "translation", "rotation", "shear", "composed"]


@dataclass(frozen=True)
class ShearProfile:
    """g(s) = amplitude * sin(2 pi mode s / L + phase)."""

    amplitude: float
    mode: int = 1
    phase: float = 0.0

    def __call__(self, s: np.ndarray, length: float) -> np.ndarray:
        return self.amplitude * np.sin(2.0 * np.pi * self.mode * s / length + self.phase)

    def max_slope(self, length: float) -> float:
        return abs(self.amplitude) * 2.0 * np.pi * abs(self.mode) / length


def _shear_lip(slope: float) -> float:
    # operator norm of [[1, a], [0, 1]]
    return 0.5 * (slope + math.sqrt(slope * slope + 4.0))


@dataclass(frozen=True)
class MeasurePreservingMap:
    kind: MapKind
    vector: tuple[float, ...] = ()
    angle: float = 0.0
    axis: int = 0
    profile: ShearProfile | None = None
    maps: tuple["MeasurePreservingMap", ...] = field(default=())
    length: float = 2.0 * math.pi

    @classmethod
    def identity(cls) -> "MeasurePreservingMap":
        return cls("identity")

    @classmethod
    def translation(cls, vector: tuple[float, ...]) -> "MeasurePreservingMap":
        return cls("translation", vector=tuple(float(v) for v in vector))

    @classmethod
    def rotation(cls, angle: float) -> "MeasurePreservingMap":
        return cls("rotation", angle=float(angle))

    @classmethod
    def shear(
        cls, axis: int, amplitude: float, mode: int = 1, phase: float = 0.0, length: float = 2.0 * math.pi
    ) -> "MeasurePreservingMap":
        """axis=0: (x + g(y), y); axis=1: (x, y + g(x))."""
        if axis not in (0, 1):
            raise ConfigurationError(f"shear axis must be 0 or 1, got {axis}")
        return cls("shear", axis=axis, profile=ShearProfile(amplitude, mode, phase), length=length)

    @classmethod
    def composed(cls, *maps: "MeasurePreservingMap") -> "MeasurePreservingMap":
        """psi = maps[0] o maps[1] o ..., so u o psi applies maps[0] first."""
        return cls("composed", maps=tuple(maps))

    @property
    def quarter_turns(self) -> int:
        turns = self.angle / (0.5 * math.pi)
        if abs(turns - round(turns)) > 1e-12:
            raise UnsupportedMapError(f"rotation by {self.angle} is not a multiple of pi/2")
        return int(round(turns)) % 4

    @property
    def lip_forward(self) -> float:
        """||grad psi||_inf."""
        if self.kind == "shear":
            return _shear_lip(self.profile.max_slope(self.length))  # type: ignore[union-attr]
        if self.kind == "composed":
            return float(np.prod([m.lip_forward for m in self.maps])) if self.maps else 1.0
        return 1.0

    @property
    def lip_inverse(self) -> float:
        """||grad psi^-1||_inf; the inverse shear has the same slope bound."""
        if self.kind == "shear":
            return _shear_lip(self.profile.max_slope(self.length))  # type: ignore[union-attr]
        if self.kind == "composed":
            return float(np.prod([m.lip_inverse for m in self.maps])) if self.maps else 1.0
        return 1.0

    def apply(self, coords: tuple[np.ndarray, ...]) -> tuple[np.ndarray, ...]:
        """psi evaluated pointwise (no periodic wrap)."""
        if self.kind == "identity":
            return coords
        if self.kind == "translation":
            return tuple(c + v for c, v in zip(coords, self.vector))
        if self.kind == "rotation":
            c, s = math.cos(self.angle), math.sin(self.angle)
            x, y = coords
            return (c * x - s * y, s * x + c * y)
        if self.kind == "shear":
            x, y = coords
            g = self.profile
            if self.axis == 0:
                return (x + g(y, self.length), y)  # type: ignore[misc]
            return (x, y + g(x, self.length))  # type: ignore[misc]
        out = coords
        for m in reversed(self.maps):
            out = m.apply(out)
        return out


def _translate(values: np.ndarray, grid: Grid, vector: tuple[float, ...]) -> np.ndarray:
    if len(vector) != grid.d:
        raise ConfigurationError(f"translation vector {vector} does not match d={grid.d}")
    steps = [v / grid.spacing for v in vector]
    if all(abs(s - round(s)) < 1e-12 for s in steps):
        # u(x + a) at index i is u[i + s]
        return np.roll(values, tuple(-int(round(s)) for s in steps), axis=tuple(range(grid.d)))
    phase = sum(k * v for k, v in zip(grid.wavenumbers, vector))
    return np.real(sfft.ifftn(sfft.fftn(values) * np.exp(1j * phase)))


def _rotate(values: np.ndarray, grid: Grid, turns: int) -> np.ndarray:
    if grid.d != 2:
        raise UnsupportedMapError("rotations need d = 2")
    n = grid.n
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    src = {
        0: (i, j),
        1: ((-j) % n, i),
        2: ((-i) % n, (-j) % n),
        3: (j, (-i) % n),
    }[turns]
    return values[src]


def _shear(values: np.ndarray, grid: Grid, axis: int, profile: ShearProfile) -> np.ndarray:
    if grid.d != 2:
        raise UnsupportedMapError("shears need d = 2")
    s = np.arange(grid.n) * grid.spacing
    g = profile(s, grid.length)
    k = grid.wavenumbers[axis][:, 0] if axis == 0 else grid.wavenumbers[axis][0, :]
    spec = sfft.fft(values, axis=axis)
    if axis == 0:
        phase = np.exp(1j * k[:, None] * g[None, :])
    else:
        phase = np.exp(1j * g[:, None] * k[None, :])
    return np.real(sfft.ifft(spec * phase, axis=axis))


def _compose(values: np.ndarray, grid: Grid, psi: MeasurePreservingMap) -> np.ndarray:
    if psi.kind == "identity":
        return values.copy()
    if psi.kind == "translation":
        return _translate(values, grid, psi.vector)
    if psi.kind == "rotation":
        return _rotate(values, grid, psi.quarter_turns)
    if psi.kind == "shear":
        if not math.isclose(psi.length, grid.length):
            raise ConfigurationError("shear profile period does not match the box length")
        return _shear(values, grid, psi.axis, psi.profile)  # type: ignore[arg-type]
    out = values
    for m in psi.maps:
        out = _compose(out, grid, m)
    return out


def compose_with_map(u: PhysicalField, psi: MeasurePreservingMap) -> PhysicalField:
    """Samples u(psi(x)) by Fourier interpolation; shears use per-row 1D transforms."""
    return PhysicalField(u.grid, _compose(u.values, u.grid, psi))


def jacobian_determinant(psi: MeasurePreservingMap, grid: Grid) -> np.ndarray:
    """det grad psi on the grid by central differences of psi itself."""
    if grid.d != 2:
        raise UnsupportedMapError("Jacobian check needs d = 2")
    x, y = grid.coordinates()
    h = grid.spacing
    xp, xm = psi.apply((x + h, y)), psi.apply((x - h, y))
    yp, ym = psi.apply((x, y + h)), psi.apply((x, y - h))
    a = (xp[0] - xm[0]) / (2.0 * h)
    b = (yp[0] - ym[0]) / (2.0 * h)
    c = (xp[1] - xm[1]) / (2.0 * h)
    e = (yp[1] - ym[1]) / (2.0 * h)
    return a * e - b * c
