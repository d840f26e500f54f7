"""Uniform periodic Cartesian grids and wavefunctions living on them.

All lengths are in units of the initial oscillator length sqrt(hbar/(m w0)),
with hbar = m = 1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from frictionless_bec.errors import GridMismatch

log = logging.getLogger(__name__)

#: Required sampling density of the initial oscillator length.
MIN_POINTS_PER_LENGTH = 8.0


@dataclass(frozen=True)
class Grid:
    """A d-dimensional box [-L/2, L/2)^d with ``points`` nodes per axis."""

    dimension: int
    points: int
    extent: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.points < 4 or self.points & (self.points - 1):
            raise ValueError(f"points per axis must be a power of two, got {self.points}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")

    @classmethod
    def for_expansion(cls, dimension: int, points: int, b_final: float,
                      cloud_radius: float, safety_factor: float = 4.0) -> Grid:
        """Smallest box with half-width >= safety_factor * b_final * cloud_radius."""
        half = safety_factor * max(b_final, 1.0) * cloud_radius
        grid = cls(dimension, points, 2.0 * half)
        if grid.points_per_length < MIN_POINTS_PER_LENGTH:
            log.warning("grid resolves the oscillator length with %.2f points (< %g)",
                        grid.points_per_length, MIN_POINTS_PER_LENGTH)
        return grid

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def points_per_length(self) -> float:
        return 1.0 / self.spacing

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        x = -0.5 * self.extent + self.spacing * np.arange(self.points)
        x.flags.writeable = False
        return x

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays, ``(x,)`` or ``(x[:, None], y[None, :])``."""
        if self.dimension == 1:
            return (self.axis,)
        return (self.axis[:, None], self.axis[None, :])

    @cached_property
    def r2(self) -> np.ndarray:
        out = sum(c * c for c in self.coords)
        return np.broadcast_to(out, self.shape).copy()

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    @cached_property
    def k2(self) -> np.ndarray:
        k = self.wavenumbers
        if self.dimension == 1:
            return k * k
        return k[:, None] ** 2 + k[None, :] ** 2

    @cached_property
    def edge_mask(self) -> np.ndarray:
        """Outer 5% of the box along any axis."""
        limit = 0.95 * 0.5 * self.extent
        mask = np.zeros(self.shape, dtype=bool)
        for c in self.coords:
            mask |= np.broadcast_to(np.abs(c) > limit, self.shape)
        return mask

    def integrate(self, values) -> float:
        """Trapezoid rule on the periodic uniform grid."""
        return float(np.sum(values).real * self.cell_volume)


def fftn(a):
    return sfft.fftn(a)


def ifftn(a):
    return sfft.ifftn(a)


@dataclass(frozen=True, eq=False)
class Wavefunction:
    """Complex field on a :class:`Grid` (row-major in 2D)."""

    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != self.grid.shape:
            raise ValueError(f"amplitude shape {amps.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        """Squared L2 norm."""
        return self.grid.integrate(self.density)

    def normalized(self) -> Wavefunction:
        return Wavefunction(self.grid, self.amplitudes / math.sqrt(self.norm()))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.amplitudes)))

    def inner(self, other: Wavefunction) -> complex:
        """<self|other> by trapezoid quadrature."""
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")
        return complex(np.sum(np.conj(self.amplitudes) * other.amplitudes) * self.grid.cell_volume)

    def l2_distance(self, other: Wavefunction) -> float:
        if other.grid != self.grid:
            raise GridMismatch(f"{self.grid} vs {other.grid}")
        return math.sqrt(self.grid.integrate(np.abs(self.amplitudes - other.amplitudes) ** 2))

    def moments(self) -> tuple[np.ndarray, float]:
        """Mean position vector and <r^2> of the density."""
        rho = self.density
        n = self.grid.integrate(rho)
        mean = np.array([self.grid.integrate(rho * c) for c in self.grid.coords]) / n
        return mean, self.grid.integrate(rho * self.grid.r2) / n

    def width(self) -> float:
        """Spatial standard deviation sqrt(<r^2> - <r>^2)."""
        mean, r2 = self.moments()
        return math.sqrt(r2 - float(mean @ mean))

    def kinetic_energy(self) -> float:
        """<-1/2 Laplacian> by spectral differentiation."""
        spec = fftn(self.amplitudes)
        total = np.sum(self.grid.k2 * np.abs(spec) ** 2) / spec.size
        return 0.5 * float(total) * self.grid.cell_volume

    def copy(self) -> Wavefunction:
        return Wavefunction(self.grid, self.amplitudes.copy())


def gaussian(grid: Grid, omega: float = 1.0) -> Wavefunction:
    """Normalized harmonic-oscillator ground state for trap frequency ``omega``."""
    psi = np.exp(-0.5 * omega * grid.r2).astype(complex)
    return Wavefunction(grid, psi).normalized()
