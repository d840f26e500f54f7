"""Closed-form propagating mode transported by the scaling transformation.

For a designed b(t) the condensate evolves as

    psi(r, t) = b**(-d/2) exp(i b' r**2 / (2 b)) exp(-i mu tau(t)) Psi(r / b, 0),

where Psi(., 0) is the stationary state of the initial trap with chemical
potential mu and tau is the regime's scaled time. Units: hbar = m = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from frictionless_bec.errors import GridUnderflow, InvalidCoupling
from frictionless_bec.grid import Grid, Wavefunction, fftn
from frictionless_bec.trajectory_design import ScalingTrajectory


@dataclass(frozen=True, eq=False)
class StationaryState:
    """Ground state of the t=0 auxiliary problem."""

    psi0: Wavefunction
    mu: float
    g0: float
    omega: float = 1.0

    @property
    def dimension(self) -> int:
        return self.psi0.grid.dimension

    @property
    def grid(self) -> Grid:
        return self.psi0.grid


def chemical_potential(psi: Wavefunction, omega: float, g: float) -> float:
    """mu = <psi| -Laplacian/2 + omega**2 r**2 / 2 + g |psi|**2 |psi>."""
    grid = psi.grid
    rho = psi.density
    kinetic = psi.kinetic_energy()
    potential = grid.integrate(0.5 * omega ** 2 * grid.r2 * rho)
    interaction = grid.integrate(g * rho * rho)
    return (kinetic + potential + interaction) / grid.integrate(rho)


def thomas_fermi_chemical_potential(omega: float, g: float, dimension: int) -> float:
    """Continuum Thomas-Fermi chemical potential for unit norm."""
    if g <= 0:
        raise InvalidCoupling(f"Thomas-Fermi limit needs g > 0, got {g}")
    if dimension == 1:
        return (3.0 * g * omega / (4.0 * math.sqrt(2.0))) ** (2.0 / 3.0)
    if dimension == 2:
        return omega * math.sqrt(g / math.pi)
    if dimension == 3:
        return 0.5 * (15.0 * g * omega ** 3 / (4.0 * math.pi)) ** 0.4
    raise ValueError(f"unsupported dimension {dimension}")


def thomas_fermi_radius(omega: float, g: float, dimension: int) -> float:
    return math.sqrt(2.0 * thomas_fermi_chemical_potential(omega, g, dimension)) / omega


def _tf_density(grid: Grid, omega: float, g: float, mu: float) -> np.ndarray:
    return np.maximum(mu - 0.5 * omega ** 2 * grid.r2, 0.0) / g


def tf_profile_mu(grid: Grid, omega: float, g: float) -> float:
    """Chemical potential normalizing the inverted parabola on ``grid``."""
    if g <= 0:
        raise InvalidCoupling(f"Thomas-Fermi profile needs g > 0, got {g}")

    def excess(mu):
        return grid.integrate(_tf_density(grid, omega, g, mu)) - 1.0

    hi = thomas_fermi_chemical_potential(omega, g, grid.dimension)
    while excess(hi) < 0:
        hi *= 2.0
    return optimize.bisect(excess, 0.0, hi, xtol=1e-300, rtol=1e-12, maxiter=200)


def tf_profile(grid: Grid, omega: float, g: float) -> Wavefunction:
    """Thomas-Fermi density max((mu - V)/g, 0) with zero phase and unit norm."""
    mu = tf_profile_mu(grid, omega, g)
    psi = np.sqrt(_tf_density(grid, omega, g, mu)).astype(complex)
    return Wavefunction(grid, psi).normalized()


def _fourier_matrix(grid: Grid, points: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of grid samples at ``points``."""
    k = grid.wavenumbers
    shift = points[:, None] - grid.axis[0]
    mat = np.exp(1j * shift * k[None, :])
    if grid.points % 2 == 0:
        nyq = grid.points // 2
        mat[:, nyq] = np.cos(shift[:, 0] * abs(k[nyq]))
    return mat / grid.points


def resample_dilated(psi: Wavefunction, b: float) -> np.ndarray:
    """Band-limited evaluation of psi(r / b) on the nodes of psi's own grid."""
    grid = psi.grid
    rho = grid.axis / b
    outside = np.abs(rho) > 0.5 * grid.extent
    if outside.any():
        dens = psi.density
        if dens[grid.edge_mask].max(initial=0.0) > 1e-12 * dens.max():
            raise GridUnderflow(f"r/b leaves the stored grid (b={b:.6g}) and the state "
                                "has weight at the box edge")
    mat = _fourier_matrix(grid, rho)
    mat[outside, :] = 0.0
    coeffs = fftn(psi.amplitudes)
    if grid.dimension == 1:
        return mat @ coeffs
    return mat @ coeffs @ mat.T


def propagating_mode(state: StationaryState, traj: ScalingTrajectory, t: float) -> Wavefunction:
    """Analytic state at time ``t`` on the lab-frame grid of ``state``.

    ``traj`` must be expressed in units where its omega0 equals the trap
    frequency of ``state``.
    """
    if traj.spec.regime.dimension != state.dimension:
        raise ValueError(f"regime {traj.spec.regime.value} is incompatible with a "
                         f"{state.dimension}D state")
    if not math.isclose(traj.spec.omega0, state.omega, rel_tol=1e-12):
        raise ValueError("trajectory and state use different frequency units")
    b, bdot, _ = (float(v) for v in traj.derivatives(t))
    tau = traj.tau(t)
    grid = state.grid
    d = grid.dimension
    dilated = resample_dilated(state.psi0, b)
    phase = np.exp(1j * bdot * grid.r2 / (2.0 * b) - 1j * state.mu * tau)
    return Wavefunction(grid, b ** (-0.5 * d) * phase * dilated)
