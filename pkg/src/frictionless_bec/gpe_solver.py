"""Split-step Fourier integration of the 1D / 2D Gross-Pitaevskii equation.

    i d(psi)/dt = [-Laplacian/2 + omega(t)**2 r**2 / 2 + g(t) |psi|**2] psi

in units hbar = m = 1, time in 1/omega0, lengths in oscillator lengths of
the initial trap. Boundaries are periodic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from frictionless_bec.errors import GridOverflow, NoConvergence, NonFinite
from frictionless_bec.grid import Grid, Wavefunction, fftn, gaussian, ifftn
from frictionless_bec.scaling_solution import (
    StationaryState,
    chemical_potential,
    thomas_fermi_chemical_potential,
)

log = logging.getLogger(__name__)

#: Norm fraction allowed in the outer 5% of the box before GridOverflow.
OVERFLOW_FRACTION = 1e-3
#: Longest run of fused steps between overflow / finiteness checks.
MAX_SEGMENT = 500


def max_stable_dt(grid: Grid, omega0: float = 1.0) -> float:
    """Upper bound min(0.05/omega0, 0.1 dx**2) on the real-time step."""
    return min(0.05 / omega0, 0.1 * grid.spacing ** 2)


def constant(value: float) -> Callable[[float], float]:
    return lambda t: value


@dataclass(frozen=True)
class PropagationPlan:
    """Time-dependent coefficients and stepping of a real-time run.

    ``dt`` is an upper bound; the step actually used divides the interval
    ``[t_start, t_end]`` into an integer number of steps.
    """

    omega_sq: Callable[[float], float]
    g: Callable[[float], float]
    dt: float
    t_end: float
    record_every: int = 0
    t_start: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.t_start:
            raise ValueError("t_end precedes t_start")
        if self.record_every < 0:
            raise ValueError("record_every must be >= 0")

    @property
    def steps(self) -> int:
        span = self.t_end - self.t_start
        return max(1, math.ceil(span / self.dt - 1e-9)) if span > 0 else 0

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / self.steps if self.steps else 0.0

    def validate(self, grid: Grid, omega0: float = 1.0) -> None:
        bound = max_stable_dt(grid, omega0)
        if self.step > bound * (1 + 1e-12):
            raise ValueError(f"dt={self.step:.4g} exceeds the stability bound {bound:.4g}")


@dataclass
class PropagationResult:
    final: Wavefunction
    times: list[float] = field(default_factory=list)
    snapshots: list[Wavefunction] = field(default_factory=list)


def _check(psi: np.ndarray, grid: Grid, t: float) -> None:
    if not np.all(np.isfinite(psi)):
        raise NonFinite(f"non-finite amplitudes at t={t:.6g}")
    rho = np.abs(psi) ** 2
    total = rho.sum()
    edge = rho[grid.edge_mask].sum()
    if edge > OVERFLOW_FRACTION * total:
        raise GridOverflow(f"{edge / total:.3g} of the norm sits in the outer 5% of the box "
                           f"at t={t:.6g} (extent {grid.extent:.6g})")


def propagate(psi0: Wavefunction, plan: PropagationPlan, callback=None,
              omega0: float = 1.0) -> PropagationResult:
    """Real-time Strang splitting: half kinetic, potential + nonlinear, half kinetic.

    Potential and coupling are sampled at the midpoint of each step and the
    density is frozen during the position-space sub-step. Consecutive
    kinetic half steps are fused between recorded times.

    Args:
        psi0: Initial state.
        plan: Schedules and stepping.
        callback: Optional ``callback(t, wavefunction)`` invoked at every
            recorded time (including the first and the last).
        omega0: Frequency unit used by the dt bound.
    """
    grid = psi0.grid
    plan.validate(grid, omega0)
    steps, dt, t0 = plan.steps, plan.step, plan.t_start
    half_r2 = 0.5 * grid.r2
    kin_half = np.exp(-0.25j * dt * grid.k2)
    kin_full = kin_half * kin_half
    result = PropagationResult(final=psi0)

    def record(t, amps):
        wf = Wavefunction(grid, amps.copy())
        result.times.append(t)
        result.snapshots.append(wf)
        if callback is not None:
            callback(t, wf)

    factor = np.empty(grid.shape, dtype=complex)
    psi = psi0.amplitudes.copy()
    every = plan.record_every
    if every:
        record(t0, psi)
    n = 0
    while n < steps:
        stop = steps if not every else min(steps, (n // every + 1) * every)
        seg = min(stop - n, MAX_SEGMENT)
        phi = ifftn(kin_half * fftn(psi))
        for j in range(seg):
            tm = t0 + (n + j + 0.5) * dt
            phase = float(plan.omega_sq(tm)) * half_r2 + float(plan.g(tm)) * (phi.real ** 2 + phi.imag ** 2)
            phase *= -dt
            np.cos(phase, out=factor.real)
            np.sin(phase, out=factor.imag)
            phi *= factor
            if j < seg - 1:
                phi = ifftn(kin_full * fftn(phi))
        psi = ifftn(kin_half * fftn(phi))
        n += seg
        t = t0 + n * dt
        _check(psi, grid, t)
        if every and (n % every == 0 or n == steps):
            record(t, psi)
    result.final = Wavefunction(grid, psi)
    return result


def _default_guess(grid: Grid, omega: float, g: float) -> Wavefunction:
    gauss = gaussian(grid, omega)
    if g <= 0:
        return gauss
    mu = thomas_fermi_chemical_potential(omega, g, grid.dimension)
    tf = np.maximum(mu - 0.5 * omega ** 2 * grid.r2, 0.0) / g
    return Wavefunction(grid, np.sqrt(tf + 1e-3 * gauss.density)).normalized()


def _potential_substep(phi, pot, g, h, dv):
    """Exact imaginary-time flow of d(phi)/dtau = -(V + g|phi|^2 - lam) phi over ``h``.

    ``lam`` is the initial expectation of V + g|phi|^2, which keeps the norm
    stationary to first order so the nonlinear term sees a unit-norm density
    throughout the substep. The density obeys a pointwise logistic equation
    with the closed-form solution used here.
    """
    n0 = phi.real ** 2 + phi.imag ** 2
    a = pot + g * n0
    lam = np.sum(a * n0) * dv
    a = pot - lam
    x = 2.0 * a * h
    small = np.abs(x) < 1e-8
    f = np.where(small, 2.0 * h * (1.0 - 0.5 * x), -np.expm1(-x) / np.where(small, 1.0, a))
    return phi * np.sqrt(np.exp(-x) / (1.0 + g * n0 * f))


def _relax(psi, grid, omega, g, h, steps, check_every, tol, budget):
    """Imaginary-time Strang steps of size ``h`` starting from ``psi``.

    Kinetic half steps are fused, so the loop variable is the state just
    before the position-space factor; it is converted back to a full-step
    state on exit. Returns ``(psi, mu, used, converged)``. With ``tol`` set,
    stops once the mean per-step change of mu over ``check_every`` steps
    drops below it.
    """
    pot = 0.5 * omega ** 2 * grid.r2
    kin_half = np.exp(-0.25 * h * grid.k2)
    kin_full = kin_half * kin_half
    dv = grid.cell_volume

    def normalize(a):
        return a / math.sqrt(np.sum(np.abs(a) ** 2) * dv)

    phi = normalize(ifftn(kin_half * fftn(psi)))
    mu_prev = None
    mu = math.nan
    used = 0
    converged = tol is None
    while used < steps:
        if used >= budget:
            converged = False
            break
        phi = _potential_substep(phi, pot, g, h, dv)
        used += 1
        if used == steps:
            break
        phi = normalize(ifftn(kin_full * fftn(phi)))
        if used % check_every == 0:
            if not np.all(np.isfinite(phi)):
                raise NonFinite("non-finite amplitudes during imaginary-time relaxation")
            mu = chemical_potential(Wavefunction(grid, phi), omega, g)
            if tol is not None and mu_prev is not None and abs(mu - mu_prev) / check_every < tol:
                phi = _potential_substep(phi, pot, g, h, dv)
                converged = True
                break
            mu_prev = mu
    else:
        phi = _potential_substep(phi, pot, g, h, dv)
    psi = normalize(ifftn(kin_half * fftn(phi)))
    return psi, mu, used, converged


def ground_state_imaginary_time(grid: Grid, omega: float, g: float, *,
                                guess: Wavefunction | None = None,
                                tol: float = 1e-12, max_steps: int = 10 ** 6,
                                dtau_max: float = 0.05, dtau_min: float = 2e-4,
                                check_every: int = 10) -> StationaryState:
    """Ground state by normalized imaginary-time split-step evolution.

    The step starts at ``dtau_max / omega`` and is halved, one unit of
    1/omega of imaginary time per stage, down to ``dtau_min / omega``; this
    removes the step-size bias of the splitting without a long run at the
    smallest step. The final stage runs until the mean per-step change of mu
    is below ``tol * omega``. The state is renormalized after every step.

    Raises:
        NoConvergence: ``max_steps`` exhausted.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if g < 0:
        raise ValueError(f"g must be >= 0, got {g}")
    start = guess if guess is not None else _default_guess(grid, omega, g)
    psi = start.normalized().amplitudes.astype(complex)
    budget = max_steps

    h = dtau_max / omega
    psi, mu, used, ok = _relax(psi, grid, omega, g, h, budget, check_every, 1e-6 * omega, budget)
    budget -= used
    while ok and h > dtau_min / omega * (1 + 1e-9):
        h = max(0.5 * h, dtau_min / omega)
        span = math.ceil(1.0 / (omega * h))
        psi, mu, used, ok = _relax(psi, grid, omega, g, h, span, check_every, None, budget)
        budget -= used
    if ok:
        psi, mu, used, ok = _relax(psi, grid, omega, g, h, budget, check_every, tol * omega, budget)
        budget -= used
    if not ok:
        raise NoConvergence(f"imaginary-time relaxation did not converge in {max_steps} steps "
                            f"(omega={omega:.6g}, g={g:.6g}, last mu={mu:.12g})")
    state = Wavefunction(grid, psi)
    mu = chemical_potential(state, omega, g)
    log.debug("ground state omega=%g g=%g mu=%.15g after %d steps", omega, g, mu, max_steps - budget)
    return StationaryState(psi0=state, mu=mu, g0=g, omega=omega)


@dataclass(frozen=True)
class Observables:
    norm: float
    r2: float
    energy: float
    mu: float
    kinetic: float
    potential: float
    interaction: float


def observables(psi: Wavefunction, omega: float, g: float) -> Observables:
    """Norm, <r^2>, GP energy and chemical potential (per unit norm)."""
    grid = psi.grid
    rho = psi.density
    norm = grid.integrate(rho)
    kinetic = psi.kinetic_energy() / norm
    potential = grid.integrate(0.5 * omega ** 2 * grid.r2 * rho) / norm
    interaction = 0.5 * g * grid.integrate(rho * rho) / norm
    return Observables(
        norm=norm,
        r2=grid.integrate(grid.r2 * rho) / norm,
        energy=kinetic + potential + interaction,
        mu=kinetic + potential + 2.0 * interaction,
        kinetic=kinetic,
        potential=potential,
        interaction=interaction,
    )
