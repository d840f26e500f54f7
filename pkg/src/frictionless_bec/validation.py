"""Design -> simulate -> compare loop and its report.

A designed ramp is judged by propagating the initial ground state with the
split-step solver and comparing the result with (a) the independently
computed ground state of the final trap and (b) the closed-form propagating
mode. A linear frequency ramp of the same duration serves as the baseline.

Fidelity thresholds used by the tests (0.99 / 0.999 / 0.9999) are acceptance
choices of this package.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from frictionless_bec._io import key_value_text
from frictionless_bec.errors import GridMismatch
from frictionless_bec.gpe_solver import (
    PropagationPlan,
    PropagationResult,
    constant,
    ground_state_imaginary_time,
    max_stable_dt,
    propagate,
)
from frictionless_bec.grid import Grid, Wavefunction
from frictionless_bec.scaling_solution import (
    StationaryState,
    chemical_potential,
    propagating_mode,
    thomas_fermi_radius,
)
from frictionless_bec.trajectory_design import (
    DesignSpec,
    ScalingTrajectory,
    coupling_schedule,
    design,
    expulsive_intervals,
    omega_squared,
    sample_frequency_trajectory,
)

log = logging.getLogger(__name__)

DEFAULT_STEPS = 20_000
DEFAULT_RECORDS = 50


def fidelity(psi_a: Wavefunction, psi_b: Wavefunction) -> float:
    """|<a|b>|^2 / (<a|a><b|b>), insensitive to global phase and normalization."""
    if psi_a.grid != psi_b.grid:
        raise GridMismatch(f"{psi_a.grid} vs {psi_b.grid}")
    overlap = psi_a.inner(psi_b)
    value = abs(overlap) ** 2 / (psi_a.norm() * psi_b.norm())
    return min(1.0, max(0.0, value))


def cloud_radius(g: float, dimension: int, omega: float = 1.0) -> float:
    """Radius used to size the box: Thomas-Fermi radius, at least 1.5 oscillator lengths."""
    floor = 1.5 / math.sqrt(omega)
    if g <= 0:
        return floor
    return max(thomas_fermi_radius(omega, g, dimension), floor)


def default_grid(spec: DesignSpec, g_tilde: float, points: int,
                 safety_factor: float = 4.0) -> Grid:
    """Lab-frame box large enough for the expanded cloud."""
    d = spec.regime.dimension
    if d == 3:
        raise ValueError("3D regimes are design-only; no 3D propagation is provided")
    traj_g0 = g_tilde  # g(0) = g0 in every regime
    return Grid.for_expansion(d, points, spec.b_final, cloud_radius(traj_g0, d), safety_factor)


def linear_ramp(omega0: float, omega_f: float, t_f: float) -> Callable[[float], float]:
    """omega(t) = omega0 + (omega_f - omega0) t / t_f, returned as omega**2."""
    def omega_sq(t):
        w = omega0 + (omega_f - omega0) * min(max(t, 0.0), t_f) / t_f
        return w * w
    return omega_sq


@dataclass
class FrictionlessRun:
    """Everything a hold phase needs to continue a completed check."""

    spec: DesignSpec  # dimensionless
    trajectory: ScalingTrajectory
    grid: Grid
    initial: StationaryState
    target: StationaryState
    g_final: float
    designed: PropagationResult
    baseline: PropagationResult | None
    prediction: Wavefunction


@dataclass
class ValidationReport:
    spec: DesignSpec
    g_tilde: float
    fidelity_to_target: float
    fidelity_to_scaling_law: float
    baseline_fidelity: float
    scaling_law_l2: float
    width_tracking_error: float
    ermakov_residual_max: float
    boundary_residuals: dict
    expulsive_intervals: list
    min_omega_sq: float
    grid: Grid
    steps: int
    dt: float
    wall_clock: float
    run: FrictionlessRun | None = field(default=None, repr=False)
    extras: dict = field(default_factory=dict)

    def items(self):
        s = self.spec
        yield "omega0_rad_s", s.omega0
        yield "omegaf_rad_s", s.omega_f
        yield "tf_s", s.t_f
        yield "regime", s.regime
        yield "ansatz", s.ansatz
        yield "samples", s.samples
        yield "nu", s.nu
        yield "b_final", s.b_final
        yield "g_tilde", self.g_tilde
        yield "grid_dimension", self.grid.dimension
        yield "grid_points", self.grid.points
        yield "grid_extent_osc_lengths", self.grid.extent
        yield "steps", self.steps
        yield "dt_s", self.dt
        yield "fidelity_to_target", self.fidelity_to_target
        yield "fidelity_to_scaling_law", self.fidelity_to_scaling_law
        yield "baseline_fidelity", self.baseline_fidelity
        yield "baseline", "linear omega ramp over the same duration"
        yield "scaling_law_l2", self.scaling_law_l2
        yield "width_tracking_error", self.width_tracking_error
        yield "ermakov_residual_max", self.ermakov_residual_max
        for key, value in self.boundary_residuals.items():
            yield f"boundary_residual_{key}", value
        yield "expulsive_intervals_s", "; ".join(f"{a:.17g}..{b:.17g}" for a, b in self.expulsive_intervals) or "none"
        yield "min_omega_sq_rad2_s2", self.min_omega_sq
        yield from self.extras.items()
        yield "thresholds_note", "fidelity thresholds are acceptance choices of this package"
        yield "wall_clock_s", self.wall_clock

    def to_text(self) -> str:
        return key_value_text(self.items())


def boundary_residuals(traj: ScalingTrajectory) -> dict:
    """Relative violations of the six boundary conditions."""
    tf, bf = traj.spec.t_f, traj.b_final
    (b0, b1), (d0, d1), (dd0, dd1) = (np.asarray(v) for v in traj.derivatives(np.array([0.0, tf])))
    scale = max(bf, 1.0)
    return {
        "b0": abs(b0 - 1.0),
        "bdot0": abs(d0) * tf / scale,
        "bddot0": abs(dd0) * tf ** 2 / scale,
        "bf": abs(b1 - bf) / bf,
        "bdotf": abs(d1) * tf / scale,
        "bddotf": abs(dd1) * tf ** 2 / scale,
    }


def ermakov_residual(traj: ScalingTrajectory, t) -> np.ndarray:
    """|b'' + w^2 b - w0^2 / b^(nu-1)| / w0^2."""
    b, _, bdd = traj.derivatives(t)
    w0 = traj.spec.omega0
    return np.abs(bdd + omega_squared(traj, t) * b - w0 ** 2 / b ** (traj.nu - 1)) / w0 ** 2


def run_frictionless_check(spec: DesignSpec, g_tilde: float, grid: Grid, *,
                           steps: int = DEFAULT_STEPS, records: int = DEFAULT_RECORDS,
                           baseline: bool = True, callback=None) -> ValidationReport:
    """Design, propagate and score one trajectory.

    Args:
        spec: Design problem in any consistent units; converted to units of
            1/omega0 internally.
        g_tilde: Dimensionless coupling g / (hbar omega0 a_ho^d) at t=0 for
            a unit-norm wavefunction.
        grid: Simulation box in oscillator lengths; its dimension must match
            the regime.
        steps: Target number of real-time steps; the step is further capped
            by the solver's stability bound.
        records: Number of recorded snapshots along the designed run.
        baseline: Also run the linear-ramp comparator.
        callback: Forwarded to :func:`propagate` for the designed run.
    """
    started = time.perf_counter()
    if spec.regime.dimension != grid.dimension:
        raise ValueError(f"regime {spec.regime.value} needs a {spec.regime.dimension}D grid, "
                         f"got {grid.dimension}D")
    unit = spec.dimensionless()
    traj = design(unit)
    g_of_t = coupling_schedule(traj, g_tilde)
    g_fn = lambda t: float(g_of_t(t))  # noqa: E731
    omega_sq_fn = lambda t: float(omega_squared(traj, min(max(t, 0.0), unit.t_f)))  # noqa: E731

    initial = ground_state_imaginary_time(grid, 1.0, g_fn(0.0))
    dt = min(unit.t_f / steps, max_stable_dt(grid))
    plan = PropagationPlan(omega_sq_fn, g_fn, dt, unit.t_f, record_every=0)
    plan = PropagationPlan(omega_sq_fn, g_fn, dt, unit.t_f,
                           record_every=max(1, plan.steps // max(records, 1)))
    designed = propagate(initial.psi0, plan, callback=callback)

    sigma0 = initial.psi0.width()
    widths = np.array([wf.width() for wf in designed.snapshots]) / sigma0
    b_rec = traj.b(np.clip(designed.times, 0.0, unit.t_f))
    width_error = float(np.max(np.abs(widths / b_rec - 1.0))) if widths.size else math.nan

    g_final = g_fn(unit.t_f)
    target = ground_state_imaginary_time(grid, unit.omega_f, g_final)
    prediction = propagating_mode(initial, traj, unit.t_f)
    final = designed.final

    base_run = None
    base_fid = math.nan
    if baseline:
        ramp = linear_ramp(1.0, unit.omega_f, unit.t_f)
        base_plan = PropagationPlan(ramp, g_fn, dt, unit.t_f)
        base_run = propagate(initial.psi0, base_plan)
        base_fid = fidelity(base_run.final, target.psi0)

    ft = sample_frequency_trajectory(design(spec))
    probe = np.linspace(0.0, unit.t_f, 1000)
    run = FrictionlessRun(unit, traj, grid, initial, target, g_final, designed, base_run, prediction)
    report = ValidationReport(
        spec=spec,
        g_tilde=g_tilde,
        fidelity_to_target=fidelity(final, target.psi0),
        fidelity_to_scaling_law=fidelity(final, prediction),
        baseline_fidelity=base_fid,
        scaling_law_l2=final.l2_distance(prediction),
        width_tracking_error=width_error,
        ermakov_residual_max=float(np.max(ermakov_residual(traj, probe))),
        boundary_residuals=boundary_residuals(traj),
        expulsive_intervals=expulsive_intervals(ft),
        min_omega_sq=float(np.min(ft.omega_sq)),
        grid=grid,
        steps=plan.steps,
        dt=plan.step / spec.omega0,
        wall_clock=0.0,
        run=run,
        extras={
            "mu_initial_hbar_omega0": initial.mu,
            "mu_target_hbar_omega0": target.mu,
            # weak-interaction diagnostic: local interaction energy at the peak density
            "peak_interaction_hbar_omega0": g_fn(0.0) * float(initial.psi0.density.max()),
        },
    )
    report.wall_clock = time.perf_counter() - started
    log.info("%s/%s g=%g: F_target=%.8f F_scaling=%.8f F_baseline=%.6f (%.1fs)",
             spec.regime.value, spec.ansatz.value, g_tilde, report.fidelity_to_target,
             report.fidelity_to_scaling_law, base_fid, report.wall_clock)
    return report


@dataclass(frozen=True)
class HoldResult:
    """Outcome of holding the final trap fixed after the ramp.

    Densities are compared in the L1 norm; ``density_change`` is the change
    at the end of the hold, ``max_density_change`` the largest excursion at
    any recorded time. Chemical potentials are in units of hbar*omega0.
    """

    hold_time: float
    density_change: float
    max_density_change: float
    measured_mu: float
    predicted_mu: float
    functional_mu: float

    @property
    def mu_relative_error(self) -> float:
        return abs(self.measured_mu - self.predicted_mu) / abs(self.predicted_mu)


def hold_and_verify_stationarity(run: FrictionlessRun, hold_time: float | None = None, *,
                                 which: str = "designed", records: int = 400,
                                 dt: float | None = None) -> HoldResult:
    """Keep omega = omega_f and g = g(t_f) fixed and watch the state.

    The phase rotation rate is measured from the unwrapped phase of the
    overlap with the state at t_f and compared with mu / b_f^(nu-2), the
    chemical potential transported by the scaling law.

    Args:
        run: A completed :func:`run_frictionless_check`.
        hold_time: Duration in units of 1/omega0; one final-trap period by default.
        which: ``"designed"`` or ``"baseline"``.
        records: Number of sampled times for the phase and excursion tracking.
        dt: Time step; the solver's stability bound by default.
    """
    unit = run.spec
    if hold_time is None:
        hold_time = 2.0 * math.pi / unit.omega_f
    start = run.designed.final if which == "designed" else run.baseline.final
    grid = run.grid
    step = dt if dt is not None else max_stable_dt(grid)
    plan = PropagationPlan(constant(unit.omega_f ** 2), constant(run.g_final), step,
                           unit.t_f + hold_time, t_start=unit.t_f)
    plan = PropagationPlan(plan.omega_sq, plan.g, step, plan.t_end,
                           record_every=max(1, plan.steps // records), t_start=unit.t_f)
    result = propagate(start, plan)

    rho0 = start.density
    changes = [grid.integrate(np.abs(wf.density - rho0)) for wf in result.snapshots]
    elapsed = np.asarray(result.times) - unit.t_f
    phases = np.unwrap([np.angle(start.inner(wf)) for wf in result.snapshots])
    measured = -float(np.dot(elapsed, phases) / np.dot(elapsed, elapsed))
    final = result.final
    return HoldResult(
        hold_time=hold_time,
        density_change=grid.integrate(np.abs(final.density - rho0)),
        max_density_change=float(max(changes)),
        measured_mu=measured,
        predicted_mu=run.initial.mu / run.trajectory.b_final ** (unit.nu - 2),
        functional_mu=chemical_potential(final, unit.omega_f, run.g_final),
    )
