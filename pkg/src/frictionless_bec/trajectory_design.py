"""Inverse design of frictionless trap-frequency ramps.

Given the initial and final trap frequencies and a ramp duration, a scaling
factor ``b(t)`` is interpolated between the boundary conditions

    b(0) = 1,      b'(0) = b''(0) = 0,
    b(tf) = (w0/wf)**(2/nu),  b'(tf) = b''(tf) = 0,

and the squared trap frequency follows from the Ermakov-type equation

    b'' + w(t)**2 b = w0**2 / b**(nu - 1).

The exponent ``nu`` depends on the dimension and interaction regime:
3 for the 1D Thomas-Fermi limit, 4 for the linear / tuned-coupling / 2D
cases and 5 for the 3D Thomas-Fermi limit.

Everything here is unit agnostic: frequencies and times only need to be
consistent (rad/s with s, or 1/w0 units with w0 = 1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import optimize

from frictionless_bec._io import atomic_write_text
from frictionless_bec.errors import DesignError, PositivityViolation, SingularSystem

#: Minimum number of quadrature panels used for the scaled time.
TAU_QUADRATURE_POINTS = 1000
#: Resolution of the uniform positivity screen on b(t).
POSITIVITY_GRID_POINTS = 10_000

TRAJECTORY_CSV_HEADER = "t_s,b,bdot,bddot,omega_sq_rad2_s2,tau_s,g_over_g0"


class Regime(str, enum.Enum):
    """Trap geometry and interaction regime of the condensate."""

    ONE_D_TUNED_G = "OneD_TunedG"
    ONE_D_TF = "OneD_TF"
    TWO_D = "TwoD"
    THREE_D_TUNED_G = "ThreeD_TunedG"
    THREE_D_TF = "ThreeD_TF"

    @property
    def nu(self) -> int:
        """Exponent of the Ermakov-type equation."""
        return {
            Regime.ONE_D_TF: 3,
            Regime.THREE_D_TF: 5,
        }.get(self, 4)

    @property
    def dimension(self) -> int:
        if self in (Regime.ONE_D_TUNED_G, Regime.ONE_D_TF):
            return 1
        if self is Regime.TWO_D:
            return 2
        return 3

    @property
    def thomas_fermi(self) -> bool:
        return self in (Regime.ONE_D_TF, Regime.THREE_D_TF)

    @classmethod
    def parse(cls, value: str | Regime) -> Regime:
        if isinstance(value, cls):
            return value
        for member in cls:
            if value.strip().lower() in (member.value.lower(), member.name.lower()):
                return member
        raise DesignError(f"unknown regime {value!r}; expected one of "
                          f"{', '.join(m.value for m in cls)}")


class Ansatz(str, enum.Enum):
    """Functional form used to interpolate b(t)."""

    POLYNOMIAL5 = "Polynomial5"
    EXP_POLYNOMIAL5 = "ExpPolynomial5"

    @classmethod
    def parse(cls, value: str | Ansatz) -> Ansatz:
        if isinstance(value, cls):
            return value
        for member in cls:
            if value.strip().lower() in (member.value.lower(), member.name.lower()):
                return member
        raise DesignError(f"unknown ansatz {value!r}; expected one of "
                          f"{', '.join(m.value for m in cls)}")


@dataclass(frozen=True)
class DesignSpec:
    """Statement of the inverse problem.

    Attributes:
        omega0: Initial angular trap frequency.
        omega_f: Final angular trap frequency.
        t_f: Ramp duration.
        regime: Geometry / interaction regime, fixes ``nu``.
        ansatz: Interpolating form of b(t).
        samples: Number of points of exported grids.
    """

    omega0: float
    omega_f: float
    t_f: float
    regime: Regime = Regime.ONE_D_TUNED_G
    ansatz: Ansatz = Ansatz.POLYNOMIAL5
    samples: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        object.__setattr__(self, "ansatz", Ansatz.parse(self.ansatz))
        for name in ("omega0", "omega_f", "t_f"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DesignError(f"{name} must be finite and > 0, got {value!r}")
        if int(self.samples) != self.samples or self.samples < 2:
            raise DesignError(f"samples must be an integer >= 2, got {self.samples!r}")
        object.__setattr__(self, "samples", int(self.samples))

    @property
    def nu(self) -> int:
        return self.regime.nu

    @property
    def b_final(self) -> float:
        return (self.omega0 / self.omega_f) ** (2.0 / self.nu)

    def dimensionless(self) -> DesignSpec:
        """The same problem with time measured in units of 1/omega0."""
        return replace(self, omega0=1.0, omega_f=self.omega_f / self.omega0,
                       t_f=self.t_f * self.omega0)


def _boundary_polynomial(start: float, end: float) -> np.ndarray:
    """Quintic q(s) on [0, 1] with q=start, end and vanishing q', q'' at both ends."""
    matrix = np.array([
        [1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, 0, 2, 0, 0, 0],
        [1, 1, 1, 1, 1, 1],
        [0, 1, 2, 3, 4, 5],
        [0, 0, 2, 6, 12, 20],
    ], dtype=float)
    rhs = np.array([start, 0.0, 0.0, end, 0.0, 0.0])
    try:
        coeffs = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(coeffs)):
        raise SingularSystem("boundary system produced non-finite coefficients")
    return coeffs


@dataclass(frozen=True)
class ScalingTrajectory:
    """Closed-form scaling factor b(t) on [0, t_f].

    The interpolant is stored in the normalized time ``s = t / t_f``; for the
    polynomial ansatz it is b itself, for the exponential ansatz it is ln b.
    ``coefficients`` converts back to powers of physical time.
    """

    spec: DesignSpec
    normalized_coefficients: np.ndarray
    time_grid: np.ndarray = field(init=False, repr=False)
    tau_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coeffs = np.array(self.normalized_coefficients, dtype=float)
        coeffs.flags.writeable = False
        object.__setattr__(self, "normalized_coefficients", coeffs)
        grid = np.linspace(0.0, self.spec.t_f, self.spec.samples)
        grid.flags.writeable = False
        object.__setattr__(self, "time_grid", grid)
        self._check_positive()
        table = self._build_tau_table()
        table.flags.writeable = False
        object.__setattr__(self, "tau_table", table)

    @property
    def nu(self) -> int:
        return self.spec.nu

    @property
    def b_final(self) -> float:
        return self.spec.b_final

    @property
    def coefficients(self) -> np.ndarray:
        """Coefficients of b (or ln b) in powers of physical time t."""
        powers = self.spec.t_f ** np.arange(self.normalized_coefficients.size)
        return self.normalized_coefficients / powers

    @property
    def exponential(self) -> bool:
        return self.spec.ansatz is Ansatz.EXP_POLYNOMIAL5

    def _normalized_time(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        tf = self.spec.t_f
        slack = 1e-12 * tf
        if np.any(t < -slack) or np.any(t > tf + slack):
            raise DesignError(f"t outside [0, {tf!r}]")
        return np.clip(t, 0.0, tf) / tf

    def derivatives(self, t):
        """Return ``(b, bdot, bddot)`` at time(s) ``t``."""
        s = self._normalized_time(t)
        c = self.normalized_coefficients
        q = npoly.polyval(s, c)
        dq = npoly.polyval(s, npoly.polyder(c)) / self.spec.t_f
        ddq = npoly.polyval(s, npoly.polyder(c, 2)) / self.spec.t_f ** 2
        if not self.exponential:
            return q, dq, ddq
        b = np.exp(q)
        return b, b * dq, b * (dq * dq + ddq)

    def b(self, t):
        return self.derivatives(t)[0]

    def bdot(self, t):
        return self.derivatives(t)[1]

    def bddot(self, t):
        return self.derivatives(t)[2]

    def b_held(self, t):
        """b(t) extended past t_f by holding b = b_f (and before 0 by b = 1)."""
        return self.b(np.clip(t, 0.0, self.spec.t_f))

    def _tau_weight(self, t):
        return self.b(t) ** -(self.nu - 2)

    def _panels_per_interval(self) -> int:
        intervals = self.spec.samples - 1
        per = math.ceil(TAU_QUADRATURE_POINTS / intervals)
        return per + (per % 2)

    def _simpson(self, start, stop, panels: int) -> np.ndarray:
        start = np.asarray(start, dtype=float)
        stop = np.asarray(stop, dtype=float)
        frac = np.linspace(0.0, 1.0, panels + 1)
        nodes = start[..., None] + (stop - start)[..., None] * frac
        weights = np.ones(panels + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        values = self._tau_weight(nodes)
        return (stop - start) / (3.0 * panels) * (values @ weights)

    def _build_tau_table(self) -> np.ndarray:
        grid = self.time_grid
        pieces = self._simpson(grid[:-1], grid[1:], self._panels_per_interval())
        return np.concatenate(([0.0], np.cumsum(pieces)))

    def tau(self, t):
        """Scaled time, the integral of b**-(nu-2) from 0 to t."""
        t = np.asarray(self._normalized_time(t) * self.spec.t_f)
        grid = self.time_grid
        idx = np.clip(np.searchsorted(grid, t, side="right") - 1, 0, grid.size - 2)
        partial = self._simpson(grid[idx], t, self._panels_per_interval())
        out = self.tau_table[idx] + partial
        return out if out.ndim else float(out)

    def _check_positive(self):
        s = np.linspace(0.0, 1.0, POSITIVITY_GRID_POINTS)
        if self.exponential:
            return  # exp(p) > 0 by construction
        c = self.normalized_coefficients
        crit = npoly.polyroots(npoly.polyder(c)) if np.any(c[1:]) else np.array([])
        crit = crit[np.isreal(crit)].real
        crit = crit[(crit > 0.0) & (crit < 1.0)]
        values = npoly.polyval(np.concatenate((s, crit)), c)
        if np.min(values) <= 0.0:
            raise PositivityViolation(
                f"b(t) reaches {np.min(values):.6g} <= 0 for {self.spec}")


def solve_polynomial_b(spec: DesignSpec) -> ScalingTrajectory:
    """Quintic b(t) = sum_j a_j t**j meeting the six boundary conditions."""
    if spec.ansatz is not Ansatz.POLYNOMIAL5:
        raise DesignError(f"solve_polynomial_b needs ansatz Polynomial5, got {spec.ansatz.value}")
    return ScalingTrajectory(spec, _boundary_polynomial(1.0, spec.b_final))


def solve_exp_polynomial_b(spec: DesignSpec) -> ScalingTrajectory:
    """b(t) = exp(p(t)) with p a quintic; conditions imposed on p = ln b."""
    if spec.ansatz is not Ansatz.EXP_POLYNOMIAL5:
        raise DesignError(f"solve_exp_polynomial_b needs ansatz ExpPolynomial5, got {spec.ansatz.value}")
    return ScalingTrajectory(spec, _boundary_polynomial(0.0, math.log(spec.b_final)))


def design(spec: DesignSpec) -> ScalingTrajectory:
    """Dispatch on ``spec.ansatz``."""
    if spec.ansatz is Ansatz.POLYNOMIAL5:
        return solve_polynomial_b(spec)
    return solve_exp_polynomial_b(spec)


def omega_squared(traj: ScalingTrajectory, t):
    """w(t)**2 = w0**2 / b**nu - b''/b; negative values mean an expulsive trap."""
    b, _, bdd = traj.derivatives(t)
    return traj.spec.omega0 ** 2 / b ** traj.nu - bdd / b


def scaled_time(traj: ScalingTrajectory, t):
    return traj.tau(t)


@dataclass(frozen=True)
class FrequencyTrajectory:
    """Squared trap frequency sampled on a uniform grid."""

    time_grid: np.ndarray
    omega_sq: np.ndarray
    trajectory: ScalingTrajectory

    @property
    def spec(self) -> DesignSpec:
        return self.trajectory.spec


def sample_frequency_trajectory(traj: ScalingTrajectory) -> FrequencyTrajectory:
    grid = traj.time_grid
    values = np.asarray(omega_squared(traj, grid), dtype=float)
    values.flags.writeable = False
    return FrequencyTrajectory(grid, values, traj)


def coupling_schedule(traj: ScalingTrajectory, g0: float) -> Callable:
    """Coupling strength g(t) required by the regime.

    1D tuned coupling uses g0 / b(t), 3D tuned coupling g0 * b(t); every
    other regime keeps g constant. Past t_f the value at t_f is held.
    """
    regime = traj.spec.regime
    if regime is Regime.ONE_D_TUNED_G:
        return lambda t: g0 / traj.b_held(t)
    if regime is Regime.THREE_D_TUNED_G:
        return lambda t: g0 * traj.b_held(t)
    return lambda t: g0 * np.ones_like(np.asarray(t, dtype=float))


def expulsive_intervals(ft: FrequencyTrajectory) -> list[tuple[float, float]]:
    """Maximal time windows in which w(t)**2 < 0.

    Sign changes are located on the sample grid and then refined by bisection
    on the closed-form w**2 to an absolute tolerance of t_f * 1e-9.
    """
    traj = ft.trajectory
    grid = ft.time_grid
    negative = ft.omega_sq < 0.0
    if not negative.any():
        return []
    xtol = traj.spec.t_f * 1e-9

    def crossing(i):
        return optimize.bisect(lambda t: float(omega_squared(traj, t)),
                               grid[i], grid[i + 1], xtol=xtol)

    intervals = []
    edges = np.flatnonzero(np.diff(negative.astype(np.int8)))
    starts = [0] if negative[0] else []
    stops = []
    for i in edges:
        (starts if negative[i + 1] else stops).append(i)
    if negative[-1]:
        stops.append(None)
    for first, last in zip(starts, stops):
        lo = grid[0] if first == 0 and negative[0] else crossing(first)
        hi = grid[-1] if last is None else crossing(last)
        intervals.append((float(lo), float(hi)))
    return intervals


def trajectory_table(traj: ScalingTrajectory, g0: float = 1.0) -> np.ndarray:
    """Columns of the trajectory CSV: t, b, b', b'', w**2, tau, g/g0."""
    t = traj.time_grid
    b, bd, bdd = traj.derivatives(t)
    g = coupling_schedule(traj, 1.0)(t)
    return np.column_stack([t, b, bd, bdd, omega_squared(traj, t), traj.tau_table, g])


def write_trajectory_csv(traj: ScalingTrajectory, path: str | Path) -> Path:
    """Write the sampled trajectory with 17 significant digits."""
    rows = trajectory_table(traj)
    lines = [TRAJECTORY_CSV_HEADER]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    return atomic_write_text(Path(path), "\n".join(lines) + "\n")
