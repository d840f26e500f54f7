"""The nine acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line (also collected into the terminal
summary) before asserting.
"""

import math
import time

import numpy as np

from frictionless_bec.cli import main
from frictionless_bec.gpe_solver import PropagationPlan, ground_state_imaginary_time, propagate
from frictionless_bec.trajectory_design import (
    Ansatz,
    DesignSpec,
    Regime,
    coupling_schedule,
    design,
    expulsive_intervals,
    omega_squared,
    sample_frequency_trajectory,
)
from frictionless_bec.validation import (
    default_grid,
    ermakov_residual,
    hold_and_verify_stationarity,
    run_frictionless_check,
)

W0 = 2 * math.pi * 250.0
WF = 2 * math.pi * 2.5
TF = 6e-3
ALL_CASES = [(r, a) for r in Regime for a in Ansatz]


def reference_spec(regime, ansatz=Ansatz.POLYNOMIAL5, t_f=TF):
    return DesignSpec(W0, WF, t_f, regime, ansatz)


def verdict(log, number, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    log.append(line)
    assert passed, line


def test_criterion_1_boundary_exactness(acceptance_log):
    start = time.perf_counter()
    worst = 0.0
    finals = {}
    for regime, ansatz in ALL_CASES:
        traj = design(reference_spec(regime, ansatz))
        bf = (W0 / WF) ** (2 / regime.nu)
        b, bd, bdd = (np.asarray(v) for v in traj.derivatives(np.array([0.0, TF])))
        errs = [abs(b[0] - 1), abs(b[1] - bf) / bf,
                *(np.abs(bd) * TF / bf), *(np.abs(bdd) * TF ** 2 / bf)]
        worst = max(worst, *errs)
        finals[regime.nu] = b[1]
    elapsed = time.perf_counter() - start
    values_ok = (abs(finals[3] - 21.544) < 5e-4 and abs(finals[4] - 10) < 5e-4
                 and abs(finals[5] - 6.3096) < 5e-5)
    verdict(acceptance_log, 1, worst < 1e-10 and values_ok and elapsed < 1.0,
            f"max relative residual {worst:.2e}, b_f {finals[3]:.3f}/{finals[4]:.3f}/"
            f"{finals[5]:.4f}, {elapsed:.2f}s")


def test_criterion_2_frequency_endpoints(acceptance_log):
    start = time.perf_counter()
    worst = 0.0
    expulsive = True
    slow_clean = True
    for regime, ansatz in ALL_CASES:
        ft = sample_frequency_trajectory(design(reference_spec(regime, ansatz)))
        worst = max(worst, abs(ft.omega_sq[0] / W0 ** 2 - 1), abs(ft.omega_sq[-1] / WF ** 2 - 1))
        expulsive &= bool(ft.omega_sq.min() < 0 and expulsive_intervals(ft))
        slow = design(reference_spec(regime, ansatz, t_f=10 / WF))
        slow_ft = sample_frequency_trajectory(slow)
        dense = omega_squared(slow, np.linspace(0, 10 / WF, 100_000))
        slow_clean &= not expulsive_intervals(slow_ft) and bool(dense.min() > 0)
    elapsed = time.perf_counter() - start
    verdict(acceptance_log, 2, worst < 1e-9 and expulsive and slow_clean and elapsed < 1.0,
            f"endpoint error {worst:.2e}, expulsive at 6 ms: {expulsive}, "
            f"slow ramp free of expulsion: {slow_clean}, {elapsed:.2f}s")


def test_criterion_3_ermakov_identity(acceptance_log):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for regime, ansatz in ALL_CASES:
        traj = design(reference_spec(regime, ansatz))
        t = rng.uniform(0.0, TF, 1000)
        worst = max(worst, float(np.max(ermakov_residual(traj, t))))
    elapsed = time.perf_counter() - start
    verdict(acceptance_log, 3, worst < 1e-9 and elapsed < 1.0,
            f"max residual {worst:.2e} omega0^2, {elapsed:.2f}s")


def test_criterion_4_linear_case(acceptance_log):
    start = time.perf_counter()
    spec = reference_spec(Regime.ONE_D_TUNED_G)
    grid = default_grid(spec, 0.0, 1024)
    report = run_frictionless_check(spec, 0.0, grid, steps=20_000, records=50, baseline=False)
    elapsed = time.perf_counter() - start
    n_records = len(report.run.designed.times)
    ok = (report.fidelity_to_target > 0.9999 and report.width_tracking_error < 1e-3
          and n_records >= 50 and elapsed < 60)
    verdict(acceptance_log, 4, ok,
            f"fidelity {report.fidelity_to_target:.12f}, width tracking "
            f"{report.width_tracking_error:.1e} over {n_records} records, {elapsed:.1f}s")


def test_criterion_5_tuned_coupling(acceptance_log):
    start = time.perf_counter()
    spec = reference_spec(Regime.ONE_D_TUNED_G)
    grid = default_grid(spec, 10.0, 1024)
    report = run_frictionless_check(spec, 10.0, grid, baseline=False)
    hold = hold_and_verify_stationarity(report.run)
    elapsed = time.perf_counter() - start
    ok = (report.scaling_law_l2 < 1e-3 and report.fidelity_to_scaling_law > 0.999
          and hold.max_density_change < 1e-4 and hold.mu_relative_error < 1e-3
          and elapsed < 300)
    verdict(acceptance_log, 5, ok,
            f"L2 {report.scaling_law_l2:.1e}, fidelity {report.fidelity_to_scaling_law:.10f}, "
            f"hold density change {hold.max_density_change:.1e}, mu error "
            f"{hold.mu_relative_error:.1e}, {elapsed:.1f}s")


def test_criterion_6_two_d(acceptance_log):
    start = time.perf_counter()
    spec = reference_spec(Regime.TWO_D)
    grid = default_grid(spec, 10.0, 256, safety_factor=2.0)
    report = run_frictionless_check(spec, 10.0, grid, steps=5000)
    elapsed = time.perf_counter() - start
    ok = (report.fidelity_to_target > 0.99
          and report.fidelity_to_target > report.baseline_fidelity and elapsed < 1800)
    verdict(acceptance_log, 6, ok,
            f"fidelity {report.fidelity_to_target:.6f} vs baseline "
            f"{report.baseline_fidelity:.4f}, {elapsed:.0f}s")


def test_criterion_7_thomas_fermi(acceptance_log):
    start = time.perf_counter()
    spec = reference_spec(Regime.ONE_D_TF)
    grid = default_grid(spec, 100.0, 4096, safety_factor=2.0)
    report = run_frictionless_check(spec, 100.0, grid)
    elapsed = time.perf_counter() - start
    ok = (report.fidelity_to_target > 0.98
          and report.fidelity_to_target > report.baseline_fidelity and elapsed < 300)
    verdict(acceptance_log, 7, ok,
            f"fidelity {report.fidelity_to_target:.5f} vs baseline "
            f"{report.baseline_fidelity:.4f}, {elapsed:.1f}s")


def test_criterion_8_solver_order(acceptance_log):
    start = time.perf_counter()
    unit = reference_spec(Regime.ONE_D_TUNED_G).dimensionless()
    traj = design(unit)
    grid = default_grid(unit, 10.0, 1024)
    psi0 = ground_state_imaginary_time(grid, 1.0, 10.0).psi0
    sched = coupling_schedule(traj, 10.0)

    def run(steps):
        plan = PropagationPlan(lambda t: float(omega_squared(traj, t)),
                               lambda t: float(sched(t)), unit.t_f / steps, unit.t_f)
        return propagate(psi0, plan).final

    coarse_steps = 2560  # dt just inside the stability bound of this grid
    coarse, fine = run(coarse_steps), run(2 * coarse_steps)
    reference = run(8 * coarse_steps)  # a quarter of the halved step
    ratio = coarse.l2_distance(reference) / fine.l2_distance(reference)
    elapsed = time.perf_counter() - start
    verdict(acceptance_log, 8, 3.5 <= ratio <= 4.5 and elapsed < 600,
            f"error ratio {ratio:.3f}, {elapsed:.1f}s")


def test_criterion_9_determinism(acceptance_log, tmp_path):
    config = tmp_path / "sweep.cfg"
    config.write_text(
        "omega0_rad_s = 1\nomegaf_rad_s = 0.111111111111111\ntf_s = 4\n"
        "regimes = OneD_TunedG, TwoD\nansatze = Polynomial5, ExpPolynomial5\n"
        "g_tilde = 0, 5\npoints_1d = 128\npoints_2d = 32\nextent = 40\nsteps = 300\n"
    )
    codes = [main(["sweep", "--config", str(config), "--out", str(tmp_path / name)])
             for name in ("a", "b")]
    first = (tmp_path / "a" / "summary.csv").read_bytes()
    second = (tmp_path / "b" / "summary.csv").read_bytes()
    rows = first.decode().count("\n") - 1
    verdict(acceptance_log, 9, codes == [0, 0] and first == second and rows == 8,
            f"exit codes {codes}, {rows} rows, identical: {first == second}")
