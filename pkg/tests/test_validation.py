import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from frictionless_bec.errors import GridMismatch
from frictionless_bec.grid import Grid, Wavefunction, gaussian
from frictionless_bec.trajectory_design import DesignSpec, Regime, design
from frictionless_bec.validation import (
    boundary_residuals,
    cloud_radius,
    default_grid,
    ermakov_residual,
    fidelity,
    hold_and_verify_stationarity,
    linear_ramp,
    run_frictionless_check,
)

GRID = Grid(1, 256, 30.0)
SPEC = DesignSpec(1.0, 1 / 9, 4.0, Regime.ONE_D_TUNED_G)


@pytest.fixture(scope="module")
def small_run():
    return run_frictionless_check(SPEC, 5.0, Grid(1, 256, 40.0), steps=2000)


class TestFidelity:
    def test_self(self):
        psi = gaussian(GRID)
        assert fidelity(psi, psi) == pytest.approx(1.0, abs=1e-15)

    def test_phase_and_scale_invariant(self):
        psi = gaussian(GRID)
        other = Wavefunction(GRID, 3.7 * np.exp(0.4j) * psi.amplitudes)
        assert fidelity(psi, other) == pytest.approx(1.0, abs=1e-14)

    def test_gaussian_width_mismatch(self):
        sigma = 1.3

        def amp(s):
            return lambda x: math.exp(-x * x / (2 * s * s))

        overlap = integrate.quad(lambda x: amp(sigma)(x) * amp(2 * sigma)(x), -np.inf, np.inf)[0]
        na = integrate.quad(lambda x: amp(sigma)(x) ** 2, -np.inf, np.inf)[0]
        nb = integrate.quad(lambda x: amp(2 * sigma)(x) ** 2, -np.inf, np.inf)[0]
        oracle = overlap ** 2 / (na * nb)
        assert oracle == pytest.approx(0.8, rel=1e-12)
        x = GRID.axis
        a = Wavefunction(GRID, np.exp(-x ** 2 / (2 * sigma ** 2)))
        b = Wavefunction(GRID, np.exp(-x ** 2 / (8 * sigma ** 2)))
        assert fidelity(a, b) == pytest.approx(oracle, rel=1e-12)

    def test_orthogonal(self):
        x = GRID.axis
        even = Wavefunction(GRID, np.exp(-x ** 2 / 2))
        odd = Wavefunction(GRID, x * np.exp(-x ** 2 / 2))
        assert fidelity(even, odd) < 1e-28

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatch):
            fidelity(gaussian(GRID), gaussian(Grid(1, 128, 30.0)))

    @settings(max_examples=50, deadline=None)
    @given(
        re_a=arrays(float, 16, elements=st.floats(-1, 1)),
        im_a=arrays(float, 16, elements=st.floats(-1, 1)),
        re_b=arrays(float, 16, elements=st.floats(-1, 1)),
        im_b=arrays(float, 16, elements=st.floats(-1, 1)),
    )
    def test_bounded_and_symmetric(self, re_a, im_a, re_b, im_b):
        grid = Grid(1, 16, 4.0)
        a = Wavefunction(grid, re_a + 1j * im_a)
        b = Wavefunction(grid, re_b + 1j * im_b)
        if a.norm() < 1e-6 or b.norm() < 1e-6:
            return
        f = fidelity(a, b)
        assert 0.0 <= f <= 1.0
        assert f == pytest.approx(fidelity(b, a), abs=1e-12)
        assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)


class TestHelpers:
    def test_linear_ramp(self):
        ramp = linear_ramp(1.0, 0.5, 2.0)
        assert ramp(0.0) == 1.0
        assert ramp(1.0) == pytest.approx(0.75 ** 2)
        assert ramp(5.0) == pytest.approx(0.25)

    def test_cloud_radius(self):
        assert cloud_radius(0.0, 1) == 1.5
        assert cloud_radius(100.0, 1) == pytest.approx(math.sqrt(2 * (300 / (4 * math.sqrt(2))) ** (2 / 3)))

    def test_default_grid(self):
        grid = default_grid(SPEC, 0.0, 256)
        assert grid.extent == pytest.approx(2 * 4 * 3 * 1.5)
        with pytest.raises(ValueError):
            default_grid(DesignSpec(1.0, 0.5, 1.0, Regime.THREE_D_TF), 1.0, 64)

    def test_residuals(self):
        traj = design(SPEC)
        assert max(boundary_residuals(traj).values()) < 1e-12
        assert np.max(ermakov_residual(traj, np.linspace(0, 4, 101))) < 1e-12


class TestFrictionlessCheck:
    def test_reaches_target(self, small_run):
        assert small_run.fidelity_to_target > 1 - 1e-10
        assert small_run.fidelity_to_scaling_law > 1 - 1e-10
        assert small_run.scaling_law_l2 < 1e-5
        assert small_run.width_tracking_error < 1e-5

    def test_beats_baseline(self, small_run):
        assert small_run.baseline_fidelity < small_run.fidelity_to_target
        assert small_run.baseline_fidelity < 0.9

    def test_report_text(self, small_run):
        text = small_run.to_text()
        keys = [line.split(":")[0] for line in text.splitlines()]
        for key in ("fidelity_to_target", "baseline_fidelity", "width_tracking_error",
                    "peak_interaction_hbar_omega0"):
            assert key in keys

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            run_frictionless_check(SPEC, 1.0, Grid(2, 16, 10.0))

    def test_refinement_is_monotone(self):
        deficits = []
        for points, steps in ((64, 250), (128, 500), (256, 2000)):
            report = run_frictionless_check(SPEC, 5.0, Grid(1, points, 40.0), steps=steps,
                                            baseline=False)
            deficits.append(1 - report.fidelity_to_target)
        assert deficits[0] > deficits[1] > deficits[2]

    def test_hold_designed(self, small_run):
        hold = hold_and_verify_stationarity(small_run.run)
        assert hold.max_density_change < 1e-5
        assert hold.mu_relative_error < 1e-6
        assert hold.functional_mu == pytest.approx(hold.predicted_mu, rel=1e-5)

    def test_hold_baseline_moves(self, small_run):
        designed = hold_and_verify_stationarity(small_run.run)
        base = hold_and_verify_stationarity(small_run.run, which="baseline")
        assert base.max_density_change > 1e3 * designed.max_density_change
