import numpy as np
import pytest

from kolmoflow.errors import BlowUpError, InvalidInitialDataError, ShapeError
from kolmoflow.initial_data import compact_k, homogeneous, random_band, taylor_green
from kolmoflow.model import ModelParams, State
from kolmoflow.oracles import homogeneous_decay
from kolmoflow.spectral import Field, TorusGrid, apply_derivative
from kolmoflow.stepper import (
    StepControl,
    compute_dt,
    enforce_positivity,
    rk4_step,
    run_simulation,
)

from conftest import random_scalar


@pytest.fixture
def params():
    return ModelParams()


def constant(grid, v):
    return Field(grid, np.full(grid.shape, float(v)))


def zero_u(grid):
    return Field(grid, np.zeros((grid.d,) + grid.shape))


class TestStepControl:
    def test_validation(self):
        with pytest.raises(ShapeError):
            StepControl(t_end=1.0, cfl_safety=0.0)
        with pytest.raises(ShapeError):
            StepControl(t_end=1.0, cfl_safety=1.5)
        with pytest.raises(ShapeError):
            StepControl(t_end=1.0, dt_min=1.0, dt_max=0.1)
        with pytest.raises(ShapeError):
            StepControl(t_end=-1.0)
        with pytest.raises(ShapeError):
            StepControl(t_end=1.0, s=2.0).check_regularity_index(2)
        StepControl(t_end=1.0, s=2.5).check_regularity_index(2)


class TestComputeDt:
    def test_both_constraints_inactive(self, params):
        g = TorusGrid(2, 64)
        st = homogeneous(g, omega0=1.0, beta0=0.0)
        ctrl = StepControl(t_end=1.0, cfl_safety=0.5, dt_max=0.125)
        assert compute_dt(st, params, ctrl) == 0.125

    def test_advective_arithmetic(self, params):
        g = TorusGrid(2, 64)
        _, y = g.coords
        u = Field(g, np.stack([np.sin(y) + np.zeros(g.shape), np.zeros(g.shape)]))
        st = State(0.0, u, constant(g, 1.0), constant(g, 0.0))
        ctrl = StepControl(t_end=1.0, cfl_safety=0.5, dt_max=10.0)
        assert compute_dt(st, params, ctrl) == pytest.approx(0.5 * 2 * np.pi / 64)

    def test_diffusive_quarters_on_refinement(self, params):
        ctrl = StepControl(t_end=1.0, cfl_safety=0.5, dt_max=10.0)
        dts = []
        for n in (32, 64):
            g = TorusGrid(2, n)
            st = homogeneous(g, omega0=1.0, beta0=1.0)
            dts.append(compute_dt(st, params, ctrl))
        assert dts[0] / dts[1] == pytest.approx(4.0)

    def test_collapse_signals_blowup(self, params):
        g = TorusGrid(2, 64)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=1.0, cfl_safety=0.5, dt_max=10.0, dt_min=1.0)
        with pytest.raises(BlowUpError):
            compute_dt(st, params, ctrl)


class TestRK4:
    def test_fixed_point(self):
        g = TorusGrid(2, 8)
        params = ModelParams(alpha2=1e-12)  # sink switched off within validation
        st = homogeneous(g, omega0=1.0, beta0=0.0)
        out = rk4_step(st, 0.01, params)
        assert np.max(np.abs(out.omega.values - 1.0)) < 1e-13
        assert np.max(np.abs(out.beta.values)) == 0.0
        assert out.t == pytest.approx(0.01)

    def test_riccati_closed_form(self, params):
        g = TorusGrid(2, 8)
        st = homogeneous(g, omega0=1.0, beta0=0.0)
        dt = 1e-3
        for _ in range(1000):
            st = rk4_step(st, dt, params)
        w_exp, _ = homogeneous_decay(1.0, 1.0, 0.0, params.alpha2)
        assert abs(float(st.omega.values.flat[0]) - w_exp) <= 1e-10

    def test_k_decay_closed_form(self, params):
        g = TorusGrid(2, 8)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        dt = 1e-3
        for _ in range(1000):
            st = rk4_step(st, dt, params)
        _, k_exp = homogeneous_decay(1.0, 1.0, 1.0, params.alpha2)
        assert abs(float(st.beta.values.flat[0]) ** 2 - k_exp) <= 1e-10
        assert k_exp == pytest.approx(0.5)

    def test_fourth_order_convergence(self):
        # stiffer decay keeps the error well above the fp floor
        params = ModelParams(alpha2=4.0)
        g = TorusGrid(2, 8)
        errors = []
        for dt in (4e-3, 2e-3, 1e-3):
            st = homogeneous(g, omega0=2.0, beta0=0.0)
            steps = round(1.0 / dt)
            for _ in range(steps):
                st = rk4_step(st, dt, params)
            errors.append(abs(float(st.omega.values.flat[0]) - 2.0 / 9.0))
        orders = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert min(orders) >= 3.8

    def test_original_formulation_agrees(self, params):
        # well-resolved data: truncation tails below roundoff, so the two
        # formulations track each other to machine precision
        g = TorusGrid(2, 64)
        st0 = random_band(g, seed=5, band=(1.0, 3.0), decay=1.5, u_amp=0.3,
                          omega_amp=0.2, beta_amp=0.1, omega0=1.5, beta0=1.0)
        dt = 2e-4
        a = b = st0
        for _ in range(10):
            a = rk4_step(a, dt, params, "beta")
            b = rk4_step(b, dt, params, "original")
        assert np.max(np.abs(a.beta.values - b.beta.values)) < 1e-12
        assert np.max(np.abs(a.u.values - b.u.values)) < 1e-12


class TestEnforcePositivity:
    def test_untouched_state(self, params):
        g = TorusGrid(2, 16)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        out, report = enforce_positivity(st, params)
        assert report.total == 0.0
        assert out is st

    def test_single_negative_beta_value(self, params):
        g = TorusGrid(2, 16)
        vals = np.full(g.shape, 1.0)
        vals[3, 4] = -1e-9
        st = State(0.0, zero_u(g), constant(g, 1.0), Field(g, vals))
        out, report = enforce_positivity(st, params)
        assert out.beta.values[3, 4] == 0.0
        assert report.beta_l2 == pytest.approx(1e-9 / np.sqrt(g.npoints))
        assert report.omega_l2 == 0.0

    def test_omega_floor_clamp(self, params):
        g = TorusGrid(2, 16)
        vals = np.full(g.shape, 1.0)
        vals[0, 0] = params.omega_floor / 2
        st = State(0.0, zero_u(g), Field(g, vals), constant(g, 0.0))
        out, report = enforce_positivity(st, params)
        assert out.omega.values[0, 0] == params.omega_floor
        assert report.omega_l2 > 0.0


class TestRunSimulation:
    def test_homogeneous_matches_ode(self, params):
        g = TorusGrid(2, 8)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=1.0, cfl_safety=1.0, dt_max=1e-3, stride=100, s=2.5)
        traj = run_simulation(st, params, ctrl)
        assert traj.status == "completed"
        w_exp, k_exp = homogeneous_decay(1.0, 1.0, 1.0, params.alpha2)
        final = traj.final_state
        assert abs(float(final.omega.values.flat[0]) - w_exp) <= 1e-8
        assert abs(float(final.beta.values.flat[0]) ** 2 - k_exp) <= 1e-8

    def test_homogeneity_is_invariant(self, params):
        g = TorusGrid(2, 16)
        st = homogeneous(g, omega0=1.3, beta0=0.8)
        ctrl = StepControl(t_end=0.2, stride=10, s=2.5)
        traj = run_simulation(st, params, ctrl)
        for f in (traj.final_state.omega, traj.final_state.beta):
            assert float(np.ptp(f.values)) <= 1e-12
        assert float(np.ptp(traj.final_state.u.values)) <= 1e-12

    def test_euler_reduction_conserves_energy(self, params):
        g = TorusGrid(2, 64)
        st = taylor_green(g, amplitude=1.0, omega0=1.0, beta0=0.0)
        ctrl = StepControl(t_end=0.5, stride=5, s=2.5)
        traj = run_simulation(st, params, ctrl)
        L2 = [r["L2_u"] for r in traj.rows]
        assert max(abs(v - L2[0]) for v in L2) / L2[0] <= 1e-6
        assert np.max(np.abs(traj.final_state.beta.values)) == 0.0

    def test_divergence_stays_small_along_trajectory(self, params):
        g = TorusGrid(2, 32)
        st = random_band(g, seed=11, u_amp=0.4, omega_amp=0.2, beta_amp=0.2,
                         omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=0.1, stride=5, s=2.5)
        traj = run_simulation(st, params, ctrl)
        for snap in traj.states:
            div = apply_derivative(snap.u, "divergence")
            assert np.max(np.abs(div.values)) <= 1e-9

    def test_invalid_initial_data_lists_violations(self, params):
        g = TorusGrid(2, 16)
        st = State(0.0, zero_u(g), constant(g, 1.0), constant(g, -0.5))
        ctrl = StepControl(t_end=0.1, s=2.5)
        with pytest.raises(InvalidInitialDataError) as err:
            run_simulation(st, params, ctrl)
        assert any("beta" in v for v in err.value.violations)

    def test_zero_step_run_single_row(self, params):
        g = TorusGrid(2, 16)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=0.0, s=2.5)
        traj = run_simulation(st, params, ctrl)
        assert len(traj.rows) == 1 and traj.rows[0]["t"] == 0.0

    def test_dt_collapse_terminates_as_blowup(self, params):
        g = TorusGrid(2, 32)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=1.0, dt_min=0.01, dt_max=0.05, s=2.5)
        traj = run_simulation(st, params, ctrl)
        assert traj.status == "blowup"
        assert "collapsed" in traj.reason

    def test_snapshot_cadence(self, params):
        g = TorusGrid(2, 16)
        st = homogeneous(g, omega0=1.0, beta0=0.5)
        ctrl = StepControl(t_end=0.1, dt_max=0.01, cfl_safety=1.0, stride=3, s=2.5)
        traj = run_simulation(st, params, ctrl)
        # first, every 3rd step, and the final state
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(0.1)
        assert traj.steps == 10
        assert len(traj.times) == 1 + len({3, 6, 9, 10})


class TestVacuumRuns:
    def test_lifted_vacuum_run_never_clamps(self, params):
        g = TorusGrid(2, 64)
        st = compact_k(g, amplitude=0.3, width=2.85, omega0=1.0, eps_lift=1e-3)
        ctrl = StepControl(t_end=0.25, stride=5, s=2.5)
        traj = run_simulation(st, params, ctrl)
        assert traj.status == "completed"
        assert traj.clamp_beta_total == 0.0
        assert traj.clamp_omega_total == 0.0
        assert min(r["min_k"] for r in traj.rows) >= 0.0

    def test_unlifted_vacuum_run_characterisation(self, params):
        # genuine vacuum: spectral ringing makes tiny clamps unavoidable;
        # the report records them and they stay at truncation-noise level
        g = TorusGrid(2, 64)
        st = compact_k(g, amplitude=0.3, width=2.85, omega0=1.0, eps_lift=0.0)
        ctrl = StepControl(t_end=0.1, stride=5, s=2.5)
        traj = run_simulation(st, params, ctrl)
        assert traj.status == "completed"
        assert min(r["min_k"] for r in traj.rows) >= 0.0  # post-clamp states
        assert traj.clamp_beta_total < 1e-4
        assert traj.clamp_omega_total == 0.0
