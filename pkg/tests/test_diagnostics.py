import math

import numpy as np
import pytest

from kolmoflow.diagnostics import (
    EnergyBudget,
    Envelopes,
    StabilityReport,
    continuation_integrand,
    energy_budget,
    envelope_check,
    lifespan_lower_bound,
    sobolev_energies,
    twin_stability,
    vacuum_measure,
)
from kolmoflow.errors import ShapeError, TrajectoryMismatchError
from kolmoflow.initial_data import homogeneous, random_band
from kolmoflow.lp import DyadicDecomposition
from kolmoflow.model import DataBounds, ModelParams, State
from kolmoflow.oracles import homogeneous_decay
from kolmoflow.spectral import Field, TorusGrid, gradient_array, oversample_array
from kolmoflow.stepper import StepControl, run_simulation

from conftest import random_scalar, random_vector


@pytest.fixture
def params():
    return ModelParams()


def constant(grid, v):
    return Field(grid, np.full(grid.shape, float(v)))


def zero_u(grid):
    return Field(grid, np.zeros((grid.d,) + grid.shape))


class TestEnvelopes:
    def test_margins_nonnegative_at_t0(self, grid2d, params):
        st = State(
            0.0,
            zero_u(grid2d),
            random_scalar(grid2d, 1, amp=0.3, base=1.0),
            random_scalar(grid2d, 2, amp=0.2, base=0.5),
        )
        bounds = DataBounds.from_state(st)
        m = envelope_check(st, bounds, params)
        assert m.omega_low >= 0.0 and m.omega_high >= 0.0 and m.k_low >= 0.0
        assert m.passed

    def test_homogeneous_coincidence(self, params):
        g = TorusGrid(2, 8)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        bounds = DataBounds.from_state(st)
        ctrl = StepControl(t_end=0.5, cfl_safety=1.0, dt_max=1e-3, stride=100, s=2.5)
        traj = run_simulation(st, params, ctrl)
        m = envelope_check(traj.final_state, bounds, params)
        assert abs(m.omega_low) <= 1e-8
        assert abs(m.omega_high) <= 1e-8
        assert abs(m.k_low) <= 1e-8
        assert m.passed

    def test_both_k_envelopes_reported(self, params):
        env = Envelopes(DataBounds(1.0, 2.0, 0.5), params.alpha2)
        t = 0.7
        ode_form = 0.5 * (1.0 + params.alpha2 * 2.0 * t) ** (-1.0 / params.alpha2)
        printed = 0.5 / (2.0 * params.alpha2 + 1.0) ** (1.0 / params.alpha2)
        assert env.k_min(t) == pytest.approx(ode_form)
        assert env.k_min_printed(t) == pytest.approx(printed)
        # envelopes decrease in t and stay positive
        assert env.omega_min(1.0) < env.omega_min(0.5) < env.omega_min(0.0)
        assert env.omega_min(5.0) > 0.0
        assert env.omega_min(3.0) <= env.omega_max(3.0)


class TestEnergyBudget:
    def test_needs_two_snapshots(self, grid2d, params):
        st = homogeneous(grid2d, omega0=1.0, beta0=1.0)
        with pytest.raises(ShapeError):
            energy_budget([st], params)

    def test_zero_velocity_u_budget_exact(self, params):
        g = TorusGrid(2, 8)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=0.2, dt_max=2e-3, cfl_safety=1.0, stride=10, s=2.5)
        traj = run_simulation(st, params, ctrl)
        res = energy_budget(traj.states, params)
        assert np.max(np.abs(res["residual_3_3"])) == 0.0

    def test_euler_run_conserves(self, params):
        from kolmoflow.initial_data import taylor_green

        g = TorusGrid(2, 32)
        st = taylor_green(g, amplitude=1.0, omega0=1.0, beta0=0.0)
        ctrl = StepControl(t_end=0.2, stride=2, s=2.5)
        traj = run_simulation(st, params, ctrl)
        res = energy_budget(traj.states, params)
        assert np.max(np.abs(res["residual_3_3"])) <= 1e-6

    def test_one_sided_sign_with_active_velocity(self, params):
        g = TorusGrid(2, 32)
        st = random_band(g, seed=3, u_amp=0.4, omega_amp=0.2, beta_amp=0.2,
                         omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=0.2, stride=5, s=2.5)
        traj = run_simulation(st, params, ctrl)
        res = energy_budget(traj.states, params)
        assert np.all(res["residual_3_5"][1:] < 0.0)
        assert np.all(res["residual_3_6"][1:] < 0.0)

    def test_refinement_shrinks_residual(self, params):
        g = TorusGrid(2, 32)

        def run(dt, stride):
            st = random_band(g, seed=3, u_amp=0.4, omega_amp=0.2, beta_amp=0.2,
                             omega0=1.0, beta0=1.0)
            ctrl = StepControl(t_end=0.2, cfl_safety=1.0, dt_max=dt, stride=stride,
                               s=2.5)
            return run_simulation(st, params, ctrl)

        coarse = run(1e-3, 20).rows[-1]["residual_3_3"]
        fine = run(5e-4, 10).rows[-1]["residual_3_3"]
        assert abs(coarse) / abs(fine) >= 4.0


class TestSobolevEnergies:
    def test_zero_beta_kills_F(self, grid2d, params):
        st = State(
            0.0, random_vector(grid2d, 4, amp=0.5),
            random_scalar(grid2d, 5, amp=0.3, base=2.0), constant(grid2d, 0.0),
        )
        E, F, bold = sobolev_energies(st, 2.5, params)
        assert F == 0.0
        assert E > 0.0

    def test_constant_state(self, grid2d, params):
        st = State(0.0, zero_u(grid2d), constant(grid2d, 2.0), constant(grid2d, 1.0))
        E, F, bold = sobolev_energies(st, 2.5, params)
        assert E == 0.0 and F == 0.0
        assert bold == pytest.approx(4.0 + 1.0)  # L2 parts only

    def test_single_mode_coefficient_oracle(self, params):
        g = TorusGrid(2, 32)
        x, _ = g.coords
        a = 0.25
        st = State(
            0.0, zero_u(g), Field(g, 2.0 + a * np.cos(x) + np.zeros(g.shape)),
            constant(g, 0.5),
        )
        s = 2.5
        dec = DyadicDecomposition(g)
        E, F, bold = sobolev_energies(st, s, params, dec)
        # E_s: only omega has fluctuations; one-mode arithmetic
        expect_E = sum(
            4.0 ** (j * s) * dec.bump(2.0 ** (-j)) ** 2 * (a**2 / 2.0)
            for j in range(dec.j_min, dec.j_max + 1)
        )
        assert E == pytest.approx(expect_E, rel=1e-12)
        # F_s: weight beta/sqrt(omega) varies; grad(Delta_j omega) is one mode
        w2 = 0.25 / (2.0 + a * np.cos(x) + np.zeros(g.shape))
        expect_F = sum(
            4.0 ** (j * s)
            * float(np.mean(w2 * (dec.bump(2.0 ** (-j)) * a * np.sin(x + np.zeros(g.shape))) ** 2))
            for j in range(dec.j_min, dec.j_max + 1)
        )
        assert F == pytest.approx(expect_F, rel=1e-12)


class TestContinuationIntegrand:
    def test_homogeneous_is_zero(self, grid2d, params):
        st = homogeneous(grid2d, omega0=1.5, beta0=0.7)
        assert continuation_integrand(st, 2.5, params) == 0.0

    def test_hand_reduction_constant_coefficients(self, params):
        # grad omega = grad beta = 0: A = |grad u|^([s]+4) + |grad((b/sqrt(w)) Du)|
        g = TorusGrid(2, 32)
        _, y = g.coords
        amp, w0, b0 = 0.8, 4.0, 0.6
        u = Field(g, np.stack([amp * np.sin(y) + np.zeros(g.shape), np.zeros(g.shape)]))
        st = State(0.0, u, constant(g, w0), constant(g, b0))
        s = 2.5
        got = continuation_integrand(st, s, params)
        weight = b0 / math.sqrt(w0)
        # |grad u|_sup = amp; grad of (weight * Du) has two entries
        # -(weight amp / 2) sin(y): pointwise Frobenius sup = weight*amp/sqrt(2)
        expect = amp ** (math.floor(s) + 4) + weight * amp * math.sqrt(2.0) / 2.0
        assert got == pytest.approx(expect, rel=1e-8)

    def test_oversampling_oracle(self, params):
        g = TorusGrid(2, 32)
        st = State(
            0.0, random_vector(g, 8, amp=0.5),
            random_scalar(g, 9, amp=0.3, base=2.0),
            random_scalar(g, 10, amp=0.2, base=1.0),
        )
        a2 = continuation_integrand(st, 2.5, params, oversample=2)
        a4 = continuation_integrand(st, 2.5, params, oversample=4)
        assert a2 == pytest.approx(a4, rel=1e-8)

    def test_zero_iff_gradients_vanish(self, grid2d, params):
        st = State(
            0.0, zero_u(grid2d), random_scalar(grid2d, 11, amp=0.3, base=2.0),
            constant(grid2d, 0.5),
        )
        assert continuation_integrand(st, 2.5, params) > 0.0


class TestLifespan:
    def test_small_energy_saturates(self):
        assert lifespan_lower_bound(0.0, 2.5) == 1.0
        assert lifespan_lower_bound(1e-6, 2.5) == 1.0

    def test_printed_arithmetic(self):
        # E0 = 1, s = 2.5 -> exponent 2*2+3 = 7 -> min(1, 1/128)
        assert lifespan_lower_bound(1.0, 2.5, 1.0) == pytest.approx(1.0 / 128.0)

    def test_monotone_in_energy(self):
        grid = np.linspace(0.01, 50.0, 200)
        vals = [lifespan_lower_bound(e, 2.5, 1.0) for e in grid]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_rejects_bad_args(self):
        with pytest.raises(ShapeError):
            lifespan_lower_bound(-1.0, 2.5)
        with pytest.raises(ShapeError):
            lifespan_lower_bound(1.0, 2.5, C=0.0)


class TestVacuumMeasure:
    def test_all_vacuum(self, grid2d, params):
        st = homogeneous(grid2d, omega0=1.0, beta0=0.0)
        frac, boundary = vacuum_measure(st, 1e-4)
        assert frac == 1.0 and boundary == 0

    def test_no_vacuum(self, grid2d):
        st = homogeneous(grid2d, omega0=1.0, beta0=1.0)
        frac, _ = vacuum_measure(st, 0.5)
        assert frac == 0.0

    def test_half_profile_counting_oracle(self):
        g = TorusGrid(2, 64)
        x, _ = g.coords
        beta = Field(g, np.maximum(0.0, np.cos(x)) + np.zeros(g.shape))
        st = State(0.0, zero_u(g), constant(g, 1.0), beta)
        eps = 1e-6
        frac, boundary = vacuum_measure(st, eps)
        # direct counting oracle
        below = (beta.values**2 < eps)
        assert frac == pytest.approx(float(below.mean()))
        assert abs(frac - 0.5) <= 1.0 / g.n + 1e-12
        assert boundary == 2 * g.n  # two vertical boundary lines


class TestTwinStability:
    def _make_traj(self, params, delta, t_end=0.1):
        g = TorusGrid(2, 32)
        st = random_band(g, seed=13, u_amp=0.4, omega_amp=0.2, beta_amp=0.2,
                         omega0=1.0, beta0=1.0)
        x = g.coords[0]
        om = Field(g, st.omega.values + delta * np.cos(x + np.zeros(g.shape)))
        st = State(0.0, st.u, om, st.beta)
        ctrl = StepControl(t_end=t_end, dt_max=1e-3, stride=10, s=2.5)
        return run_simulation(st, params, ctrl)

    def test_identical_trajectories_zero(self, params):
        a = self._make_traj(params, 0.0)
        rep = twin_stability(a, a, params)
        assert np.all(rep.energy == 0.0)
        assert rep.c_fit == 0.0

    def test_initial_energy_scales_as_delta_squared(self, params):
        base = self._make_traj(params, 0.0)
        e = {}
        for d in (1e-4, 1e-5):
            rep = twin_stability(base, self._make_traj(params, d), params)
            e[d] = rep.energy[0]
        assert e[1e-4] / e[1e-5] == pytest.approx(100.0, rel=1e-8)
        assert e[1e-4] == pytest.approx(1e-8 / 2.0, rel=1e-10)  # mean of cos^2 = 1/2

    def test_swap_symmetric(self, params):
        a = self._make_traj(params, 0.0)
        b = self._make_traj(params, 1e-4)
        r1 = twin_stability(a, b, params)
        r2 = twin_stability(b, a, params)
        assert np.array_equal(r1.energy, r2.energy)

    def test_gronwall_bound_holds(self, params):
        a = self._make_traj(params, 0.0)
        b = self._make_traj(params, 1e-4)
        rep = twin_stability(a, b, params)
        assert np.all(rep.energy <= rep.bound * (1.0 + 1e-12))
        assert np.all(np.isfinite(rep.theta))

    def test_mismatch_rejected(self, params):
        a = self._make_traj(params, 0.0, t_end=0.1)
        g = TorusGrid(2, 16)
        st = homogeneous(g, omega0=1.0, beta0=1.0)
        ctrl = StepControl(t_end=0.1, dt_max=1e-3, stride=10, s=2.5)
        other = run_simulation(st, params, ctrl)
        with pytest.raises(TrajectoryMismatchError):
            twin_stability(a, other, params)
