"""Explicit adaptive time stepping and the simulation driver.

The scheme is classical RK4 over the square-root-form tendencies with an
advective/diffusive CFL step controller.  The eddy viscosity is variable
and degenerate, so no implicit treatment is attempted; desk-scale grids
keep explicit stepping affordable.  Positivity of (omega, beta) is a
structural property of the continuous system; discretely it is enforced
by clamping after each step, and every clamp is recorded so that a
nonzero report flags an untrusted run rather than silently regularising
the degeneracy.
"""

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import (
    EnergyBudget,
    Envelopes,
    continuation_integrand,
    sobolev_energies,
    vacuum_measure,
)
from .errors import BlowUpError, InvalidInitialDataError, ShapeError
from .lp import DyadicDecomposition
from .model import DataBounds, ModelParams, State, rhs_beta, rhs_original
from .spectral import Field, l2_norm, leray_project


@dataclass(frozen=True)
class StepControl:
    """Step-size limits, stopping, and diagnostic cadence.

    ``s`` is the Sobolev index used by the diagnostics and must exceed
    1 + d/2 (checked against the grid when a run starts).
    """

    t_end: float
    cfl_safety: float = 0.4
    dt_max: float = 0.05
    dt_min: float = 1e-10
    stride: int = 10
    s: float = 2.5
    blowup_threshold: float = 1e3
    eps_vac: float = 1e-4
    formulation: str = "beta"
    disabled: tuple = ()  # diagnostic groups to skip (their columns become nan)

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ShapeError("cfl_safety must lie in (0, 1]")
        if not self.dt_min <= self.dt_max:
            raise ShapeError("need dt_min <= dt_max")
        if self.t_end < 0.0:
            raise ShapeError("t_end must be nonnegative")
        if self.stride < 1:
            raise ShapeError("stride must be >= 1")
        if self.formulation not in ("beta", "original"):
            raise ShapeError("formulation must be 'beta' or 'original'")

    def check_regularity_index(self, d: int):
        if not self.s > 1.0 + d / 2.0:
            raise ShapeError(f"s must exceed 1 + d/2 = {1.0 + d / 2.0}")


@dataclass
class ClampReport:
    """L2 magnitude of the positivity clamps applied in one step."""

    omega_l2: float = 0.0
    beta_l2: float = 0.0

    @property
    def total(self) -> float:
        return self.omega_l2 + self.beta_l2


def compute_dt(state: State, params: ModelParams, control: StepControl) -> float:
    """Advective/diffusive CFL step, never exceeding dt_max.

    The safety factor scales the CFL terms only, so dt = dt_max exactly
    when both constraints are inactive.  A step below dt_min signals
    collapse and is treated as a blow-up indicator.
    """
    grid = state.grid
    dx = grid.dx
    dt = control.dt_max
    u_max = float(np.sqrt(np.max(np.sum(state.u.values**2, axis=0))))
    if u_max > 0.0:
        dt = min(dt, control.cfl_safety * dx / u_max)
    nut_max = float(np.max(state.beta.values**2 / state.omega.values))
    if nut_max > 0.0:
        diff_rate = 2.0 * grid.d * max(params.nu, params.alpha1, params.alpha3) * nut_max
        dt = min(dt, control.cfl_safety * dx * dx / diff_rate)
    if dt < control.dt_min:
        raise BlowUpError(f"time step collapsed: dt = {dt:.3e} < dt_min = {control.dt_min:.3e}")
    return dt


def _axpy(state: State, coeff: float, tend) -> State:
    grid = state.grid
    return State(
        state.t,
        Field(grid, state.u.values + coeff * tend[0].values),
        Field(grid, state.omega.values + coeff * tend[1].values),
        Field(grid, state.beta.values + coeff * tend[2].values),
    )


def rk4_step(
    state: State, dt: float, params: ModelParams, formulation: str = "beta"
) -> State:
    """Classical 4-stage step; u is re-projected after the combination
    stage to remove divergence drift introduced by dealiasing."""
    if dt <= 0.0:
        raise ShapeError("dt must be positive")
    grid = state.grid
    if formulation == "beta":
        def rhs(st):
            return rhs_beta(st, params)
        work = state
    elif formulation == "original":
        def rhs(st):
            du, dw, dk = rhs_original(st.u, st.omega, st.beta, params)
            return du, dw, dk
        # evolve (u, omega, k); k rides in the beta slot and is rooted at the end
        work = State(state.t, state.u, state.omega, Field(grid, state.beta.values**2))
    else:
        raise ShapeError(f"unknown formulation {formulation!r}")

    k1 = rhs(work)
    k2 = rhs(_axpy(work, 0.5 * dt, k1))
    k3 = rhs(_axpy(work, 0.5 * dt, k2))
    k4 = rhs(_axpy(work, dt, k3))

    def combine(i):
        return work_values[i] + dt / 6.0 * (
            k1[i].values + 2.0 * k2[i].values + 2.0 * k3[i].values + k4[i].values
        )

    work_values = (work.u.values, work.omega.values, work.beta.values)
    u_new = leray_project(Field(grid, combine(0)))
    omega_new = Field(grid, combine(1))
    third = combine(2)
    if formulation == "original":
        beta_new = Field(grid, np.sqrt(np.maximum(third, 0.0)))
    else:
        beta_new = Field(grid, third)
    out = State(state.t + dt, u_new, omega_new, beta_new)
    for f in (out.u, out.omega, out.beta):
        if not np.all(np.isfinite(f.values)):
            raise BlowUpError("non-finite state after step")
    return out


def enforce_positivity(state: State, params: ModelParams):
    """Clamp omega up to its floor and beta up to 0; report clamped mass."""
    w = state.omega.values
    b = state.beta.values
    w_clamped = np.maximum(w, params.omega_floor)
    b_clamped = np.maximum(b, 0.0)
    report = ClampReport(
        omega_l2=float(np.sqrt(np.mean((w_clamped - w) ** 2))),
        beta_l2=float(np.sqrt(np.mean((b_clamped - b) ** 2))),
    )
    if report.total == 0.0:
        return state, report
    return State(state.t, state.u, Field(state.grid, w_clamped), Field(state.grid, b_clamped)), report


@dataclass
class Trajectory:
    """Snapshots plus per-snapshot diagnostic rows for one run."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    status: str = "completed"
    reason: str | None = None
    steps: int = 0
    clamp_omega_total: float = 0.0
    clamp_beta_total: float = 0.0
    bounds0: DataBounds | None = None

    @property
    def final_state(self) -> State:
        return self.states[-1]

    @property
    def clamp_total(self) -> float:
        return self.clamp_omega_total + self.clamp_beta_total


def _diagnostic_row(
    state: State,
    dt: float,
    bounds0: DataBounds,
    params: ModelParams,
    control: StepControl,
    budget_res: dict,
    integral_A: float,
    A: float,
    clamp_total: float,
    decomp: DyadicDecomposition,
) -> dict:
    nan = float("nan")
    env = Envelopes(bounds0, params.alpha2)
    if "energies" in control.disabled:
        E_s = F_s = bold = nan
    else:
        E_s, F_s, bold = sobolev_energies(state, control.s, params, decomp)
    if "vacuum" in control.disabled:
        frac = nan
    else:
        frac, _ = vacuum_measure(state, control.eps_vac)
    envelopes_off = "envelopes" in control.disabled
    w = state.omega.values
    k = state.beta.values**2
    row = {
        "t": state.t,
        "dt": dt,
        "min_omega": float(w.min()),
        "max_omega": float(w.max()),
        "omega_min_env": nan if envelopes_off else env.omega_min(state.t),
        "omega_max_env": nan if envelopes_off else env.omega_max(state.t),
        "min_k": float(k.min()),
        "L2_u": l2_norm(state.u),
        "L2_omega": l2_norm(state.omega),
        "L2_beta": l2_norm(state.beta),
        "E_s": E_s,
        "F_s": F_s,
        "bold_E_s": bold,
        "A": A,
        "integral_A": integral_A,
        "vacuum_fraction": frac,
        "clamp_mass": clamp_total,
    }
    if "budgets" in control.disabled:
        row.update({key: nan for key in budget_res})
    else:
        row.update(budget_res)
    return row


def run_simulation(
    initial: State,
    params: ModelParams,
    control: StepControl,
) -> Trajectory:
    """Advance to t_end or until a blow-up signal fires.

    Blow-up signals: non-finite fields, step collapse below dt_min, and
    the running integral of the continuation integrand exceeding the
    configured threshold.  Diagnostics are evaluated every ``stride``
    steps plus at the first and last state; those snapshots are stored.
    """
    control.check_regularity_index(initial.grid.d)
    violations = initial.violations(params)
    if violations:
        raise InvalidInitialDataError(violations)

    bounds0 = DataBounds.from_state(initial)
    decomp = DyadicDecomposition(initial.grid)
    budget = EnergyBudget(params)
    traj = Trajectory(bounds0=bounds0)

    integral_A = 0.0
    prev_A = None
    prev_t = None

    monitor_A = "continuation" not in control.disabled

    def emit(state: State, dt: float):
        nonlocal integral_A, prev_A, prev_t
        if monitor_A:
            A = continuation_integrand(state, control.s, params)
            if prev_A is not None:
                integral_A += 0.5 * (A + prev_A) * (state.t - prev_t)
            prev_A, prev_t = A, state.t
        else:
            A = float("nan")
        res = budget.push(state)
        snap = state.copy()
        traj.times.append(state.t)
        traj.states.append(snap)
        traj.rows.append(
            _diagnostic_row(
                state, dt, bounds0, params, control, res,
                integral_A if monitor_A else float("nan"), A,
                traj.clamp_total, decomp,
            )
        )
        return A

    emit(initial, 0.0)
    state = initial
    t_end = control.t_end
    eps = 1e-12 * max(1.0, t_end)
    try:
        while state.t < t_end - eps:
            dt = compute_dt(state, params, control)
            if state.t + dt > t_end:
                dt = t_end - state.t
            state = rk4_step(state, dt, params, control.formulation)
            state, clamp = enforce_positivity(state, params)
            traj.steps += 1
            traj.clamp_omega_total += clamp.omega_l2
            traj.clamp_beta_total += clamp.beta_l2
            if traj.steps % control.stride == 0 or state.t >= t_end - eps:
                emit(state, dt)
                if monitor_A and integral_A > control.blowup_threshold:
                    raise BlowUpError(
                        f"integral of A(t) = {integral_A:.3e} exceeded "
                        f"threshold {control.blowup_threshold:.3e}"
                    )
    except BlowUpError as exc:
        traj.status = "blowup"
        traj.reason = str(exc)
        if not traj.times or traj.times[-1] < state.t:
            # final snapshot may be unfinished; store what is finite
            if all(np.all(np.isfinite(f.values)) for f in (state.u, state.omega, state.beta)):
                emit(state, 0.0)
    return traj
