"""Quantitative monitors for simulation states and trajectories.

Everything the well-posedness theory controls is computed here as a
numerical observable: the Riccati decay envelopes sandwiching omega, the
L2 energy budgets with their signed residuals, the dyadic Sobolev
energies (plain and weighted by beta/sqrt(omega)), the continuation
integrand whose time integral diverges exactly at blow-up, the lifespan
lower bound, vacuum-region statistics, and the twin-run stability
functional with its Gronwall fit.

Conventions: all L2 quantities use the normalised torus measure; sup
norms are evaluated on 2x oversampled grids; [s] is floor(s).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, TrajectoryMismatchError
from .lp import DyadicDecomposition
from .model import DataBounds, ModelParams, State, _check_floor
from .spectral import (
    Field,
    apply_derivative,
    gradient_array,
    l2_norm,
    oversample_array,
    sup_norm,
)


# ---------------------------------------------------------------------------
# pointwise envelopes


@dataclass(frozen=True)
class Envelopes:
    """Riccati decay envelopes derived from the initial bounds.

    omega is sandwiched between omega_star/(omega_star*a2*t + 1) and the
    same expression with omega_upper_star.  For k two lower bounds are
    carried: the one obtained from the homogeneous decay ODE,
    k_star*(1 + a2*omega_upper_star*t)^(-1/a2), and the weaker
    time-independent constant k_star/(omega_upper_star*a2 + 1)^(1/a2);
    the ODE form drives the pass/fail margin, both are reported.
    """

    bounds: DataBounds
    alpha2: float

    def omega_min(self, t: float) -> float:
        w = self.bounds.omega_star
        return w / (w * self.alpha2 * t + 1.0)

    def omega_max(self, t: float) -> float:
        w = self.bounds.omega_upper_star
        return w / (w * self.alpha2 * t + 1.0)

    def k_min(self, t: float) -> float:
        a2 = self.alpha2
        return self.bounds.k_star * (1.0 + a2 * self.bounds.omega_upper_star * t) ** (
            -1.0 / a2
        )

    def k_min_printed(self, t: float) -> float:
        a2 = self.alpha2
        return self.bounds.k_star / (self.bounds.omega_upper_star * a2 + 1.0) ** (1.0 / a2)


@dataclass
class EnvelopeMargins:
    t: float
    omega_low: float  # min(omega) - omega_min(t)
    omega_high: float  # omega_max(t) - max(omega)
    k_low: float  # min(k) - k_min(t)
    k_low_printed: float
    tol: float
    passed: bool


def envelope_check(
    state: State, bounds0: DataBounds, params: ModelParams
) -> EnvelopeMargins:
    """Margins of the pointwise decay envelopes; pass iff all >= -tol."""
    env = Envelopes(bounds0, params.alpha2)
    t = state.t
    w = state.omega.values
    kmin = float((state.beta.values**2).min())
    m_low = float(w.min()) - env.omega_min(t)
    m_high = env.omega_max(t) - float(w.max())
    m_k = kmin - env.k_min(t)
    m_k_printed = kmin - env.k_min_printed(t)
    tol = 1e-6 * bounds0.omega_star
    passed = m_low >= -tol and m_high >= -tol and m_k >= -tol
    return EnvelopeMargins(t, m_low, m_high, m_k, m_k_printed, tol, passed)


# ---------------------------------------------------------------------------
# energy budgets


def _budget_integrands(state: State, params: ModelParams):
    nut = state.beta.values**2 / state.omega.values
    Du = apply_derivative(state.u, "sym_gradient")
    shear = np.sum(Du.values**2, axis=(0, 1))
    gw = apply_derivative(state.omega, "gradient")
    grad_w2 = np.sum(gw.values**2, axis=0)
    w = state.omega.values
    b = state.beta.values
    k = b * b
    return {
        "visc_u": float(np.mean(nut * shear)),
        "visc_w": float(np.mean(nut * grad_w2)),
        "cube_w": float(np.mean(w**3)),
        "k_omega": float(np.mean(k * w)),
        "b2_omega": float(np.mean(b * b * w)),
    }


class EnergyBudget:
    """Running residuals of the four L2 identities/inequalities.

    Residuals of the u and omega budgets are identity defects that vanish
    with time refinement; the k and beta budgets carry the production
    term bounded through the u budget, so their residuals are one-sided
    margins that must stay <= 0.  Time integrals use the trapezoid rule
    over pushed snapshots.
    """

    def __init__(self, params: ModelParams):
        self.params = params
        self.times: list[float] = []
        self._integrands: dict[str, list[float]] = {
            key: [] for key in ("visc_u", "visc_w", "cube_w", "k_omega", "b2_omega")
        }
        self._ref = None
        self._series: dict[str, list[float]] = {
            key: [] for key in ("residual_3_3", "residual_3_4", "residual_3_5", "residual_3_6")
        }

    def push(self, state: State) -> dict:
        p = self.params
        vals = _budget_integrands(state, p)
        u2 = l2_norm(state.u) ** 2
        w2 = l2_norm(state.omega) ** 2
        b2 = l2_norm(state.beta) ** 2
        kmean = float(np.mean(state.beta.values**2))
        if self._ref is None:
            self._ref = {"u2": u2, "w2": w2, "b2": b2, "k": kmean}
        self.times.append(state.t)
        for key, v in vals.items():
            self._integrands[key].append(v)
        t = np.asarray(self.times)

        def trap(key):
            return float(np.trapezoid(np.asarray(self._integrands[key]), t))

        ref = self._ref
        res = {
            "residual_3_3": u2 + 2.0 * p.nu * trap("visc_u") - ref["u2"],
            "residual_3_4": w2
            + 2.0 * p.alpha1 * trap("visc_w")
            + 2.0 * p.alpha2 * trap("cube_w")
            - ref["w2"],
            "residual_3_5": kmean
            + trap("k_omega")
            - 0.5 * p.alpha4 / p.nu * ref["u2"]
            - ref["k"],
            "residual_3_6": b2
            + trap("b2_omega")
            - 0.5 * p.alpha4 / p.nu * ref["u2"]
            - ref["b2"],
        }
        for key, v in res.items():
            self._series[key].append(v)
        return res

    def series(self, key: str):
        return np.asarray(self._series[key])


def energy_budget(states, params: ModelParams) -> dict:
    """Residual series over a window of >= 2 snapshots."""
    states = list(states)
    if len(states) < 2:
        raise ShapeError("energy_budget needs at least 2 consecutive snapshots")
    acc = EnergyBudget(params)
    for st in states:
        acc.push(st)
    return {key: acc.series(key) for key in acc._series}


# ---------------------------------------------------------------------------
# dyadic Sobolev energies


def sobolev_energies(
    state: State,
    s: float,
    params: ModelParams,
    decomp: DyadicDecomposition | None = None,
):
    """(E_s, F_s, bold_E_s) of the solution triplet.

    E_s sums 2^{2js} ||Delta_j .||_L2^2 over (u, omega, beta); F_s is the
    same sum with the degenerate weight beta/sqrt(omega) inserted in
    front of Delta_j Du, grad Delta_j omega and grad Delta_j beta;
    bold_E_s adds the L2 part to E_s.
    """
    _check_floor(state.omega, params)
    grid = state.grid
    if decomp is None:
        decomp = DyadicDecomposition(grid)
    weight = state.beta.values / np.sqrt(state.omega.values)
    w2 = weight**2

    Du = apply_derivative(state.u, "sym_gradient")
    gw = apply_derivative(state.omega, "gradient")
    gb = apply_derivative(state.beta, "gradient")

    E_s = 0.0
    F_s = 0.0
    for j in range(decomp.j_min, decomp.j_max + 1):
        factor = 4.0 ** (j * s)
        E_s += factor * (
            decomp.block_l2sq(j, state.u)
            + decomp.block_l2sq(j, state.omega)
            + decomp.block_l2sq(j, state.beta)
        )
        f_j = 0.0
        for fld in (Du, gw, gb):
            blk = decomp.block(j, fld)
            mag2 = np.sum(blk.values**2, axis=tuple(range(blk.values.ndim - grid.d)))
            f_j += float(np.mean(w2 * mag2))
        F_s += factor * f_j
    l2_part = l2_norm(state.u) ** 2 + l2_norm(state.omega) ** 2 + l2_norm(state.beta) ** 2
    return E_s, F_s, l2_part + E_s


# ---------------------------------------------------------------------------
# continuation integrand


def continuation_integrand(
    state: State, s: float, params: ModelParams, oversample: int = 2
) -> float:
    """The blow-up monitor

        A = ||(grad u, grad omega, grad beta)||_Linf^([s]+4)
            + (1 + ||grad beta||_Linf) (1 + ||grad omega||_Linf^[s])
              * sum_G ||grad((beta/sqrt(omega)) G)||_Linf

    with G running over {Du, grad omega, grad beta}; its time integral
    stays finite exactly on intervals where the solution extends.
    """
    _check_floor(state.omega, params)
    grid = state.grid
    J = apply_derivative(state.u, "gradient")
    gw = apply_derivative(state.omega, "gradient")
    gb = apply_derivative(state.beta, "gradient")
    sup_J = sup_norm(grid, J.values, oversample)
    sup_gw = sup_norm(grid, gw.values, oversample)
    sup_gb = sup_norm(grid, gb.values, oversample)
    s_int = math.floor(s)
    term1 = max(sup_J, sup_gw, sup_gb) ** (s_int + 4)

    weight = state.beta.values / np.sqrt(state.omega.values)
    Du = apply_derivative(state.u, "sym_gradient")
    weighted_sum = 0.0
    for G in (Du, gw, gb):
        H = weight * G.values
        grad_H = gradient_array(grid, H)
        weighted_sum += sup_norm(grid, grad_H, oversample)
    return term1 + (1.0 + sup_gb) * (1.0 + sup_gw**s_int) * weighted_sum


def lifespan_lower_bound(energy0: float, s: float, C: float = 1.0) -> float:
    """min(1, C / (E0 (1+E0)^(2[s]+3))); equals 1 for small data.

    C is a reported normalisation (the theory only provides existence of
    a constant), default 1.
    """
    if energy0 < 0.0 or C <= 0.0:
        raise ShapeError("need energy0 >= 0 and C > 0")
    if energy0 == 0.0:
        return 1.0
    expo = 2 * math.floor(s) + 3
    return min(1.0, C / (energy0 * (1.0 + energy0) ** expo))


# ---------------------------------------------------------------------------
# vacuum statistics


def vacuum_measure(state: State, eps_vac: float):
    """(fraction of grid points with k < eps_vac, vacuum boundary cells).

    A boundary cell is a below-threshold point with at least one
    above-threshold face neighbour (periodic).
    """
    if eps_vac <= 0.0:
        raise ShapeError("eps_vac must be positive")
    k = state.beta.values**2
    below = k < eps_vac
    fraction = float(below.mean())
    above = ~below
    neighbour_above = np.zeros_like(below)
    for ax in range(state.grid.d):
        neighbour_above |= np.roll(above, 1, axis=ax) | np.roll(above, -1, axis=ax)
    boundary = int(np.sum(below & neighbour_above))
    return fraction, boundary


# ---------------------------------------------------------------------------
# twin-run stability


@dataclass
class StabilityReport:
    """Per-snapshot stability functional and its Gronwall fit.

    energy[i] = ||u1-u2||^2 + ||w1-w2||^2 + ||b1-b2||^2 at times[i];
    theta[i] is the assembled L-infinity integrand; c_fit is the smallest
    constant with energy <= energy[0] * exp(c_fit * int theta) at every
    snapshot; bound[i] evaluates that right-hand side.
    """

    times: np.ndarray
    energy: np.ndarray
    theta: np.ndarray
    int_theta: np.ndarray
    c_fit: float
    bound: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.bound is None:
            self.bound = self.energy[0] * np.exp(self.c_fit * self.int_theta)


def _stability_theta(s1: State, s2: State, oversample: int = 2) -> float:
    """Theta(t) assembled from the sup norms entering the L2 stability estimate."""
    grid = s1.grid
    ov = lambda f: oversample_array(grid, f, oversample)
    b1, w1 = ov(s1.beta.values), ov(s1.omega.values)
    b2v, w2 = ov(s2.beta.values), ov(s2.omega.values)

    gu = max(
        sup_norm(grid, apply_derivative(s.u, "gradient").values, oversample)
        for s in (s1, s2)
    )
    gw = max(
        sup_norm(grid, apply_derivative(s.omega, "gradient").values, oversample)
        for s in (s1, s2)
    )
    gb = max(
        sup_norm(grid, apply_derivative(s.beta, "gradient").values, oversample)
        for s in (s1, s2)
    )
    sup_b = max(float(np.max(np.abs(b1))), float(np.max(np.abs(b2v))))

    r_b_ww = float(np.max(np.abs(b1 / (w2 * np.sqrt(np.abs(w1))))))
    r_sw = float(np.max(np.sqrt(np.abs(w1)) / np.abs(w2)))
    r_iw1 = float(np.max(1.0 / np.abs(w1)))
    r_iw2 = float(np.max(1.0 / np.abs(w2)))
    r_b_w1w2 = float(np.max(np.abs(b1 / (w1 * w2))))

    bracket12 = r_b_ww**2 + r_sw**2 + r_iw2
    theta1 = gu + gu**2 * bracket12
    theta2 = gw + gw**2 * bracket12
    gub = max(gu, gb)
    theta3 = gub + sup_b + gub**2 * (r_b_ww**2 + r_sw**2 + max(r_iw1, r_iw2) + r_b_w1w2)
    return theta1 + theta2 + theta3


def twin_stability(traj1, traj2, params: ModelParams, oversample: int = 2) -> StabilityReport:
    """Stability functional of two trajectories sharing grid and times.

    Checks energy(t) <= energy(0) * exp(c_fit * int_0^t Theta) with the
    smallest c_fit making it hold at all snapshots (0 when the energy
    never exceeds its initial value).
    """
    t1 = np.asarray(traj1.times)
    t2 = np.asarray(traj2.times)
    n = min(t1.size, t2.size)
    if n == 0 or not np.allclose(t1[:n], t2[:n], rtol=0.0, atol=1e-12):
        raise TrajectoryMismatchError("snapshot times differ")
    if traj1.states[0].grid != traj2.states[0].grid:
        raise TrajectoryMismatchError("grids differ")

    times = t1[:n]
    energy = np.empty(n)
    theta = np.empty(n)
    for i in range(n):
        a, b = traj1.states[i], traj2.states[i]
        U = Field(a.grid, a.u.values - b.u.values)
        Sg = Field(a.grid, a.omega.values - b.omega.values)
        B = Field(a.grid, a.beta.values - b.beta.values)
        energy[i] = l2_norm(U) ** 2 + l2_norm(Sg) ** 2 + l2_norm(B) ** 2
        theta[i] = _stability_theta(a, b, oversample)

    int_theta = np.concatenate(
        ([0.0], np.cumsum(0.5 * (theta[1:] + theta[:-1]) * np.diff(times)))
    )
    c_fit = 0.0
    if energy[0] > 0.0:
        grow = (energy[1:] > energy[0]) & (int_theta[1:] > 0.0)
        if np.any(grow):
            c_fit = float(
                np.max(np.log(energy[1:][grow] / energy[0]) / int_theta[1:][grow])
            )
    elif np.any(energy > 0.0):
        c_fit = math.inf
    return StabilityReport(times, energy, theta, int_theta, c_fit)
