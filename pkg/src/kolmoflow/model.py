"""The two-equation turbulence system on the torus.

Two equivalent formulations are provided.  The original one evolves
(u, omega, k) with eddy viscosity k/omega:

    du/dt + (u.grad)u + grad(pi) = nu  div((k/omega) Du)
    dw/dt + u.grad(omega)        = a1  div((k/omega) grad omega) - a2 omega^2
    dk/dt + u.grad(k)            = a3  div((k/omega) grad k) - k omega
                                   + a4 (k/omega) |Du|^2
    div u = 0,   Du = symmetric part of the velocity gradient.

The square-root formulation evolves beta = sqrt(k) instead and stays
regular where k vanishes; it is the prognostic form used by the stepper:

    db/dt + u.grad(beta) = a3 div((beta^2/omega) grad beta) - beta omega / 2
                           + (a4/2) (beta/omega) |Du|^2
                           + a3 (beta/omega) |grad beta|^2.

Diffusion is evaluated in divergence form (dealiased product a*grad(f),
then spectral divergence), which preserves the integration-by-parts
identities behind the energy budgets.  The pressure gradient is absorbed
by Leray projection inside the momentum tendency and can be reconstructed
on demand.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, FloorViolationError, ShapeError
from .spectral import (
    Field,
    TorusGrid,
    apply_derivative,
    dealias_contract,
    dealias_product,
    leray_project,
    l2_norm,
)


@dataclass(frozen=True)
class ModelParams:
    """Model constants nu, alpha_1..alpha_4 plus the numerical omega floor.

    The literature gives no canonical numeric values; the defaults are
    configuration, not ground truth.  beta is clamped at exactly 0 (no
    positive floor), so the degenerate regime is never regularised.
    """

    nu: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    alpha4: float = 1.0
    omega_floor: float = 1e-6

    beta_floor = 0.0

    def __post_init__(self):
        for name in ("nu", "alpha1", "alpha2", "alpha3", "alpha4"):
            if not getattr(self, name) > 0.0:
                raise ShapeError(f"model constant {name} must be strictly positive")
        if not self.omega_floor > 0.0:
            raise ShapeError("omega_floor must be strictly positive")


@dataclass
class DataBounds:
    """Initial pointwise bounds feeding the decay envelopes."""

    omega_star: float
    omega_upper_star: float
    k_star: float

    def __post_init__(self):
        if not (0.0 < self.omega_star <= self.omega_upper_star):
            raise ShapeError("need 0 < omega_star <= omega_upper_star")
        if self.k_star < 0.0:
            raise ShapeError("k_star must be nonnegative")

    @classmethod
    def from_state(cls, state: "State") -> "DataBounds":
        return cls(
            omega_star=float(state.omega.values.min()),
            omega_upper_star=float(state.omega.values.max()),
            k_star=float((state.beta.values**2).min()),
        )


class State:
    """Solution triplet (u, omega, beta) at time t; k = beta^2 on demand."""

    __slots__ = ("t", "u", "omega", "beta")

    def __init__(self, t: float, u: Field, omega: Field, beta: Field):
        if not (u.is_vector and omega.is_scalar and beta.is_scalar):
            raise ShapeError("state needs a vector u and scalar omega, beta")
        if not (u.grid == omega.grid == beta.grid):
            raise ShapeError("state fields must share one grid")
        self.t = float(t)
        self.u = u
        self.omega = omega
        self.beta = beta

    @property
    def grid(self) -> TorusGrid:
        return self.u.grid

    @property
    def k(self) -> Field:
        return Field(self.grid, self.beta.values**2)

    def copy(self) -> "State":
        return State(self.t, self.u.copy(), self.omega.copy(), self.beta.copy())

    def violations(self, params: ModelParams, div_tol: float = 1e-10):
        """Invariant violations as human-readable strings (empty if none)."""
        out = []
        div = apply_derivative(self.u, "divergence")
        div_max = float(np.max(np.abs(div.values)))
        if div_max > div_tol:
            out.append(f"div u = {div_max:.3e} exceeds {div_tol:.0e} in max norm")
        w_min = float(self.omega.values.min())
        if w_min < params.omega_floor:
            out.append(f"min omega = {w_min:.3e} below floor {params.omega_floor:.0e}")
        b_min = float(self.beta.values.min())
        if b_min < 0.0:
            out.append(f"min beta = {b_min:.3e} is negative")
        for name, fld in (("u", self.u), ("omega", self.omega), ("beta", self.beta)):
            if not np.all(np.isfinite(fld.values)):
                out.append(f"{name} contains non-finite values")
        return out


def _check_floor(omega: Field, params: ModelParams):
    w_min = float(omega.values.min())
    if w_min < params.omega_floor:
        raise FloorViolationError(
            f"min omega = {w_min:.6e} below floor {params.omega_floor:.6e}"
        )


def eddy_viscosity(state: State, params: ModelParams) -> Field:
    """Pointwise eddy viscosity beta^2/omega (= k/omega)."""
    _check_floor(state.omega, params)
    return Field(state.grid, state.beta.values**2 / state.omega.values)


def _transport(u: Field, f: Field) -> Field:
    """Dealiased u.grad(f) for scalar or vector f."""
    g = apply_derivative(f, "gradient")
    if f.is_scalar:
        return dealias_contract("i,i->", u, g)
    return dealias_contract("i,ij->j", u, g)


def _diffusion(coeff: Field, f: Field) -> Field:
    """div(coeff * grad f) in divergence form; for vectors grad -> Du."""
    if f.is_scalar:
        flux = dealias_product(coeff, apply_derivative(f, "gradient"))
    else:
        flux = dealias_product(coeff, apply_derivative(f, "sym_gradient"))
    return apply_derivative(flux, "divergence")


def _finite_or_blowup(*tendencies):
    for t in tendencies:
        if not np.all(np.isfinite(t.values)):
            raise BlowUpError("non-finite tendency")
    return tendencies


def _rhs_core(u: Field, omega: Field, third: Field, params: ModelParams, form: str):
    """Shared tendency pipeline for both formulations.

    Every nonlinear product follows the 2/3 rule (truncate inputs,
    multiply pointwise, truncate the grid product); the cubic source
    terms are nested as quadratic stages.  Transforms are batched over
    stacked components: the step loop is FFT-bound and per-call overhead
    would otherwise dominate on small grids.
    """
    # non-finite values end in a BlowUpError at the bottom; keep numpy quiet
    with np.errstate(invalid="ignore", over="ignore"):
        return _rhs_core_impl(u, omega, third, params, form)


def _rhs_core_impl(u: Field, omega: Field, third: Field, params: ModelParams, form: str):
    grid = u.grid
    d = grid.d
    n_tot = grid.npoints
    keep = grid.dealias_keep
    axes_last = tuple(range(-d, 0))
    ik = tuple(1j * k for k in grid.wavenumbers)

    def fwd(stack):
        c = np.fft.rfftn(stack, axes=axes_last) / n_tot
        return c * keep

    def inv(stack):
        return np.fft.irfftn(stack * n_tot, s=grid.shape, axes=axes_last)

    # band-limited spectra of the prognostic fields
    raw = np.concatenate([u.values, omega.values[None], third.values[None]])
    cbase = fwd(raw)
    cu, cw, ct = cbase[:d], cbase[d], cbase[d + 1]

    # derivatives in the band: Jacobian J[i, j] = d_i u_j, grad omega, grad third
    pshape = grid.spectral_shape
    J = np.empty((d, d) + pshape, dtype=complex)
    for i in range(d):
        for j in range(d):
            J[i, j] = ik[i] * cu[j]
    g_w = np.stack([ik[i] * cw for i in range(d)])
    g_t = np.stack([ik[i] * ct for i in range(d)])
    big = np.concatenate([cu, cw[None], ct[None], J.reshape((d * d,) + pshape), g_w, g_t])
    phys = inv(big)
    ub = phys[:d]
    wb = phys[d]
    tb = phys[d + 1]
    Jb = phys[d + 2 : d + 2 + d * d].reshape((d, d) + grid.shape)
    gwb = phys[d + 2 + d * d : d + 2 + d * d + d]
    gtb = phys[d + 2 + d * d + d :]

    # pointwise coefficients from the raw grid values
    if form == "beta":
        nut_raw = third.values**2 / omega.values
        ratio_raw = third.values / omega.values
    else:
        nut_raw = third.values / omega.values
        ratio_raw = nut_raw
    coeff = inv(fwd(np.stack([nut_raw, ratio_raw])))
    nut_b, ratio_b = coeff[0], coeff[1]

    Du_b = 0.5 * (Jb + np.swapaxes(Jb, 0, 1))
    shear_raw = np.einsum("ij...,ij...->...", Du_b, Du_b)
    if form == "beta":
        gt2_raw = np.einsum("i...,i...->...", gtb, gtb)
        aux = inv(fwd(np.stack([shear_raw, gt2_raw])))
        shear_b, gt2_b = aux[0], aux[1]
    else:
        shear_b = inv(fwd(shear_raw[None]))[0]
        gt2_b = None

    adv = np.einsum("i...,ij...->j...", ub, Jb)
    u_dot_gw = np.einsum("i...,i...->...", ub, gwb)
    u_dot_gt = np.einsum("i...,i...->...", ub, gtb)
    flux_u = nut_b * Du_b
    flux_w = nut_b * gwb
    flux_t = nut_b * gtb
    w_sq = wb * wb
    tw = tb * wb
    prod_shear = ratio_b * shear_b
    blocks = [adv, u_dot_gw[None], u_dot_gt[None], flux_u.reshape((d * d,) + grid.shape),
              flux_w, flux_t, w_sq[None], tw[None], prod_shear[None]]
    if form == "beta":
        blocks.append((ratio_b * gt2_b)[None])
    chat = fwd(np.concatenate(blocks))

    o = 0
    adv_h = chat[o : o + d]; o += d
    ugw_h = chat[o]; o += 1
    ugt_h = chat[o]; o += 1
    fluxU_h = chat[o : o + d * d].reshape((d, d) + pshape); o += d * d
    fluxW_h = chat[o : o + d]; o += d
    fluxT_h = chat[o : o + d]; o += d
    w2_h = chat[o]; o += 1
    tw_h = chat[o]; o += 1
    pshear_h = chat[o]; o += 1
    pgt2_h = chat[o] if form == "beta" else None

    du_h = np.stack(
        [
            -adv_h[j] + params.nu * sum(ik[i] * fluxU_h[i, j] for i in range(d))
            for j in range(d)
        ]
    )
    # Leray projection absorbs the pressure gradient
    k2 = np.where(grid.k2 == 0.0, 1.0, grid.k2)
    kdot = sum(grid.wavenumbers[i] * du_h[i] for i in range(d))
    du_h = np.stack([du_h[i] - grid.wavenumbers[i] * kdot / k2 for i in range(d)])

    dw_h = -ugw_h + params.alpha1 * sum(ik[i] * fluxW_h[i] for i in range(d)) \
        - params.alpha2 * w2_h
    div_fluxT = sum(ik[i] * fluxT_h[i] for i in range(d))
    if form == "beta":
        dt_h = (
            -ugt_h
            + params.alpha3 * div_fluxT
            - 0.5 * tw_h
            + 0.5 * params.alpha4 * pshear_h
            + params.alpha3 * pgt2_h
        )
    else:
        dt_h = -ugt_h + params.alpha3 * div_fluxT - tw_h + params.alpha4 * pshear_h

    tend = inv(np.concatenate([du_h, dw_h[None], dt_h[None]]))
    du = Field(grid, tend[:d], spec=du_h)
    dw = Field(grid, tend[d], spec=dw_h)
    dt = Field(grid, tend[d + 1], spec=dt_h)
    return _finite_or_blowup(du, dw, dt)


def rhs_beta(state: State, params: ModelParams):
    """Tendencies (du/dt, domega/dt, dbeta/dt) of the square-root form.

    All nonlinear products are dealiased; the momentum tendency is Leray
    projected, absorbing the pressure gradient.
    """
    _check_floor(state.omega, params)
    return _rhs_core(state.u, state.omega, state.beta, params, "beta")


def rhs_original(u: Field, omega: Field, k: Field, params: ModelParams):
    """Tendencies (du/dt, domega/dt, dk/dt) of the original (u, omega, k) form."""
    _check_floor(omega, params)
    return _rhs_core(u, omega, k, params, "original")


def recover_pressure_gradient(state: State, params: ModelParams) -> Field:
    """grad(pi) reconstructed from the elliptic problem it satisfies.

    Taking the divergence of the momentum equation and inverting the
    (zero-mean, periodic) Laplacian gives

        grad pi = -nu grad (-Lap)^-1 div div((k/omega) Du)
                  + grad (-Lap)^-1 div((u.grad) u).

    Subtracting the result from the unprojected momentum tendency yields
    a divergence-free total.
    """
    _check_floor(state.omega, params)
    grid = state.grid
    nut = eddy_viscosity(state, params)
    Du = apply_derivative(state.u, "sym_gradient")
    M = dealias_product(nut, Du)
    adv = _transport(state.u, state.u)

    kk = grid.wavenumbers
    ddM = np.zeros(grid.spectral_shape, dtype=complex)
    for i in range(grid.d):
        for j in range(grid.d):
            ddM -= kk[i] * kk[j] * M.spec[i, j]
    div_adv = sum(1j * kk[i] * adv.spec[i] for i in range(grid.d))

    k2 = np.where(grid.k2 == 0.0, 1.0, grid.k2)
    pi_hat = (div_adv - params.nu * ddM) / k2
    pi_hat[(0,) * grid.d] = 0.0
    grad_pi = np.stack([1j * kk[i] * pi_hat for i in range(grid.d)])
    return Field.from_spectral(grid, grad_pi)


def unprojected_momentum_tendency(state: State, params: ModelParams) -> Field:
    """-(u.grad)u + nu div((k/omega) Du), before pressure/projection."""
    nut = eddy_viscosity(state, params)
    adv = _transport(state.u, state.u)
    visc = _diffusion(nut, state.u)
    return Field(state.grid, -adv.values + params.nu * visc.values)


def lift_initial_data(k0: Field, eps: float) -> Field:
    """Lift k0 away from vacuum: (sqrt(k0) + eps)^2 >= eps^2."""
    if not k0.is_scalar:
        raise ShapeError("lift_initial_data expects a scalar field")
    if eps < 0.0:
        raise ShapeError("eps must be nonnegative")
    vals = k0.values
    if float(vals.min()) < -1e-12:
        raise ShapeError(f"k0 has negative values (min {vals.min():.3e})")
    vals = np.maximum(vals, 0.0)
    return Field(k0.grid, (np.sqrt(vals) + eps) ** 2)
