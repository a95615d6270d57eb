"""Named brute-force oracles.

Each oracle checks a code path against an independent evaluation: direct
trigonometric series summation, dictionary-based spectral convolution,
closed-form homogeneous decay, a finite-difference tendency evaluation on
a refined grid, and the per-mode Helmholtz projection formula.  The test
suite freezes expected values computed by these routines; the CLI exposes
them by name for ad-hoc runs.
"""

import numpy as np

from .errors import ShapeError
from .model import ModelParams, State
from .spectral import Field, TorusGrid, dealias_product, leray_project, to_physical


# ---------------------------------------------------------------------------
# direct series summation (oracle for to_physical)


def series_sum(modes: dict, points) -> np.ndarray:
    """Evaluate sum_k c_k exp(i k.x) at arbitrary points.

    ``modes`` maps wavevector tuples to complex coefficients; conjugate
    modes must be supplied explicitly.  ``points`` is an (m, d) array.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(points.shape[0], dtype=complex)
    for k, c in modes.items():
        out += c * np.exp(1j * points @ np.asarray(k, dtype=float))
    return out.real


def modes_to_packed(grid: TorusGrid, modes: dict) -> np.ndarray:
    """Place a mode dictionary into the packed coefficient layout."""
    coeffs = np.zeros(grid.spectral_shape, dtype=complex)
    for k, c in modes.items():
        k = tuple(int(x) for x in k)
        if len(k) != grid.d:
            raise ShapeError(f"mode {k} has wrong dimension")
        if k[-1] < 0:
            continue  # conjugate partner is implicit in the packed layout
        idx = tuple(x % grid.n for x in k[:-1]) + (k[-1],)
        coeffs[idx] = c
    return coeffs


# ---------------------------------------------------------------------------
# dictionary convolution (oracle for dealias_product)


def convolve_modes(f_modes: dict, g_modes: dict) -> dict:
    """Exact spectral convolution of two mode dictionaries."""
    out = {}
    for k1, c1 in f_modes.items():
        for k2, c2 in g_modes.items():
            k = tuple(a + b for a, b in zip(k1, k2))
            out[k] = out.get(k, 0.0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0.0}


def truncate_modes(modes: dict, n: int) -> dict:
    """Apply the 2/3 rule to a mode dictionary (drop any |k_i| >= n/3)."""
    return {
        k: c for k, c in modes.items() if all(abs(ki) < n / 3.0 for ki in k)
    }


def dealias_product_oracle(grid: TorusGrid, f_modes: dict, g_modes: dict) -> dict:
    """Truncate inputs, convolve exactly, truncate the result."""
    fm = truncate_modes(f_modes, grid.n)
    gm = truncate_modes(g_modes, grid.n)
    return truncate_modes(convolve_modes(fm, gm), grid.n)


# ---------------------------------------------------------------------------
# closed-form homogeneous decay (oracle for the time stepper)


def homogeneous_decay(t, omega0: float, k0: float, alpha2: float):
    """(omega(t), k(t)) for spatially constant data with u = 0.

    omega follows the Riccati decay omega0/(1 + alpha2 omega0 t) and k
    decays along it as k0 (1 + alpha2 omega0 t)^(-1/alpha2).
    """
    t = np.asarray(t, dtype=float)
    growth = 1.0 + alpha2 * omega0 * t
    return omega0 / growth, k0 * growth ** (-1.0 / alpha2)


# ---------------------------------------------------------------------------
# finite-difference tendency evaluation (oracle for the RHS assembly)


def _fd_partial(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    """4th-order central difference on a periodic axis."""
    r = np.roll
    return (
        -r(values, -2, axis) + 8.0 * r(values, -1, axis)
        - 8.0 * r(values, 1, axis) + r(values, 2, axis)
    ) / (12.0 * h)


def fd_rhs_terms(
    grid: TorusGrid,
    u_funcs,
    omega_func,
    beta_func,
    params: ModelParams,
    fine_factor: int = 4,
) -> dict:
    """Finite-difference evaluation of every tendency term on a refined
    grid, restricted to the coarse collocation points.

    ``u_funcs`` is a tuple of d callables and ``omega_func``/``beta_func``
    are callables, all taking d coordinate arrays.  The momentum entry is
    the unprojected tendency (projection is checked separately against
    the per-mode Helmholtz formula).
    """
    m = fine_factor * grid.n
    h = 2.0 * np.pi / m
    axes_1d = [np.arange(m) * h for _ in range(grid.d)]
    mesh = np.meshgrid(*axes_1d, indexing="ij")
    u = np.stack([np.asarray(f(*mesh), dtype=float) for f in u_funcs])
    w = np.asarray(omega_func(*mesh), dtype=float)
    b = np.asarray(beta_func(*mesh), dtype=float)

    d = grid.d
    du = np.stack([np.stack([_fd_partial(u[j], i, h) for j in range(d)]) for i in range(d)])
    Du = 0.5 * (du + np.swapaxes(du, 0, 1))
    gw = np.stack([_fd_partial(w, i, h) for i in range(d)])
    gb = np.stack([_fd_partial(b, i, h) for i in range(d)])

    nut = b * b / w
    ratio = b / w
    shear = np.einsum("ij...,ij...->...", Du, Du)
    gb2 = np.einsum("i...,i...->...", gb, gb)

    def div_of(flux):
        return sum(_fd_partial(flux[i], i, h) for i in range(d))

    terms = {
        "u_transport": -np.einsum("i...,ij...->j...", u, du),
        "u_diffusion": params.nu * np.stack(
            [div_of(np.stack([nut * Du[i, j] for i in range(d)])) for j in range(d)]
        ),
        "omega_transport": -np.einsum("i...,i...->...", u, gw),
        "omega_diffusion": params.alpha1 * div_of(nut * gw),
        "omega_sink": -params.alpha2 * w * w,
        "beta_transport": -np.einsum("i...,i...->...", u, gb),
        "beta_diffusion": params.alpha3 * div_of(nut * gb),
        "beta_sink": -0.5 * b * w,
        "beta_production": 0.5 * params.alpha4 * ratio * shear,
        "beta_gradient_source": params.alpha3 * ratio * gb2,
    }
    coarse = (...,) + (slice(None, None, fine_factor),) * grid.d
    return {key: val[coarse] for key, val in terms.items()}


# ---------------------------------------------------------------------------
# per-mode Helmholtz projection (oracle for leray_project)


def helmholtz_project_modes(modes: dict) -> dict:
    """Project a vector mode dictionary: c -> c - k (k.c)/|k|^2.

    ``modes`` maps wavevectors to coefficient vectors (length d).
    """
    out = {}
    for k, c in modes.items():
        kv = np.asarray(k, dtype=float)
        cv = np.asarray(c, dtype=complex)
        k2 = float(kv @ kv)
        if k2 == 0.0:
            out[k] = cv
        else:
            out[k] = cv - kv * (kv @ cv) / k2
    return out


# ---------------------------------------------------------------------------
# named registry used by the CLI


def _grid_points(grid: TorusGrid):
    mesh = np.meshgrid(*[np.arange(grid.n) * grid.dx for _ in range(grid.d)], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _run_series_oracle() -> dict:
    grid = TorusGrid(2, 16)
    modes = {(1, 0): 0.5, (-1, 0): 0.5, (2, 1): 0.25 - 0.1j, (-2, -1): 0.25 + 0.1j}
    f = to_physical(grid, modes_to_packed(grid, modes))
    pts = _grid_points(grid)
    rng = np.random.default_rng(0)
    sample = rng.choice(pts.shape[0], size=16, replace=False)
    expect = series_sum(modes, pts[sample])
    got = f.values.ravel()[sample]
    return {
        "name": "series",
        "max_error": float(np.max(np.abs(got - expect))),
        "tolerance": 1e-12,
    }


def _run_convolution_oracle() -> dict:
    grid = TorusGrid(2, 8)
    f_modes = {(1, 0): 0.5, (-1, 0): 0.5}
    expect = dealias_product_oracle(grid, f_modes, f_modes)
    f = to_physical(grid, modes_to_packed(grid, f_modes))
    prod = dealias_product(f, f)
    got = to_physical(grid, modes_to_packed(grid, expect))
    err = float(np.max(np.abs(prod.values - got.values)))
    return {"name": "convolution", "max_error": err, "tolerance": 1e-13}


def _run_riccati_oracle() -> dict:
    from .initial_data import homogeneous
    from .stepper import StepControl, run_simulation

    grid = TorusGrid(2, 8)
    params = ModelParams(alpha2=1.0)
    state = homogeneous(grid, omega0=1.0, beta0=1.0)
    control = StepControl(t_end=1.0, cfl_safety=1.0, dt_max=1e-3, stride=200, s=2.5)
    traj = run_simulation(state, params, control)
    w_exp, k_exp = homogeneous_decay(1.0, 1.0, 1.0, 1.0)
    final = traj.final_state
    err = max(
        abs(float(final.omega.values.flat[0]) - w_exp),
        abs(float(final.beta.values.flat[0]) ** 2 - k_exp),
    )
    return {"name": "riccati", "max_error": err, "tolerance": 1e-10}


def _run_fd_oracle() -> dict:
    from .model import rhs_beta, unprojected_momentum_tendency

    grid = TorusGrid(2, 64)
    params = ModelParams()
    u_funcs = (lambda x, y: np.sin(y), lambda x, y: 0.0 * x)
    omega_func = lambda x, y: 2.0 + np.cos(x)
    beta_func = lambda x, y: 1.0 + 0.0 * x
    terms = fd_rhs_terms(grid, u_funcs, omega_func, beta_func, params, fine_factor=8)

    mesh = np.meshgrid(*[np.arange(grid.n) * grid.dx] * 2, indexing="ij")
    state = State(
        0.0,
        Field(grid, np.stack([f(*mesh) + np.zeros(grid.shape) for f in u_funcs])),
        Field(grid, omega_func(*mesh) + np.zeros(grid.shape)),
        Field(grid, beta_func(*mesh) + np.zeros(grid.shape)),
    )
    du, dw, db = rhs_beta(state, params)
    fd_dw = terms["omega_transport"] + terms["omega_diffusion"] + terms["omega_sink"]
    fd_db = (
        terms["beta_transport"]
        + terms["beta_diffusion"]
        + terms["beta_sink"]
        + terms["beta_production"]
        + terms["beta_gradient_source"]
    )
    fd_du = terms["u_transport"] + terms["u_diffusion"]
    unproj = unprojected_momentum_tendency(state, params)
    err = max(
        float(np.max(np.abs(dw.values - fd_dw))),
        float(np.max(np.abs(db.values - fd_db))),
        float(np.max(np.abs(unproj.values - fd_du))),
    )
    return {"name": "fd-rhs", "max_error": err, "tolerance": 1e-6}


def _run_helmholtz_oracle() -> dict:
    grid = TorusGrid(2, 16)
    rng = np.random.default_rng(3)
    modes = {}
    for _ in range(6):
        k = (int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        c = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        modes[k] = c
        modes[tuple(-x for x in k)] = np.conj(c)
    packed = np.stack(
        [modes_to_packed(grid, {k: c[i] for k, c in modes.items()}) for i in range(2)]
    )
    u = to_physical(grid, packed)
    projected = leray_project(u)
    expect_modes = helmholtz_project_modes(modes)
    packed_exp = np.stack(
        [modes_to_packed(grid, {k: c[i] for k, c in expect_modes.items()}) for i in range(2)]
    )
    expect = to_physical(grid, packed_exp)
    err = float(np.max(np.abs(projected.values - expect.values)))
    return {"name": "helmholtz", "max_error": err, "tolerance": 1e-12}


ORACLES = {
    "series": _run_series_oracle,
    "convolution": _run_convolution_oracle,
    "riccati": _run_riccati_oracle,
    "fd-rhs": _run_fd_oracle,
    "helmholtz": _run_helmholtz_oracle,
}


def run_oracle(name: str) -> dict:
    """Run one named oracle; result includes max_error, tolerance, passed."""
    if name not in ORACLES:
        raise ShapeError(
            f"unknown oracle {name!r}; choose from {', '.join(sorted(ORACLES))}"
        )
    res = ORACLES[name]()
    res["passed"] = bool(res["max_error"] <= res["tolerance"])
    return res
