"""Named initial-data families.

Every family returns a State satisfying the well-posedness hypotheses:
u0 is divergence-free (Leray projection applied where needed), omega0 is
bounded away from zero, and beta0 is pointwise nonnegative.  Random
fields are band-limited with a configurable spectral decay so gradient
norms are resolution-independent.
"""

import numpy as np

from .errors import ConfigError
from .model import State
from .spectral import Field, TorusGrid, dealias, leray_project


def _zero_vector(grid: TorusGrid) -> Field:
    return Field(grid, np.zeros((grid.d,) + grid.shape))


def _constant(grid: TorusGrid, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))


def homogeneous(grid: TorusGrid, omega0: float, beta0: float) -> State:
    """Spatially constant (omega0, beta0) with u = 0."""
    if omega0 <= 0.0:
        raise ConfigError("homogeneous family needs omega0 > 0")
    if beta0 < 0.0:
        raise ConfigError("homogeneous family needs beta0 >= 0")
    return State(0.0, _zero_vector(grid), _constant(grid, omega0), _constant(grid, beta0))


def taylor_green(
    grid: TorusGrid, amplitude: float, omega0: float = 1.0, beta0: float = 0.0
) -> State:
    """Taylor-Green vortex velocity with constant omega0, beta0."""
    if grid.d == 1:
        raise ConfigError("taylor_green needs d >= 2")
    x = grid.coords
    zz = np.zeros(grid.shape)
    if grid.d == 2:
        u = np.stack(
            [np.sin(x[0]) * np.cos(x[1]) + zz, -np.cos(x[0]) * np.sin(x[1]) + zz]
        )
    else:
        u = np.stack(
            [
                np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]) + zz,
                -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]) + zz,
                zz.copy(),
            ]
        )
    uf = Field(grid, amplitude * u)
    return State(0.0, uf, _constant(grid, omega0), _constant(grid, beta0))


def single_mode(
    grid: TorusGrid,
    field: str,
    k,
    amplitude: float,
    omega0: float = 1.0,
    beta0: float = 0.0,
) -> State:
    """One trigonometric mode added to a homogeneous background.

    For field='u' the mode is projected divergence-free; for 'omega' and
    'beta' the background must dominate the amplitude so positivity holds.
    """
    k = np.asarray(k, dtype=float)
    if k.shape != (grid.d,):
        raise ConfigError(f"mode k must have {grid.d} components")
    phase = sum(k[i] * grid.coords[i] for i in range(grid.d)) + np.zeros(grid.shape)
    wave = np.sin(phase)
    u = _zero_vector(grid)
    omega = _constant(grid, omega0)
    beta = _constant(grid, beta0)
    if field == "u":
        vec = np.zeros((grid.d,) + grid.shape)
        vec[0] = amplitude * wave
        u = leray_project(Field(grid, vec))
    elif field == "omega":
        if omega0 - abs(amplitude) <= 0.0:
            raise ConfigError("single_mode omega needs omega0 > |amplitude|")
        omega = Field(grid, omega0 + amplitude * wave)
    elif field == "beta":
        if beta0 - abs(amplitude) < 0.0:
            raise ConfigError("single_mode beta needs beta0 >= |amplitude|")
        beta = Field(grid, beta0 + amplitude * wave)
    else:
        raise ConfigError(f"single_mode field must be u/omega/beta, got {field!r}")
    return State(0.0, u, omega, beta)


def _random_band_scalar(grid: TorusGrid, rng, band, decay: float) -> Field:
    """Zero-mean random field with modes in [band[0], band[1]], smoothed by
    a Gaussian spectral envelope exp(-(|k|/decay)^2) so gradients stay
    resolution-independent."""
    k_lo, k_hi = band
    coeffs = np.zeros(grid.spectral_shape, dtype=complex)
    kmag = grid.kmag
    sel = (kmag >= k_lo) & (kmag <= k_hi) & grid.dealias_keep
    amp = rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(
        grid.spectral_shape
    )
    coeffs[sel] = amp[sel] * np.exp(-((kmag[sel] / decay) ** 2))
    coeffs[(0,) * grid.d] = 0.0
    # realness: build from the inverse transform of the symmetrised packing
    values = np.fft.irfftn(coeffs * grid.npoints, s=grid.shape, axes=tuple(range(grid.d)))
    f = Field(grid, values)
    peak = float(np.max(np.abs(values)))
    if peak > 0.0:
        f = Field(grid, values / peak)
    return dealias(f)


def random_band(
    grid: TorusGrid,
    seed: int,
    band=(1.0, 6.0),
    decay: float = 3.0,
    u_amp: float = 0.3,
    omega_amp: float = 0.2,
    beta_amp: float = 0.2,
    omega0: float = 1.0,
    beta0: float = 1.0,
) -> State:
    """Seeded random smooth data: perturbations ride on constant backgrounds.

    Amplitudes are peak-normalised, so positivity needs omega0 > omega_amp
    and beta0 >= beta_amp.
    """
    if omega0 - omega_amp <= 0.0:
        raise ConfigError("random_band needs omega0 > omega_amp")
    if beta0 - beta_amp < 0.0:
        raise ConfigError("random_band needs beta0 >= beta_amp")
    rng = np.random.default_rng(seed)
    uvals = np.stack(
        [u_amp * _random_band_scalar(grid, rng, band, decay).values for _ in range(grid.d)]
    )
    u = leray_project(Field(grid, uvals))
    omega = Field(
        grid, omega0 + omega_amp * _random_band_scalar(grid, rng, band, decay).values
    )
    beta = Field(
        grid, beta0 + beta_amp * _random_band_scalar(grid, rng, band, decay).values
    )
    return State(0.0, u, omega, beta)


def compact_bump_profile(grid: TorusGrid, amplitude: float, width: float, center=None):
    """C-infinity bump amplitude*exp(1 - 1/(1 - (r/width)^2)); exactly zero
    outside the ball r < width (periodic distance to the centre)."""
    if center is None:
        center = (np.pi,) * grid.d
    r2 = np.zeros(grid.shape)
    for i, x in enumerate(grid.coords):
        dxi = np.abs(x - center[i]) + np.zeros(grid.shape)
        dxi = np.minimum(dxi, 2.0 * np.pi - dxi)
        r2 = r2 + dxi**2
    rr = r2 / width**2
    vals = np.zeros(grid.shape)
    inside = rr < 1.0
    vals[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - rr[inside]))
    return vals


def compact_k(
    grid: TorusGrid,
    amplitude: float = 0.3,
    width: float = 2.85,
    omega0: float = 1.0,
    eps_lift: float = 0.0,
) -> State:
    """beta0 a compactly supported bump with a genuine vacuum region.

    The profile is evaluated pointwise (exact zeros outside the support)
    rather than band-truncated, so beta0 >= 0 holds exactly.  A positive
    eps_lift applies the (sqrt(k0) + eps)^2 lifting of the initial data,
    the approximation device the existence theory uses for this regime.
    """
    if amplitude < 0.0:
        raise ConfigError("compact_k needs amplitude >= 0")
    if omega0 <= 0.0:
        raise ConfigError("compact_k needs omega0 > 0")
    beta_vals = compact_bump_profile(grid, amplitude, width)
    if eps_lift > 0.0:
        beta_vals = beta_vals + eps_lift  # beta-level lift: k = (sqrt(k0)+eps)^2
    return State(
        0.0, _zero_vector(grid), _constant(grid, omega0), Field(grid, beta_vals)
    )


FAMILIES = {
    "homogeneous": homogeneous,
    "taylor_green": taylor_green,
    "single_mode": single_mode,
    "random_band": random_band,
    "compact_k": compact_k,
}


def build_initial(grid: TorusGrid, family: str, **kwargs) -> State:
    if family == "from_file":
        from .io import read_snapshot

        return read_snapshot(kwargs["path"])
    if family not in FAMILIES:
        raise ConfigError(
            f"unknown initial-data family {family!r}; choose from "
            + ", ".join(sorted(FAMILIES)) + ", from_file"
        )
    try:
        return FAMILIES[family](grid, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for family {family!r}: {exc}") from exc
