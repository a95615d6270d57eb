"""Randomised ratio harness for the functional inequalities.

Each case evaluates LHS/RHS of one inequality on seeded random
band-limited fields and reports ratio statistics.  The constants are
empirical outputs: the theory asserts their existence, never their
values, so nothing here is asserted against a source value (and the
ratios depend on the chosen ring bump).  Trials are deterministic given
the seed; the KOLMOFLOW_THREADS environment variable parallelises
independent trials.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .lp import DyadicDecomposition, first_order, sobolev_norm, s_quantity
from .spectral import (
    Field,
    TorusGrid,
    apply_derivative,
    dealias_contract,
    dealias_product,
    l2_norm,
    linf_norm,
    sup_norm,
)

CASES = ("bernstein", "interp", "comm", "product", "comp", "key")


@dataclass
class HarnessResult:
    case: str
    trials: int
    skipped: int
    ratios: np.ndarray
    extras: dict = field(default_factory=dict)

    @property
    def max(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else math.nan

    @property
    def mean(self) -> float:
        return float(self.ratios.mean()) if self.ratios.size else math.nan

    @property
    def std(self) -> float:
        return float(self.ratios.std()) if self.ratios.size else math.nan


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("KOLMOFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _random_scalar(grid: TorusGrid, rng, k_hi: float, decay: float = 3.0) -> Field:
    """Zero-mean random field with modes in [1, k_hi], unit peak."""
    coeffs = np.zeros(grid.spectral_shape, dtype=complex)
    kmag = grid.kmag
    sel = (kmag >= 1.0) & (kmag <= k_hi) & ~grid.nyquist_mask
    amp = rng.standard_normal(grid.spectral_shape) + 1j * rng.standard_normal(
        grid.spectral_shape
    )
    coeffs[sel] = amp[sel] * np.exp(-((kmag[sel] / decay) ** 2))
    values = np.fft.irfftn(coeffs * grid.npoints, s=grid.shape, axes=tuple(range(grid.d)))
    peak = float(np.max(np.abs(values)))
    return Field(grid, values / peak if peak > 0 else values)


def _trial_bernstein(grid, rng, decomp, s, oversample):
    f = _random_scalar(grid, rng, grid.n / 4.0)
    mult = grid.multiplicity
    worst = 0.0
    for j in range(decomp.j_min, decomp.j_max + 1):
        w = decomp.block_weight(j)
        base = float(np.sum(mult * np.abs(w * f.spec) ** 2))
        if base == 0.0:
            continue
        for m in (1, 2):
            dm = float(np.sum(mult * (grid.kmag**m * w) ** 2 * np.abs(f.spec) ** 2))
            r = math.sqrt(dm / base) / 2.0 ** (j * m)
            c = max(r, 1.0 / r) ** (1.0 / (m + 1))
            worst = max(worst, c)
    if worst == 0.0:
        return None
    return worst


def _trial_interp(grid, rng, decomp, s, oversample):
    f = _random_scalar(grid, rng, grid.n / 4.0)
    grad = apply_derivative(f, "gradient")
    denom = l2_norm(f) ** (2.0 / (grid.d + 2)) * linf_norm(grad, oversample) ** (
        grid.d / (grid.d + 2)
    )
    if denom == 0.0:
        return None
    return linf_norm(f, oversample) / denom


def _trial_comm(grid, rng, decomp, s, oversample):
    u = Field(
        grid,
        np.stack([_random_scalar(grid, rng, grid.n / 6.0).values for _ in range(grid.d)]),
    )
    f = _random_scalar(grid, rng, grid.n / 6.0)
    gf = apply_derivative(f, "gradient")
    inside = dealias_contract("i,i->", u, gf)  # u . grad f, dealiased
    lhs_sq = 0.0
    for j in range(decomp.j_min, decomp.j_max + 1):
        blk_in = decomp.block(j, inside)
        blk_g = decomp.block(j, gf)
        outside = dealias_contract("i,i->", u, blk_g)
        comm = blk_in.values - outside.values
        lhs_sq += 4.0 ** (j * s) * float(np.mean(comm**2))
    grad_u = apply_derivative(u, "gradient")
    rhs = sup_norm(grid, grad_u.values, oversample) * sobolev_norm(f, s, "full", decomp)
    rhs += sup_norm(grid, gf.values, oversample) * sobolev_norm(
        grad_u, s - 1.0, "full", decomp
    )
    if rhs == 0.0:
        return None
    return math.sqrt(lhs_sq) / rhs


def _trial_product(grid, rng, decomp, s, oversample):
    u = _random_scalar(grid, rng, grid.n / 6.0)
    v = _random_scalar(grid, rng, grid.n / 6.0)
    uv = Field(grid, u.values * v.values)  # exact: bands n/6 convolve below n/3
    rhs = linf_norm(u, oversample) * sobolev_norm(v, s, "full", decomp)
    rhs += sobolev_norm(u, s, "full", decomp) * linf_norm(v, oversample)
    if rhs == 0.0:
        return None
    return sobolev_norm(uv, s, "full", decomp) / rhs


def _trial_comp(grid, rng, decomp, s, oversample, omega_o=1.0, spread=1.0):
    g0 = _random_scalar(grid, rng, grid.n / 6.0)
    w_vals = omega_o + spread * (g0.values - float(g0.values.min()))
    w = Field(grid, w_vals)
    inv_sqrt = Field(grid, 1.0 / np.sqrt(w_vals))
    s_int = math.floor(s)
    rhs = (
        (1.0 + omega_o ** (1 + s_int))
        / omega_o ** (1.5 + s_int)
        * (1.0 + sup_norm(grid, apply_derivative(w, "gradient").values, oversample) ** s_int)
        * sobolev_norm(w, s, "full", decomp)
    )
    if rhs == 0.0:
        return None
    return sobolev_norm(inv_sqrt, s, "full", decomp) / rhs


def _trial_key(grid, rng, decomp, s, oversample):
    g0 = _random_scalar(grid, rng, grid.n / 6.0)
    alpha = Field(grid, g0.values - float(g0.values.min()))  # >= 0, touches 0
    f = _random_scalar(grid, rng, grid.n / 6.0)
    gf = apply_derivative(f, "gradient")
    prod = Field(grid, alpha.values * gf.values)  # exact product (bands n/6)
    S = s_quantity(alpha, f, "gradient", s, decomp)
    lower = (
        sup_norm(grid, gf.values, oversample) * sobolev_norm(alpha, s, "full", decomp)
        + sup_norm(grid, apply_derivative(alpha, "gradient").values, oversample)
        * sobolev_norm(f, s, "full", decomp)
    ) ** 2
    h_full_sq = sobolev_norm(prod, s, "full", decomp) ** 2
    h_hom_sq = sobolev_norm(prod, s, "homogeneous", decomp) ** 2
    denom1 = S + lower
    denom2 = h_hom_sq + lower
    if denom1 == 0.0 or denom2 == 0.0:
        return None
    return max(h_full_sq / denom1, S / denom2)


_TRIALS = {
    "bernstein": _trial_bernstein,
    "interp": _trial_interp,
    "comm": _trial_comm,
    "product": _trial_product,
    "comp": _trial_comp,
    "key": _trial_key,
}


def inequality_harness(
    case: str,
    trials: int,
    seed: int,
    grid: TorusGrid | None = None,
    s: float = 2.0,
    oversample: int = 2,
    **case_kwargs,
) -> HarnessResult:
    """Ratio statistics for one inequality case over seeded random trials.

    Degenerate trials (both sides zero) are skipped and counted.  The
    'comp' case accepts omega_o (infimum of the generated positive field)
    to track the bound as the infimum degenerates.
    """
    if case not in _TRIALS:
        raise ShapeError(f"unknown harness case {case!r}; choose from {CASES}")
    if trials < 1:
        raise ShapeError("trials must be >= 1")
    if grid is None:
        grid = TorusGrid(2, 32)
    decomp = DyadicDecomposition(grid)
    fn = _TRIALS[case]

    def one(i: int):
        rng = np.random.default_rng([seed, i])
        return fn(grid, rng, decomp, s, oversample, **case_kwargs)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(i) for i in range(trials)]
    ratios = np.array([r for r in results if r is not None], dtype=float)
    skipped = sum(1 for r in results if r is None)
    return HarnessResult(case, trials, skipped, ratios, extras=dict(case_kwargs, s=s))
