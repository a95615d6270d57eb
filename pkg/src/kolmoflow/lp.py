"""Dyadic (Littlewood-Paley) decomposition on the torus.

The decomposition is driven by a smooth ring bump phi supported in
[5/6, 12/5] with sum_j phi(2^-j r) = 1 for every r > 0.  Blocks act as
spectral multipliers Delta_j f = phi(2^-j |k|) f_k sampled at the integer
lattice radii, which makes the partition identity exact on the discrete
torus.  On a given grid only finitely many blocks are nonzero; the active
range [j_min, j_max] is derived from the lattice radii present.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .spectral import (
    Field,
    TorusGrid,
    apply_derivative,
    dealias_contract,
    dealias_product,
    l2_norm,
)

SUPPORT_LO = 5.0 / 6.0
SUPPORT_HI = 12.0 / 5.0
_PLATEAU_HI = 5.0 / 3.0  # chi == 1 below this radius; transition up to 12/5


def _ramp(t):
    """exp(-1/t) extended by 0 for t <= 0 (the classic C-infinity ramp)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def _smoothstep(t):
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    a = _ramp(t)
    b = _ramp(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class DyadicBump:
    """The ring bump phi: even, 0 <= phi <= 1, supported in [5/6, 12/5].

    Built as phi(r) = chi(r) - chi(2r) from a smooth cutoff chi equal to 1
    on [0, 5/3] and 0 outside [0, 12/5]; the dyadic sums then telescope to
    exactly 1 for every r > 0.
    """

    support_lo: float = SUPPORT_LO
    support_hi: float = SUPPORT_HI

    @staticmethod
    def cutoff(r):
        r = np.abs(np.asarray(r, dtype=float))
        t = (r - _PLATEAU_HI) / (SUPPORT_HI - _PLATEAU_HI)
        return 1.0 - _smoothstep(t)

    def __call__(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        return self.cutoff(r) - self.cutoff(2.0 * r)

    def partition_sum(self, r):
        """sum_j phi(2^-j r) over all j with support overlap."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0.0
        if np.any(pos):
            rp = r[pos]
            j_lo = np.floor(np.log2(rp.min() / self.support_hi)) - 1
            j_hi = np.ceil(np.log2(rp.max() / self.support_lo)) + 1
            acc = np.zeros_like(rp)
            for j in range(int(j_lo), int(j_hi) + 1):
                acc += self(2.0 ** (-j) * rp)
            out[pos] = acc
        return out


def build_bump() -> DyadicBump:
    """Construct the ring bump used by every decomposition."""
    return DyadicBump()


class DyadicDecomposition:
    """All Littlewood-Paley operators for one grid.

    Caches the multiplier arrays phi(2^-j |k|); blocks with no lattice
    support are dropped, so Delta_j f == 0 for j outside [j_min, j_max]
    on band-limited fields.
    """

    def __init__(self, grid: TorusGrid, bump: DyadicBump | None = None):
        self.grid = grid
        self.bump = bump if bump is not None else build_bump()
        rmax = math.sqrt(grid.d) * (grid.n // 2 - 1)
        j_lo = math.floor(math.log2(1.0 / self.bump.support_hi))
        j_hi = math.ceil(math.log2(rmax / self.bump.support_lo))
        self._weights = {}
        active = []
        for j in range(j_lo, j_hi + 1):
            w = self.bump(2.0 ** (-j) * grid.kmag)
            w[grid.nyquist_mask] = 0.0
            if np.any(w > 0.0):
                self._weights[j] = w
                active.append(j)
        self.j_min = min(active)
        self.j_max = max(active)

    def block_weight(self, j: int):
        if j in self._weights:
            return self._weights[j]
        return np.zeros(self.grid.spectral_shape)

    def block(self, j: int, f: Field) -> Field:
        """Delta_j f; the mean mode is always removed (phi(0) = 0)."""
        return Field.from_spectral(self.grid, self.block_weight(j) * f.spec)

    def block_l2sq(self, j: int, f: Field) -> float:
        """||Delta_j f||_L2^2 via Parseval, without an inverse transform."""
        w = self.block_weight(j)
        return float(np.sum(self.grid.multiplicity * np.abs(w * f.spec) ** 2))

    def cutoff(self, N: int, f: Field) -> Field:
        """Low-frequency cutoff S_N f = mean + sum_{j <= N-1} Delta_j f."""
        w = np.zeros(self.grid.spectral_shape)
        for j in range(self.j_min, min(N - 1, self.j_max) + 1):
            w += self.block_weight(j)
        zero = (0,) * self.grid.d
        w[zero] = 1.0
        return Field.from_spectral(self.grid, w * f.spec)


def dyadic_block(j: int, f: Field, decomp: DyadicDecomposition | None = None) -> Field:
    if decomp is None:
        decomp = DyadicDecomposition(f.grid)
    return decomp.block(j, f)


def low_freq_cutoff(N: int, f: Field, decomp: DyadicDecomposition | None = None) -> Field:
    if decomp is None:
        decomp = DyadicDecomposition(f.grid)
    return decomp.cutoff(N, f)


def sobolev_norm(
    f: Field,
    s: float,
    variant: str = "full",
    decomp: DyadicDecomposition | None = None,
) -> float:
    """H^s norm of a scalar or vector field (componentwise sum of squares).

    'full'        (||f||_L2^2 + sum_j 2^{2js} ||Delta_j f||_L2^2)^{1/2}
    'homogeneous' the dyadic sum alone
    'classical'   (sum_k (1 + |k|^2)^s |c_k|^2)^{1/2}, the cross-check oracle
    """
    if not np.isfinite(s):
        raise ShapeError("sobolev index s must be finite")
    grid = f.grid
    c = f.spec
    mult = grid.multiplicity
    if variant == "classical":
        w = (1.0 + grid.k2) ** s
        return float(np.sqrt(np.sum(mult * w * np.abs(c) ** 2)))
    if variant not in ("full", "homogeneous"):
        raise ShapeError(f"unknown sobolev_norm variant {variant!r}")
    if decomp is None:
        decomp = DyadicDecomposition(grid)
    hom = 0.0
    for j in range(decomp.j_min, decomp.j_max + 1):
        hom += 4.0 ** (j * s) * decomp.block_l2sq(j, f)
    if variant == "homogeneous":
        return float(np.sqrt(hom))
    return float(np.sqrt(l2_norm(f) ** 2 + hom))


def first_order(f: Field, deriv: str) -> Field:
    """First-order operator selected by tag: 'partial0'.., 'gradient', 'sym_gradient'."""
    if deriv.startswith("partial"):
        axis = int(deriv[len("partial") :])
        if not 0 <= axis < f.grid.d:
            raise ShapeError(f"axis {axis} out of range for d={f.grid.d}")
        grad = apply_derivative(f, "gradient")
        return Field(f.grid, grad.values[axis], spec=grad.spec[axis])
    if deriv in ("gradient", "sym_gradient"):
        return apply_derivative(f, deriv)
    raise ShapeError(f"unknown first-order operator tag {deriv!r}")


def _pointwise(a: Field, g: Field) -> Field:
    """a * g with contraction over a's vector index when a is a vector."""
    if a.is_scalar:
        return dealias_product(a, g)
    if a.is_vector and g.is_vector:
        return dealias_contract("i,i->", a, g)
    if a.is_vector and g.comp_shape == (a.grid.d, a.grid.d):
        return dealias_contract("i,ij->j", a, g)
    raise ShapeError("unsupported commutator operand shapes")


def commutator_block(
    j: int,
    a: Field,
    f: Field,
    deriv: str = "gradient",
    decomp: DyadicDecomposition | None = None,
) -> Field:
    """[Delta_j, a] df = Delta_j(a df) - a Delta_j(df), products dealiased.

    ``a`` may be scalar (plain multiplication) or a vector (contracted
    against the derivative's components, as in [Delta_j, u] . grad f).
    Vanishes identically when ``a`` is constant.
    """
    if a.grid != f.grid:
        raise ShapeError("commutator_block requires fields on the same grid")
    if decomp is None:
        decomp = DyadicDecomposition(f.grid)
    g = first_order(f, deriv)
    inside = decomp.block(j, _pointwise(a, g))
    outside = _pointwise(a, decomp.block(j, g))
    return Field(a.grid, inside.values - outside.values)


def s_quantity(
    alpha: Field,
    f: Field,
    deriv: str,
    s: float,
    decomp: DyadicDecomposition | None = None,
) -> float:
    """sum_j 2^{2js} mean(alpha^2 |Delta_j P(d) f|^2): the block-weighted
    quantity whose equivalence with ||alpha P(d) f||_{H^s} (modulo lower
    order terms) underlies the degenerate-parabolic energy estimates."""
    if decomp is None:
        decomp = DyadicDecomposition(f.grid)
    g = first_order(f, deriv)
    a2 = alpha.values**2
    total = 0.0
    for j in range(decomp.j_min, decomp.j_max + 1):
        b = decomp.block(j, g)
        comp_axes = tuple(range(b.values.ndim - f.grid.d))
        mag2 = np.sum(b.values**2, axis=comp_axes) if comp_axes else b.values**2
        total += 4.0 ** (j * s) * float(np.mean(a2 * mag2))
    return total
