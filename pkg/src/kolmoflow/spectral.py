"""Fields on the periodic torus T^d and exact spectral operators.

Conventions
-----------
The domain is the unit torus, period 2*pi per axis, so wavenumbers are
integers.  Fourier coefficients follow the series normalisation

    f(x) = sum_k  c_k exp(i k.x),        c_k = mean of f * exp(-i k.x),

i.e. c_0 is the grid mean.  All L2 quantities use the normalised measure
(means over the torus rather than plain integrals); Parseval then reads
mean(f^2) = sum_k |c_k|^2.

Storage is real in physical space and Hermitian-packed (numpy rfftn
layout) in spectral space.  Nyquist modes |k_i| = n/2 are zeroed after
every transform, so representable content satisfies |k_i| < n/2.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    HermitianSymmetryError,
    InvalidFieldError,
    MeanViolationError,
    ShapeError,
)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Uniform collocation grid on [0, 2*pi)^d with n points per axis."""

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ShapeError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1) != 0:
            raise ShapeError(f"n must be a power of two >= 8, got {self.n}")

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def spectral_shape(self):
        return (self.n,) * (self.d - 1) + (self.n // 2 + 1,)

    @property
    def dx(self) -> float:
        return TWO_PI / self.n

    @property
    def npoints(self) -> int:
        return self.n**self.d

    def axes(self, ndim_total: int):
        """Spatial axes of an array whose trailing dims are the grid."""
        return tuple(range(ndim_total - self.d, ndim_total))

    @cached_property
    def coords(self):
        """d broadcastable coordinate arrays x_i in [0, 2*pi)."""
        x = np.arange(self.n) * self.dx
        out = []
        for i in range(self.d):
            shape = [1] * self.d
            shape[i] = self.n
            out.append(x.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self):
        """d broadcastable integer wavenumber arrays in packed layout."""
        out = []
        for i in range(self.d):
            if i == self.d - 1:
                k = np.arange(self.n // 2 + 1, dtype=float)
            else:
                k = np.fft.fftfreq(self.n, 1.0 / self.n)
            shape = [1] * self.d
            shape[i] = k.size
            out.append(k.reshape(shape))
        return tuple(out)

    @cached_property
    def k2(self):
        out = np.zeros(self.spectral_shape)
        for k in self.wavenumbers:
            out = out + k**2
        return out

    @cached_property
    def kmag(self):
        return np.sqrt(self.k2)

    @cached_property
    def nyquist_mask(self):
        mask = np.zeros(self.spectral_shape, dtype=bool)
        for k in self.wavenumbers:
            mask = mask | (np.abs(k) == self.n // 2)
        return mask

    @cached_property
    def dealias_keep(self):
        """Modes kept by the 2/3 rule: all |k_i| < n/3."""
        keep = np.ones(self.spectral_shape, dtype=bool)
        for k in self.wavenumbers:
            keep = keep & (np.abs(k) < self.n / 3.0)
        return keep & ~self.nyquist_mask

    @cached_property
    def multiplicity(self):
        """Weights for sums over packed coefficients (conjugate pairs)."""
        k_last = self.wavenumbers[-1]
        return np.where((k_last > 0) & (k_last < self.n // 2), 2.0, 1.0)


class Field:
    """A scalar, vector, or matrix field with physical and spectral views.

    ``values`` has shape comp_shape + grid.shape with comp_shape one of
    (), (d,), (d, d).  Spectral coefficients are computed lazily and
    cached; instances are treated as immutable.
    """

    __slots__ = ("grid", "values", "_spec", "_band")

    def __init__(self, grid: TorusGrid, values, spec=None):
        values = np.asarray(values, dtype=float)
        if values.shape[values.ndim - grid.d :] != grid.shape:
            raise ShapeError(
                f"trailing dims {values.shape} do not match grid {grid.shape}"
            )
        comp = values.shape[: values.ndim - grid.d]
        if comp not in ((), (grid.d,), (grid.d, grid.d)):
            raise ShapeError(f"unsupported component shape {comp}")
        self.grid = grid
        self.values = values
        self._spec = spec
        self._band = None

    @property
    def comp_shape(self):
        return self.values.shape[: self.values.ndim - self.grid.d]

    @property
    def is_scalar(self):
        return self.comp_shape == ()

    @property
    def is_vector(self):
        return self.comp_shape == (self.grid.d,)

    @property
    def spec(self):
        if self._spec is None:
            self._spec = to_spectral(self)
        return self._spec

    @property
    def band_values(self):
        """Physical values after 2/3 truncation (cached)."""
        if self._band is None:
            self._band = _inverse(self.grid, self.spec * self.grid.dealias_keep)
        return self._band

    def mean(self):
        return self.values.mean(axis=self.grid.axes(self.values.ndim))

    def copy(self):
        return Field(self.grid, self.values.copy())

    @classmethod
    def from_spectral(cls, grid: TorusGrid, coeffs):
        return to_physical(grid, coeffs)

    @classmethod
    def zeros(cls, grid: TorusGrid, comp_shape=()):
        return cls(grid, np.zeros(comp_shape + grid.shape))


def _forward(grid: TorusGrid, values):
    axes = grid.axes(values.ndim)
    c = np.fft.rfftn(values, axes=axes) / grid.npoints
    c[..., grid.nyquist_mask] = 0.0
    return c


def _inverse(grid: TorusGrid, coeffs):
    axes = grid.axes(coeffs.ndim)
    return np.fft.irfftn(coeffs * grid.npoints, s=grid.shape, axes=axes)


def to_spectral(field: Field):
    """Packed Fourier coefficients of ``field`` (c_0 = grid mean)."""
    if not np.all(np.isfinite(field.values)):
        raise InvalidFieldError("field contains non-finite values")
    return _forward(field.grid, field.values)


def hermitian_asymmetry(grid: TorusGrid, coeffs) -> float:
    """Max |c_{-k} - conj(c_k)| over the self-conjugate k_last = 0 plane."""
    plane = np.take(coeffs, 0, axis=coeffs.ndim - 1)
    rev = plane
    for ax in range(plane.ndim - (grid.d - 1), plane.ndim):
        rev = np.roll(np.flip(rev, axis=ax), 1, axis=ax)
    return float(np.max(np.abs(plane - np.conj(rev)))) if plane.size else 0.0


def to_physical(grid: TorusGrid, coeffs) -> Field:
    """Inverse transform; rejects non-Hermitian inputs."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape[coeffs.ndim - grid.d :] != grid.spectral_shape:
        raise ShapeError(
            f"coefficient dims {coeffs.shape} do not match packed {grid.spectral_shape}"
        )
    scale = max(1.0, float(np.max(np.abs(coeffs)))) if coeffs.size else 1.0
    asym = hermitian_asymmetry(grid, coeffs)
    if asym > 1e-12 * scale:
        raise HermitianSymmetryError(asym)
    coeffs = np.where(grid.nyquist_mask, 0.0, coeffs)
    values = _inverse(grid, coeffs)
    return Field(grid, values, spec=coeffs)


def apply_derivative(field: Field, op: str) -> Field:
    """Exact spectral derivative: gradient, divergence, laplacian, sym_gradient.

    gradient of a scalar is the d-vector (d_i f); gradient of a vector u
    is the matrix G[i, j] = d_i u_j; sym_gradient of a vector is
    (G + G^T)/2, the symmetric part of the velocity gradient.
    """
    grid = field.grid
    ik = [1j * k for k in grid.wavenumbers]
    c = field.spec
    if op == "gradient":
        if field.comp_shape not in ((), (grid.d,)):
            raise ShapeError("gradient expects a scalar or vector field")
        out = np.stack([ik[i] * c for i in range(grid.d)])
        return Field.from_spectral(grid, out)
    if op == "laplacian":
        return Field.from_spectral(grid, -grid.k2 * c)
    if op == "divergence":
        if field.is_vector:
            out = sum(ik[i] * c[i] for i in range(grid.d))
        elif field.comp_shape == (grid.d, grid.d):
            out = np.stack(
                [sum(ik[i] * c[i, j] for i in range(grid.d)) for j in range(grid.d)]
            )
        else:
            raise ShapeError("divergence expects a vector or matrix field")
        return Field.from_spectral(grid, out)
    if op == "sym_gradient":
        if not field.is_vector:
            raise ShapeError("sym_gradient expects a vector field")
        out = np.empty((grid.d, grid.d) + grid.spectral_shape, dtype=complex)
        for i in range(grid.d):
            for j in range(grid.d):
                out[i, j] = 0.5 * (ik[i] * c[j] + ik[j] * c[i])
        return Field.from_spectral(grid, out)
    raise ShapeError(f"unknown derivative op {op!r}")


def leray_project(u: Field) -> Field:
    """Remove the gradient part: c_k -> c_k - k (k.c_k)/|k|^2; mean kept."""
    if not u.is_vector:
        raise ShapeError("leray_project expects a vector field")
    grid = u.grid
    c = u.spec
    k2 = np.where(grid.k2 == 0.0, 1.0, grid.k2)
    kdotc = sum(grid.wavenumbers[i] * c[i] for i in range(grid.d))
    proj = np.stack(
        [c[i] - grid.wavenumbers[i] * kdotc / k2 for i in range(grid.d)]
    )
    return Field.from_spectral(grid, proj)


def invert_laplacian_zero_mean(f: Field) -> Field:
    """Solve laplacian(g) = f with zero-mean f; returns zero-mean g."""
    if not f.is_scalar:
        raise ShapeError("invert_laplacian_zero_mean expects a scalar field")
    grid = f.grid
    c = f.spec
    mean = abs(c[(0,) * grid.d])
    l2 = l2_norm(f)
    if mean > 1e-10 * max(l2, 1e-300):
        raise MeanViolationError(
            f"right-hand side mean {mean:.3e} exceeds 1e-10 * ||f||_L2 = {1e-10 * l2:.3e}"
        )
    k2 = np.where(grid.k2 == 0.0, 1.0, grid.k2)
    out = -c / k2
    out[(0,) * grid.d] = 0.0
    return Field.from_spectral(grid, out)


def dealias(f: Field) -> Field:
    """Truncate to the 2/3 band (all |k_i| < n/3)."""
    return Field(f.grid, f.band_values, spec=f.spec * f.grid.dealias_keep)


def dealias_product(f: Field, g: Field) -> Field:
    """2/3-rule product: truncate inputs, multiply pointwise, truncate.

    For inputs already confined to the 2/3 band the result equals the
    exact spectral convolution truncated to that band (aliased modes of
    the grid product fall outside it).
    """
    if f.grid is not g.grid and f.grid != g.grid:
        raise ShapeError("dealias_product requires fields on the same grid")
    prod = f.band_values * g.band_values
    grid = f.grid
    return Field.from_spectral(grid, _forward(grid, prod) * grid.dealias_keep)


def dealias_contract(subscripts: str, a: Field, b: Field) -> Field:
    """Dealiased pointwise contraction over component axes.

    ``subscripts`` is an einsum spec over component axes only, e.g.
    'i,i->' for a dot product, 'i,ij->j' for u . grad(u), 'ij,ij->' for a
    Frobenius contraction.  Grid axes are carried along unchanged.
    """
    lhs, rhs = subscripts.split("->")
    s1, s2 = lhs.split(",")
    full = f"{s1}...,{s2}...->{rhs}..."
    prod = np.einsum(full, a.band_values, b.band_values)
    grid = a.grid
    return Field.from_spectral(grid, _forward(grid, prod) * grid.dealias_keep)


def l2_norm(f: Field) -> float:
    """sqrt(mean over the torus of the pointwise squared magnitude)."""
    return float(np.sqrt(np.sum(f.values**2) / f.grid.npoints))


def oversample_array(grid: TorusGrid, values, factor: int = 2):
    """Evaluate the trigonometric interpolant of a component stack on a
    ``factor``-times finer grid (leading axes are components)."""
    values = np.asarray(values, dtype=float)
    m = factor * grid.n
    axes = grid.axes(values.ndim)
    full = np.fft.fftn(values, axes=axes) / grid.npoints
    comp = values.shape[: values.ndim - grid.d]
    out = np.zeros(comp + (m,) * grid.d, dtype=complex)
    idx = [np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int) % m for _ in range(grid.d)]
    sel = tuple(np.ix_(*idx))
    out[(...,) + sel] = full
    vals = np.fft.ifftn(out * m**grid.d, axes=tuple(range(out.ndim - grid.d, out.ndim)))
    return vals.real


def oversample_values(f: Field, factor: int = 2):
    return oversample_array(f.grid, f.values, factor)


def sup_norm(grid: TorusGrid, values, oversample: int = 2) -> float:
    """Max pointwise Euclidean magnitude over an oversampled grid.

    Band-limited fields can peak between collocation points, so the sup
    norm is evaluated on a refined grid (default 2x per axis).  Accepts
    arbitrary leading component axes.
    """
    vals = oversample_array(grid, values, oversample) if oversample > 1 else np.asarray(values)
    comp_axes = tuple(range(vals.ndim - grid.d))
    mag2 = np.sum(vals**2, axis=comp_axes) if comp_axes else vals**2
    return float(np.sqrt(np.max(mag2)))


def linf_norm(f: Field, oversample: int = 2) -> float:
    """Sup norm of a Field (see ``sup_norm``)."""
    return sup_norm(f.grid, f.values, oversample)


def gradient_array(grid: TorusGrid, values):
    """Spectral gradient of an arbitrary component stack: output has one
    extra leading axis of length d (the derivative direction)."""
    axes = grid.axes(np.asarray(values).ndim)
    c = np.fft.rfftn(values, axes=axes) / grid.npoints
    c[..., grid.nyquist_mask] = 0.0
    stacked = np.stack([1j * k * c for k in grid.wavenumbers])
    return _inverse(grid, stacked)
