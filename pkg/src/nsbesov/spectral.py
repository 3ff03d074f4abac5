"""Periodic pseudo-spectral fields on the torus [0, 2π)^n.

Fields are stored as normalized Fourier coefficients, ``coeffs = fft(f) / N**n``,
so that ``f(x) = Σ_ξ coeffs[ξ] exp(i ξ·x)`` with integer wavenumbers ξ.  Real
fields use the half-spectrum (``rfftn``) layout along the last spatial axis and
complex fields use the full ``fftn`` layout.  Component axes come first:
a scalar has shape ``spatial``, a vector ``(n, *spatial)`` and a matrix
``(n, n, *spatial)``.

Quadratic products are computed by zero-padding to ``3N/2`` points per axis,
which gives the exact Fourier coefficients of the pointwise product on every
retained mode (all ξ with ``|ξ_i| < N/2``).  The Nyquist plane is dropped by
products and by odd derivatives, so that band-limited calculus (Leibniz rule,
commutation of derivatives with products) holds to machine precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi

_RANK_NDIM = {"scalar": 0, "vector": 1, "matrix": 2}


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``N`` points per axis on [0, 2π)^n."""

    n: int
    N: int
    period: float = TWO_PI

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"spatial dimension must be 2 or 3, got {self.n}")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two with N >= 8, got {self.N}")
        if not np.isclose(self.period, TWO_PI, rtol=0, atol=1e-14):
            raise ValueError("only the 2π-periodic box is supported")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def padded_N(self) -> int:
        return 3 * self.N // 2

    @property
    def cell_volume(self) -> float:
        return (TWO_PI / self.N) ** self.n

    def spectral_shape(self, real: bool = True) -> tuple[int, ...]:
        if real:
            return (self.N,) * (self.n - 1) + (self.N // 2 + 1,)
        return self.shape

    def wavenumbers(self, real: bool = True) -> tuple[np.ndarray, ...]:
        """Broadcastable integer wavenumber arrays, one per axis."""
        return _wavenumbers(self.n, self.N, real)

    def k2(self, real: bool = True) -> np.ndarray:
        """|ξ|² on the spectral grid."""
        return _k2(self.n, self.N, real)

    def nyquist_mask(self, real: bool = True) -> np.ndarray:
        """Boolean array, True where some component of ξ equals ±N/2."""
        return _nyquist_mask(self.n, self.N, real)

    def coordinates(self, N: int | None = None) -> tuple[np.ndarray, ...]:
        """Broadcastable physical coordinates on an ``N``-point grid."""
        N = self.N if N is None else N
        x = TWO_PI * np.arange(N) / N
        out = []
        for ax in range(self.n):
            shape = [1] * self.n
            shape[ax] = N
            out.append(x.reshape(shape))
        return tuple(out)


@lru_cache(maxsize=32)
def _wavenumbers(n: int, N: int, real: bool) -> tuple[np.ndarray, ...]:
    full = np.fft.fftfreq(N, 1.0 / N)
    out = []
    for ax in range(n):
        k = np.fft.rfftfreq(N, 1.0 / N) if (real and ax == n - 1) else full
        shape = [1] * n
        shape[ax] = k.size
        kk = k.reshape(shape)
        kk.setflags(write=False)
        out.append(kk)
    return tuple(out)


@lru_cache(maxsize=32)
def _k2(n: int, N: int, real: bool) -> np.ndarray:
    ks = _wavenumbers(n, N, real)
    out = sum(k**2 for k in ks)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _nyquist_mask(n: int, N: int, real: bool) -> np.ndarray:
    ks = _wavenumbers(n, N, real)
    shape = np.broadcast_shapes(*(k.shape for k in ks))
    mask = np.zeros(shape, dtype=bool)
    for k in ks:
        mask |= np.abs(k) == N // 2
    mask.setflags(write=False)
    return mask


def _fwd(values: np.ndarray, n: int, real: bool) -> np.ndarray:
    axes = tuple(range(-n, 0))
    if real:
        return sfft.rfftn(values, axes=axes, norm="forward")
    return sfft.fftn(values, axes=axes, norm="forward")


def _inv(coeffs: np.ndarray, n: int, N: int, real: bool) -> np.ndarray:
    axes = tuple(range(-n, 0))
    if real:
        return sfft.irfftn(coeffs, s=(N,) * n, axes=axes, norm="forward")
    return sfft.ifftn(coeffs, s=(N,) * n, axes=axes, norm="forward")


def _resize_axis(c: np.ndarray, axis: int, N: int, M: int, half: bool) -> np.ndarray:
    """Move spectral data along one axis from an N-grid to an M-grid.

    When ``M > N`` the Nyquist entry is split evenly between +N/2 and -N/2 so
    that the padded array represents the same trigonometric interpolant.  When
    ``M < N`` only modes with ``|ξ| < M/2`` are kept.
    """
    shape = list(c.shape)
    shape[axis] = M // 2 + 1 if half else M
    out = np.zeros(shape, dtype=c.dtype)
    h = min(N, M) // 2

    def sl(a, b):
        idx = [slice(None)] * c.ndim
        idx[axis] = slice(a, b)
        return tuple(idx)

    def at(i):
        idx = [slice(None)] * c.ndim
        idx[axis] = i
        return tuple(idx)

    out[sl(0, h)] = c[sl(0, h)]
    if not half:
        out[sl(M - h + 1, M)] = c[sl(N - h + 1, N)]
    if M > N:
        nyq = c[at(N // 2)]
        if half:
            out[at(N // 2)] = 0.5 * nyq
        else:
            out[at(N // 2)] = 0.5 * nyq
            out[at(M - N // 2)] = 0.5 * nyq
    return out


def resample_coeffs(coeffs: np.ndarray, n: int, N: int, M: int, real: bool) -> np.ndarray:
    """Re-express spectral coefficients of an N-grid field on an M-grid."""
    c = coeffs
    for ax in range(n):
        axis = c.ndim - n + ax
        c = _resize_axis(c, axis, N, M, half=(real and ax == n - 1))
    return c


def to_padded_physical(coeffs: np.ndarray, grid: Grid, real: bool, M: int | None = None) -> np.ndarray:
    """Physical values of a field on the oversampled ``M``-point grid (default 3N/2)."""
    M = grid.padded_N if M is None else M
    return _inv(resample_coeffs(coeffs, grid.n, grid.N, M, real), grid.n, M, real)


def from_padded_physical(values: np.ndarray, grid: Grid, real: bool) -> np.ndarray:
    """Truncate padded physical values to the retained modes ``|ξ_i| < N/2``."""
    M = values.shape[-1]
    c = _fwd(values, grid.n, real)
    return resample_coeffs(c, grid.n, M, grid.N, real)


def padded_trig(grid: Grid, m: Sequence[int], kind: str = "cos", M: int | None = None) -> np.ndarray:
    """``cos(m·x)`` or ``sin(m·x)`` on the oversampled grid, broadcast along axes with ``m_i = 0``.

    For ``|m_i| < N/2`` these are the padded values of the corresponding
    band-limited field.
    """
    M = grid.padded_N if M is None else M
    phase = np.zeros((1,) * grid.n)
    for ax, x in enumerate(grid.coordinates(M)):
        if int(m[ax]):
            phase = phase + int(m[ax]) * x
    if kind == "cos":
        return np.cos(phase)
    if kind == "sin":
        return np.sin(phase)
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A scalar, vector or matrix field held by its Fourier coefficients.

    Args:
        grid: The periodic grid.
        coeffs: Normalized coefficients with component axes first.
        rank: ``"scalar"``, ``"vector"`` or ``"matrix"``.
        real: Whether the physical field is real (half-spectrum layout).
    """

    grid: Grid
    coeffs: np.ndarray
    rank: str = "scalar"
    real: bool = True

    def __post_init__(self):
        if self.rank not in _RANK_NDIM:
            raise ValueError(f"unknown rank {self.rank!r}")
        expect = self.component_shape + self.grid.spectral_shape(self.real)
        if self.coeffs.shape != expect:
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match {expect}")

    # -- construction -------------------------------------------------------
    @property
    def component_shape(self) -> tuple[int, ...]:
        return (self.grid.n,) * _RANK_NDIM[self.rank]

    @classmethod
    def from_physical(cls, grid: Grid, values, rank: str | None = None, real: bool | None = None) -> "SpectralField":
        values = np.asarray(values)
        if rank is None:
            extra = values.ndim - grid.n
            rank = {0: "scalar", 1: "vector", 2: "matrix"}[extra]
        if real is None:
            real = not np.iscomplexobj(values)
        comp = (grid.n,) * _RANK_NDIM[rank]
        values = np.broadcast_to(values, comp + grid.shape)
        if real:
            values = np.real(values).astype(np.float64, copy=False)
        else:
            values = values.astype(np.complex128, copy=False)
        return cls(grid, _fwd(values, grid.n, real), rank, real)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray], rank: str | None = None) -> "SpectralField":
        """Sample ``fn(*coords)`` on the grid nodes."""
        xs = np.meshgrid(*(TWO_PI * np.arange(grid.N) / grid.N for _ in range(grid.n)), indexing="ij")
        return cls.from_physical(grid, fn(*xs), rank=rank)

    @classmethod
    def zeros(cls, grid: Grid, rank: str = "scalar", real: bool = True) -> "SpectralField":
        comp = (grid.n,) * _RANK_NDIM[rank]
        return cls(grid, np.zeros(comp + grid.spectral_shape(real), dtype=np.complex128), rank, real)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "SpectralField":
        f = cls.zeros(grid)
        f.coeffs[(0,) * grid.n] = value
        return f

    @classmethod
    def stack(cls, fields: Sequence["SpectralField"]) -> "SpectralField":
        """Stack n scalars into a vector, or n vectors into a matrix (row-wise)."""
        first = fields[0]
        if len(fields) != first.grid.n:
            raise ValueError("need exactly n components")
        new_rank = {"scalar": "vector", "vector": "matrix"}[first.rank]
        real = all(f.real for f in fields)
        coeffs = np.stack([f.as_layout(real).coeffs for f in fields])
        return cls(first.grid, coeffs, new_rank, real)

    # -- views ----------------------------------------------------------------
    def physical(self) -> np.ndarray:
        """Values at the grid nodes."""
        return _inv(self.coeffs, self.grid.n, self.grid.N, self.real)

    def component(self, *idx: int) -> "SpectralField":
        depth = len(idx)
        ranks = ["scalar", "vector", "matrix"]
        new_rank = ranks[_RANK_NDIM[self.rank] - depth]
        return SpectralField(self.grid, self.coeffs[idx], new_rank, self.real)

    def as_layout(self, real: bool) -> "SpectralField":
        """Switch between the half-spectrum and full-spectrum layouts."""
        if real == self.real:
            return self
        if real:
            vals = self.physical()
            if np.max(np.abs(vals.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(vals), initial=0.0)):
                raise ValueError("field is not real-valued")
            return SpectralField.from_physical(self.grid, vals.real, self.rank, real=True)
        full = sfft.fftn(self.physical(), axes=tuple(range(-self.grid.n, 0)), norm="forward")
        return SpectralField(self.grid, full, self.rank, real=False)

    def full_coeffs(self) -> np.ndarray:
        """Coefficients in the full ``fftn`` layout."""
        return self.as_layout(False).coeffs

    @property
    def mean(self) -> np.ndarray:
        return self.coeffs[(Ellipsis,) + (0,) * self.grid.n]

    def max_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.rank, self.real)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.rank, self.real)

    # -- arithmetic -------------------------------------------------------------
    def _check(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")
        if other.rank != self.rank:
            raise ValueError(f"rank mismatch: {self.rank} vs {other.rank}")

    def _binary(self, other, op):
        if isinstance(other, SpectralField):
            self._check(other)
            real = self.real and other.real
            a, b = self.as_layout(real), other.as_layout(real)
            return SpectralField(self.grid, op(a.coeffs, b.coeffs), self.rank, real)
        return NotImplemented

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, c):
        if isinstance(c, SpectralField):
            return NotImplemented
        if np.iscomplexobj(c) and self.real and np.imag(c) != 0:
            return SpectralField(self.grid, self.as_layout(False).coeffs * c, self.rank, False)
        return self.with_coeffs(self.coeffs * c)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)

    def __repr__(self):
        return f"SpectralField(n={self.grid.n}, N={self.grid.N}, rank={self.rank}, real={self.real})"


def _require_rank(f: SpectralField, *ranks: str):
    if f.rank not in ranks:
        raise ValueError(f"expected rank in {ranks}, got {f.rank}")


def multiplier(f: SpectralField, m: np.ndarray) -> SpectralField:
    """Apply the Fourier multiplier ``m(ξ)`` (broadcast over components)."""
    c = f.coeffs * m
    if np.iscomplexobj(m) or np.iscomplexobj(c):
        c = c.astype(np.complex128, copy=False)
    return f.with_coeffs(c)


def derivative(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Apply ``(i ξ_axis)^order``.  Odd orders drop the Nyquist plane of that axis."""
    if order < 0:
        raise ValueError("order must be non-negative")
    if order == 0:
        return f.copy()
    k = f.grid.wavenumbers(f.real)[axis]
    m = (1j * k) ** order
    if order % 2:
        m = np.where(np.abs(k) == f.grid.N // 2, 0.0, m)
    return multiplier(f, m)


def gradient(f: SpectralField) -> SpectralField:
    """Gradient; for a vector field returns the matrix ``(∇v)_{ij} = ∂_j v_i``."""
    _require_rank(f, "scalar", "vector")
    ks = f.grid.wavenumbers(f.real)
    N2 = f.grid.N // 2
    parts = [f.coeffs * np.where(np.abs(k) == N2, 0.0, 1j * k) for k in ks]
    coeffs = np.stack(parts, axis=f.coeffs.ndim - f.grid.n)
    rank = "vector" if f.rank == "scalar" else "matrix"
    return SpectralField(f.grid, coeffs, rank, f.real)


def divergence(f: SpectralField) -> SpectralField:
    """Divergence; for a matrix field contracts the last index, ``(div M)_i = Σ_j ∂_j M_ij``."""
    _require_rank(f, "vector", "matrix")
    ks = f.grid.wavenumbers(f.real)
    N2 = f.grid.N // 2
    axis = f.coeffs.ndim - f.grid.n - 1
    out = 0
    for j, k in enumerate(ks):
        out = out + np.take(f.coeffs, j, axis=axis) * np.where(np.abs(k) == N2, 0.0, 1j * k)
    rank = "scalar" if f.rank == "vector" else "vector"
    return SpectralField(f.grid, np.asarray(out, dtype=np.complex128), rank, f.real)


def laplacian(f: SpectralField) -> SpectralField:
    return multiplier(f, -f.grid.k2(f.real))


def inverse_laplacian(f: SpectralField) -> SpectralField:
    """``(-Δ)^{-1}`` on mean-zero fields; the ξ = 0 mode is mapped to zero."""
    k2 = f.grid.k2(f.real)
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    return multiplier(f, inv)


def _mean_is_zero(f: SpectralField) -> bool:
    scale = max(f.max_coeff(), 1e-300)
    return bool(np.max(np.abs(f.mean), initial=0.0) <= 1e-12 * scale)


def helmholtz_project(u: SpectralField, allow_mean: bool = False) -> SpectralField:
    """Leray projection ``(Id - ξξᵀ/|ξ|²) û(ξ)`` onto divergence-free fields.

    A vector field with a nonzero mean is rejected unless ``allow_mean`` is set,
    in which case the constant mode is passed through unchanged (the projector
    acts as the identity on constants).
    """
    _require_rank(u, "vector")
    if not allow_mean and not _mean_is_zero(u):
        raise ValueError("helmholtz_project requires a mean-zero field (pass allow_mean=True to keep the mean)")
    ks = u.grid.wavenumbers(u.real)
    k2 = u.grid.k2(u.real)
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 > 0)
    kdotu = sum(k * u.coeffs[i] for i, k in enumerate(ks))
    coeffs = np.stack([u.coeffs[i] - k * kdotu * inv for i, k in enumerate(ks)])
    return u.with_coeffs(coeffs)


def deformation(v: SpectralField) -> SpectralField:
    """The symmetric operator ``Dv = -∇v - (∇v)ᵀ + 2 (div v) Id``."""
    _require_rank(v, "vector")
    g = gradient(v).coeffs
    div = np.trace(g, axis1=0, axis2=1)
    out = -g - np.swapaxes(g, 0, 1)
    for i in range(v.grid.n):
        out[i, i] += 2.0 * div
    return SpectralField(v.grid, out, "matrix", v.real)


def heat_semigroup(f: SpectralField, t: float) -> SpectralField:
    """``e^{tΔ} f``, the multiplier ``exp(-t|ξ|²)``."""
    if t < 0:
        raise ValueError("heat semigroup time must be non-negative")
    return multiplier(f, np.exp(-t * f.grid.k2(f.real)))


def drop_nyquist(f: SpectralField) -> SpectralField:
    """Zero every mode with a component equal to ±N/2."""
    return multiplier(f, ~f.grid.nyquist_mask(f.real))


# -- products -------------------------------------------------------------------


def _padded(f: SpectralField, real: bool) -> np.ndarray:
    return to_padded_physical(f.as_layout(real).coeffs, f.grid, real)


def _check_same_grid(f: SpectralField, g: SpectralField):
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Exact retained-mode coefficients of ``f·g`` (3/2 zero padding).

    At least one factor must be a scalar; a scalar times a vector or matrix is
    taken component-wise.
    """
    _check_same_grid(f, g)
    if f.rank != "scalar" and g.rank != "scalar":
        raise ValueError("dealiased_product needs a scalar factor; use dealiased_outer for vectors")
    real = f.real and g.real
    a, b = _padded(f, real), _padded(g, real)
    rank = g.rank if f.rank == "scalar" else f.rank
    return SpectralField(f.grid, from_padded_physical(a * b, f.grid, real), rank, real)


def dealiased_outer(u: SpectralField, v: SpectralField) -> SpectralField:
    """Exact retained-mode coefficients of ``u ⊗ v``."""
    _check_same_grid(u, v)
    _require_rank(u, "vector")
    _require_rank(v, "vector")
    real = u.real and v.real
    a = _padded(u, real)
    n = u.grid.n
    if v is u:
        return SpectralField(u.grid, symmetric_from_padded(lambda i, j: a[i] * a[j], u.grid, real), "matrix", real)
    b = _padded(v, real)
    out = np.empty((n, n) + u.grid.spectral_shape(real), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[i, j] = from_padded_physical(a[i] * b[j], u.grid, real)
    return SpectralField(u.grid, out, "matrix", real)


def symmetric_from_padded(entry: Callable[[int, int], np.ndarray], grid: Grid, real: bool = True) -> np.ndarray:
    """Coefficients of a symmetric matrix field given padded values of its entries ``i <= j``."""
    n = grid.n
    out = np.empty((n, n) + grid.spectral_shape(real), dtype=np.complex128)
    for i in range(n):
        for j in range(i, n):
            c = from_padded_physical(np.broadcast_to(entry(i, j), (grid.padded_N,) * n), grid, real)
            out[i, j] = c
            out[j, i] = c
    return out


def dealiased_matvec(m: SpectralField, v: SpectralField) -> SpectralField:
    """Exact retained-mode coefficients of ``M v`` (contracting M's last index)."""
    _check_same_grid(m, v)
    _require_rank(m, "matrix")
    _require_rank(v, "vector")
    real = m.real and v.real
    a, b = _padded(m, real), _padded(v, real)
    prod = np.einsum("ij...,j...->i...", a, b)
    return SpectralField(m.grid, from_padded_physical(prod, m.grid, real), "vector", real)


def dealiased_dot(u: SpectralField, v: SpectralField) -> SpectralField:
    """Exact retained-mode coefficients of ``u · v``."""
    _check_same_grid(u, v)
    real = u.real and v.real
    a, b = _padded(u, real), _padded(v, real)
    return SpectralField(u.grid, from_padded_physical(np.sum(a * b, axis=0), u.grid, real), "scalar", real)


# -- norms ------------------------------------------------------------------------


def _pointwise_magnitude(values: np.ndarray, n: int) -> np.ndarray:
    extra = values.ndim - n
    if extra == 0:
        return np.abs(values)
    return np.sqrt(np.sum(np.abs(values) ** 2, axis=tuple(range(extra))))


def coefficient_energy(f: SpectralField) -> float:
    """``Σ_ξ |f̂(ξ)|²`` counted over the full spectrum."""
    w = np.abs(f.coeffs) ** 2
    if f.real:
        N = f.grid.N
        weight = np.full(N // 2 + 1, 2.0)
        weight[0] = 1.0
        if N % 2 == 0:
            weight[-1] = 1.0
        w = w * weight
    return float(np.sum(w))


def lp_norm(f: SpectralField, p: float, oversample: int | None = None) -> float:
    """``(∫_{T^n} |f|^p)^{1/p}`` with the Euclidean/Frobenius norm pointwise.

    ``p = 2`` uses Parseval (exact).  ``p = ∞`` takes the maximum over grid
    nodes (``oversample`` defaults to 1).  Other ``p`` use uniform quadrature on
    an oversampled grid (``oversample`` defaults to 2).
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p == 2 and oversample is None:
        top = f.max_coeff()
        if top == 0.0:
            return 0.0
        return top * float(np.sqrt(TWO_PI**f.grid.n * coefficient_energy(f / top)))
    if oversample is None:
        oversample = 1 if np.isinf(p) else 2
    M = f.grid.N * int(oversample)
    vals = f.physical() if M == f.grid.N else to_padded_physical(f.coeffs, f.grid, f.real, M)
    mag = _pointwise_magnitude(vals, f.grid.n)
    if np.isinf(p):
        return float(np.max(mag, initial=0.0))
    top = float(np.max(mag, initial=0.0))
    if top == 0.0:
        return 0.0
    cell = (TWO_PI / M) ** f.grid.n
    return top * float(np.sum((mag / top) ** p) * cell) ** (1.0 / p)


# -- serialization ------------------------------------------------------------------


def save_field(f: SpectralField, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.bin`` (little-endian interleaved complex128, full layout) and ``<path>.json``."""
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    full = np.ascontiguousarray(f.full_coeffs(), dtype="<c16")
    comps = int(np.prod(f.component_shape)) if f.component_shape else 1
    bin_path, json_path = base.with_suffix(".bin"), base.with_suffix(".json")
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    full.reshape((comps,) + f.grid.shape).tofile(bin_path)
    header = {
        "n": f.grid.n,
        "N": f.grid.N,
        "period": f.grid.period,
        "rank": f.rank,
        "components": comps,
        "real": f.real,
    }
    json_path.write_text(json.dumps(header, indent=2))
    return bin_path, json_path


def load_field(path: str | Path) -> SpectralField:
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    header = json.loads(base.with_suffix(".json").read_text())
    grid = Grid(int(header["n"]), int(header["N"]), float(header["period"]))
    rank = header["rank"]
    data = np.fromfile(base.with_suffix(".bin"), dtype="<c16")
    comp = (grid.n,) * _RANK_NDIM[rank]
    full = data.reshape(comp + grid.shape).astype(np.complex128)
    f = SpectralField(grid, full, rank, real=False)
    return f.as_layout(True) if header.get("real", True) else f
