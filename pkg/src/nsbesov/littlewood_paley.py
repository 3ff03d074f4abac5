"""Dyadic frequency blocks, homogeneous Besov and Chemin–Lerner norms, angular localizers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .spectral import Grid, SpectralField, lp_norm, multiplier


def _bump_edge(x):
    """``exp(-1/x)`` for ``x > 0`` and 0 otherwise."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(t):
    """C^∞ monotone step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a = _bump_edge(t)
    b = _bump_edge(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def smooth_cutoff(r):
    """Radial profile χ: 1 for ``r <= 1``, 0 for ``r >= 2``, smooth and monotone between."""
    return smooth_step(2.0 - np.asarray(r, dtype=float))


# Shell multipliers are cached only on grids up to this many points; larger
# grids recompute them so a refinement study does not pin gigabytes of shells.
CACHE_POINTS = 2**21


def _abs_xi_uncached(n: int, N: int, real: bool) -> np.ndarray:
    out = np.sqrt(Grid(n, N).k2(real))
    out.setflags(write=False)
    return out


def _block_multiplier_uncached(n: int, N: int, real: bool, j: int) -> np.ndarray:
    r = _abs_xi(n, N, real)
    out = smooth_cutoff(r / 2.0**j) - smooth_cutoff(r / 2.0 ** (j - 1))
    out.setflags(write=False)
    return out


_abs_xi_cached = lru_cache(maxsize=16)(_abs_xi_uncached)
_block_multiplier_cached = lru_cache(maxsize=128)(_block_multiplier_uncached)


def _abs_xi(n: int, N: int, real: bool) -> np.ndarray:
    if N**n <= CACHE_POINTS:
        return _abs_xi_cached(n, N, real)
    return _abs_xi_uncached(n, N, real)


def _block_multiplier(n: int, N: int, real: bool, j: int) -> np.ndarray:
    if N**n <= CACHE_POINTS:
        return _block_multiplier_cached(n, N, real, j)
    return _block_multiplier_uncached(n, N, real, j)


@dataclass(frozen=True)
class BesovParams:
    """Exponents of a homogeneous Besov space ``B^s_{p,q}``."""

    p: float
    q: float
    s: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")


@dataclass(frozen=True)
class DyadicPartition:
    """Littlewood–Paley blocks ``φ̂_j(ξ) = χ(2^{-j}|ξ|) - χ(2^{1-j}|ξ|)`` on a grid.

    The default range starts at ``j_min = 0`` (the smallest nonzero lattice
    wavenumber has modulus 1) and ends at the first ``j`` with ``2^j`` at least
    the largest grid modulus ``√n N/2``, so the blocks sum to one on every
    nonzero wavenumber including the corners of the spectral cube.
    """

    grid: Grid
    j_min: int = 0
    j_max: int | None = None

    def __post_init__(self):
        if self.j_max is None:
            top = math.sqrt(self.grid.n) * self.grid.N / 2
            object.__setattr__(self, "j_max", int(math.ceil(math.log2(top) - 1e-12)))
        if self.j_max < self.j_min:
            raise ValueError("empty dyadic range")

    @property
    def indices(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def in_range(self, j: int) -> bool:
        return self.j_min <= j <= self.j_max

    def multiplier(self, j: int, real: bool = True) -> np.ndarray:
        return _block_multiplier(self.grid.n, self.grid.N, real, int(j))


class Block(NamedTuple):
    field: SpectralField
    truncated: bool


def lp_block(f: SpectralField, j: int, partition: DyadicPartition) -> Block:
    """Littlewood–Paley piece ``Δ_j f``.

    Returns the block together with a flag that is True when ``j`` lies outside
    the representable range (the block is then the zero field).
    """
    if not partition.in_range(j):
        return Block(SpectralField.zeros(f.grid, f.rank, f.real), True)
    return Block(multiplier(f, partition.multiplier(j, f.real)), False)


def _block_lp(f: SpectralField, m: np.ndarray, p: float, oversample: int | None) -> float:
    support = m != 0
    if not np.any(f.coeffs[..., support]):
        return 0.0
    return lp_norm(f.with_coeffs(f.coeffs * m), p, oversample)


def _lq(values: np.ndarray, q: float) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    if np.isinf(q):
        return float(np.max(values))
    top = float(np.max(values))
    if top == 0.0:
        return 0.0
    return top * float(np.sum((values / top) ** q)) ** (1.0 / q)


@dataclass
class NormReport:
    """A truncated homogeneous norm with its per-block contributions."""

    s: float
    p: float
    q: float
    value: float
    boundary_mass: float
    blocks: list[tuple[int, float]] = field(default_factory=list)

    def __float__(self) -> float:
        return float(self.value)

    @property
    def boundary_fraction(self) -> float:
        return self.boundary_mass / self.value if self.value > 0 else 0.0

    def to_dict(self) -> dict:
        enc = lambda x: "inf" if np.isinf(x) else float(x)  # noqa: E731
        return {
            "s": float(self.s),
            "p": enc(self.p),
            "q": enc(self.q),
            "value": float(self.value),
            "boundary_mass": float(self.boundary_mass),
            "blocks": [{"j": int(j), "weighted_norm": float(a)} for j, a in self.blocks],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _report(bp: BesovParams, partition: DyadicPartition, weighted: np.ndarray) -> NormReport:
    js = list(partition.indices)
    value = _lq(weighted, bp.q)
    ends = [weighted[0]] if len(js) == 1 else [weighted[0], weighted[-1]]
    return NormReport(bp.s, bp.p, bp.q, value, _lq(np.array(ends), bp.q), list(zip(js, weighted.tolist())))


def besov_norm(
    f: SpectralField,
    bp: BesovParams,
    partition: DyadicPartition | None = None,
    oversample: int | None = None,
) -> NormReport:
    """Truncated homogeneous norm ``‖(2^{sj} ‖Δ_j f‖_{L^p})_j‖_{ℓ^q}`` over the partition range."""
    partition = partition or DyadicPartition(f.grid)
    weighted = np.array(
        [2.0 ** (bp.s * j) * _block_lp(f, partition.multiplier(j, f.real), bp.p, oversample) for j in partition.indices]
    )
    return _report(bp, partition, weighted)


def _time_norm(values: np.ndarray, times: np.ndarray, theta: float, quadrature) -> float:
    if np.isinf(theta):
        return float(np.max(values))
    if len(times) == 1:
        return 0.0
    y = values**theta
    if isinstance(quadrature, str):
        if quadrature == "trapezoid":
            total = integrate.trapezoid(y, times)
        elif quadrature == "simpson":
            total = integrate.simpson(y, x=times)
        else:
            raise ValueError(f"unknown quadrature {quadrature!r}")
    else:
        total = float(np.dot(np.asarray(quadrature, dtype=float), y))
    return float(max(total, 0.0)) ** (1.0 / theta)


def chemin_lerner_norm(
    traj: Sequence[SpectralField],
    times: Sequence[float],
    theta: float,
    bp: BesovParams,
    partition: DyadicPartition | None = None,
    quadrature="simpson",
    oversample: int | None = None,
) -> NormReport:
    """``‖(2^{sj} ‖Δ_j f‖_{L^θ(I; L^p)})_j‖_{ℓ^q}`` for a sampled trajectory.

    Args:
        traj: Fields at the sample times.
        times: Uniformly spaced sample times covering the interval.
        theta: Time integrability exponent (``np.inf`` for the supremum).
        quadrature: ``"simpson"``, ``"trapezoid"`` or an explicit weight vector.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    times = np.asarray(times, dtype=float)
    if times.shape != (len(traj),):
        raise ValueError("times must match the trajectory length")
    if len(times) > 2:
        dt = np.diff(times)
        if np.max(np.abs(dt - dt[0])) > 1e-9 * max(abs(dt[0]), 1e-300):
            raise ValueError("time grid must be uniform")
    if not theta >= 1:
        raise ValueError("theta must lie in [1, inf]")
    partition = partition or DyadicPartition(traj[0].grid)
    weighted = []
    for j in partition.indices:
        series = np.array([_block_lp(f, partition.multiplier(j, f.real), bp.p, oversample) for f in traj])
        weighted.append(2.0 ** (bp.s * j) * _time_norm(series, times, theta, quadrature))
    return _report(bp, partition, np.array(weighted))


# -- angular localizers ------------------------------------------------------------


def angle_between(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
    return math.acos(min(1.0, max(-1.0, c)))


@dataclass(frozen=True)
class AngularLocalizers:
    """Smooth angular caps around directions ``a_1..a_K`` plus the complement ``φ_0``.

    Each cap equals 1 within angle ``θ*/6`` of its axis and vanishes beyond
    ``outer·θ*`` where ``θ*`` is the minimum pairwise angle of the directions
    (``θ* = 1`` for a single direction).  ``outer`` must lie in ``(1/6, 1/3]``;
    caps around distinct directions are then disjoint.
    """

    directions: np.ndarray
    outer: float = 0.3

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.directions, dtype=float))
        if np.any(np.linalg.norm(d, axis=1) == 0):
            raise ValueError("directions must be nonzero")
        if not (1 / 6 < self.outer <= 1 / 3):
            raise ValueError("outer radius factor must lie in (1/6, 1/3]")
        object.__setattr__(self, "directions", d)

    @property
    def K(self) -> int:
        return self.directions.shape[0]

    @property
    def theta_star(self) -> float:
        if self.K == 1:
            return 1.0
        return min(angle_between(self.directions[i], self.directions[j]) for i in range(self.K) for j in range(i + 1, self.K))

    def cap(self, m: int, xi: Sequence[np.ndarray]) -> np.ndarray:
        """Value of cap ``m`` (1-based) at wavevectors ``xi`` (tuple of broadcastable arrays)."""
        a = self.directions[m - 1]
        a = a / np.linalg.norm(a)
        r = np.sqrt(sum(x**2 for x in xi))
        dot = sum(ai * x for ai, x in zip(a, xi))
        with np.errstate(invalid="ignore", divide="ignore"):
            cosang = np.where(r > 0, dot / np.where(r > 0, r, 1.0), 1.0)
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        ts = self.theta_star
        inner, outer = ts / 6.0, self.outer * ts
        val = smooth_step((outer - ang) / (outer - inner))
        return np.where(r > 0, val, 0.0)

    def value(self, m: int, xi: Sequence[np.ndarray]) -> np.ndarray:
        """Multiplier ``φ_m`` at ``xi``; ``φ_0 = 1 - Σ_{k≥1} φ_k`` (equal to 1 at ξ = 0)."""
        if not 0 <= m <= self.K:
            raise IndexError(f"localizer index {m} outside 0..{self.K}")
        if m > 0:
            return self.cap(m, xi)
        return 1.0 - sum(self.cap(k, xi) for k in range(1, self.K + 1))

    def multiplier(self, m: int, grid: Grid) -> np.ndarray:
        return self.value(m, grid.wavenumbers(real=False))


def angular_project(f: SpectralField, m: int, loc: AngularLocalizers) -> SpectralField:
    """``P_m f``.  Caps are not symmetric under ξ → -ξ, so the result uses the complex layout."""
    g = f.as_layout(False)
    return multiplier(g, loc.multiplier(m, f.grid))
