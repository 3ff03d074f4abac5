"""Explicit decomposition of near-identity symmetric matrices into rank-one pieces.

Every symmetric ``M`` with ``max|M - Id| <= r0``, ``r0 = 1/(4(n-1))``, is written
as ``M = Σ_k Γ_k(M)² k⊗k`` over the n² integer directions
``{e_i} ∪ {e_i + e_j} ∪ {e_i - e_j}`` (i < j), with

    Γ_{e_i}(M)       = (M_ii - 1/2)^{1/2}
    Γ_{e_i ± e_j}(M) = (1/(4(n-1)) ± M_ij / 2)^{1/2}.

Each direction k carries an integer oscillation direction ``b_k ⊥ k``
(``b_{e_i} = e_{i+1}`` cyclically and ``b_{e_i ± e_j} = e_i ∓ e_j``) so that
``λ^ℓ b_k`` is always a torus wavenumber.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField, deformation, drop_nyquist


class NashDomainError(ValueError):
    """A matrix (or matrix field) left the domain on which all Γ_k are real."""

    def __init__(self, message: str, k=None, measured: float | None = None):
        super().__init__(message)
        self.k = k
        self.measured = measured


@dataclass(frozen=True)
class NashSystem:
    """Directions ``k``, oscillation directions ``b_k`` and radius ``r0``.

    Attributes:
        n: Spatial dimension.
        K_set: Integer array of shape (n², n), one direction per row.
        a_dirs: Integer oscillation directions ``b_k``, same shape.
        kinds: For each row, ``("diag", i, i)``, ``("plus", i, j)`` or ``("minus", i, j)``.
        r0: Admissible radius in the max-entry norm.
    """

    n: int
    K_set: np.ndarray
    a_dirs: np.ndarray
    kinds: tuple
    r0: float

    @property
    def size(self) -> int:
        return self.K_set.shape[0]

    @property
    def a_norms(self) -> np.ndarray:
        return np.linalg.norm(self.a_dirs, axis=1)

    def label(self, idx: int) -> str:
        kind, i, j = self.kinds[idx]
        if kind == "diag":
            return f"e{i + 1}"
        return f"e{i + 1}{'+' if kind == 'plus' else '-'}e{j + 1}"

    def radicands(self, M: np.ndarray) -> np.ndarray:
        """Γ_k(M)² for every k; ``M`` has shape (..., n, n) and the result (..., n²)."""
        M = np.asarray(M, dtype=float)
        off = 1.0 / (4.0 * (self.n - 1))
        out = []
        for kind, i, j in self.kinds:
            if kind == "diag":
                out.append(M[..., i, i] - 0.5)
            elif kind == "plus":
                out.append(off + 0.5 * M[..., i, j])
            else:
                out.append(off - 0.5 * M[..., i, j])
        return np.stack(out, axis=-1)

    def gamma(self, M: np.ndarray) -> np.ndarray:
        """Γ_k(M) for every k; raises :class:`NashDomainError` on a negative radicand."""
        r = self.radicands(M)
        bad = r < 0
        if np.any(bad):
            idx = int(np.argwhere(bad.reshape(-1, self.size))[0][1])
            raise NashDomainError(
                f"radicand of Γ_k negative for k = {self.label(idx)} (min {float(r[..., idx].min()):.3e})",
                k=tuple(int(x) for x in self.K_set[idx]),
                measured=float(r.min()),
            )
        return np.sqrt(r)

    def gamma_bounds(self) -> tuple[float, float]:
        """Range of all Γ_k over the ball ``max|M - Id| <= r0``.

        Each radicand is affine in a single entry of M, so its extremes over the
        ball are attained at the entry bounds: ``[1/2 - r0, 1/2 + r0]`` for the
        diagonal directions and ``[r0 - r0/2, r0 + r0/2]`` for the others.
        """
        r0 = self.r0
        lo = min(0.5 - r0, r0 / 2)
        hi = max(0.5 + r0, 1.5 * r0)
        return math.sqrt(lo), math.sqrt(hi)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r0": self.r0,
            "directions": [
                {"label": self.label(i), "k": self.K_set[i].tolist(), "b": self.a_dirs[i].tolist(), "b_norm": float(self.a_norms[i])}
                for i in range(self.size)
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def build_nash_system(n: int) -> NashSystem:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    eye = np.eye(n, dtype=int)
    ks, bs, kinds = [], [], []
    for i in range(n):
        ks.append(eye[i])
        bs.append(eye[(i + 1) % n])
        kinds.append(("diag", i, i))
    for i in range(n):
        for j in range(i + 1, n):
            ks.append(eye[i] + eye[j])
            bs.append(eye[i] - eye[j])
            kinds.append(("plus", i, j))
            ks.append(eye[i] - eye[j])
            bs.append(eye[i] + eye[j])
            kinds.append(("minus", i, j))
    K = np.array(ks)
    B = np.array(bs)
    K.setflags(write=False)
    B.setflags(write=False)
    return NashSystem(n, K, B, tuple(kinds), 1.0 / (4.0 * (n - 1)))


def in_domain(M: np.ndarray, sys: NashSystem, slack: float = 1e-14) -> bool:
    M = np.asarray(M, dtype=float)
    return bool(np.max(np.abs(M - np.eye(sys.n))) <= sys.r0 + slack)


def nash_reconstruct(M: np.ndarray, sys: NashSystem) -> np.ndarray:
    """``Σ_k Γ_k(M)² k⊗k``; equals M on the domain."""
    g2 = sys.gamma(M) ** 2
    outer = np.einsum("ka,kb->kab", sys.K_set, sys.K_set).astype(float)
    return np.einsum("...k,kab->...ab", g2, outer)


def gamma_field(v: SpectralField | None, sys: NashSystem, scale: float, grid=None) -> list[SpectralField]:
    """Fields ``Γ_k(Id - scale⁻¹ Dv)`` sampled at the grid nodes.

    The Nyquist plane of each result is removed so that the fields are exact
    trigonometric polynomials for the dealiased calculus downstream.

    Raises:
        NashDomainError: If ``max|Dv| > r0·scale`` at some node; the measured
            sup-norm is attached.
    """
    if v is None:
        if grid is None:
            raise ValueError("grid required when v is None")
        g = sys.gamma(np.eye(sys.n))
        return [SpectralField.constant(grid, float(val)) for val in g]
    if scale <= 0:
        raise ValueError("scale must be positive")
    Dv = deformation(v).physical()
    sup = float(np.max(np.abs(Dv), initial=0.0))
    if sup > sys.r0 * scale * (1 + 1e-12):
        raise NashDomainError(
            f"precondition violated: max|Dv| = {sup:.6e} exceeds r0*scale = {sys.r0 * scale:.6e}", measured=sup
        )
    M = -Dv / scale
    M = np.moveaxis(M, (0, 1), (-2, -1)) + np.eye(sys.n)
    vals = sys.gamma(M)
    return [drop_nyquist(SpectralField.from_physical(v.grid, vals[..., i])) for i in range(sys.size)]
