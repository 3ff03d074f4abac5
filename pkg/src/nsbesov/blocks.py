"""Oscillatory building blocks on the torus.

Level ``j`` of the construction takes the previous profile ``v = V_{j-1}`` and
produces

    V_j = √2 · s_j^{1/2} · ρ_j * Σ_k div D( Γ_k(Id - s_j⁻¹ Dv) · Ψ_{j,k} · k ),
    Ψ_{j,k}(x) = Σ_{ℓ∈Λ_j} cos(λ^ℓ b_k·x) / (λ^{2ℓ} |b_k|² √(h_j ℓ)),

where ``h_j = Σ_{ℓ∈Λ_j} 1/ℓ``, ``b_k`` is the lattice oscillation direction of
``k`` and ``ρ_j`` is a radial mollifier of width ``λ_j^{-2}`` applied as a
Fourier multiplier.  The level scale ``s_j`` plays the role of the eighth power
of the previous frequency; on a desk-sized grid it is a free parameter.

Since ``b_k·k = 0`` the Leibniz rule splits ``V_j`` into a principal part

    V_j^{(p)} = √2 s_j^{1/2} Σ_{k,ℓ} Φ_{j,k,ℓ},   Φ_{j,k,ℓ} = Γ_k cos(λ^ℓ b_k·x) k / √(h_j ℓ),

and three remainders: the mollification error, the first-derivative cross terms
and the term with ``div D`` falling entirely on ``Γ_k k``.  All products are
dealiased, so the split is an identity on the grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import special

from .nash import NashDomainError, NashSystem, gamma_field
from .spectral import (
    Grid,
    SpectralField,
    deformation,
    divergence,
    from_padded_physical,
    gradient,
    helmholtz_project,
    laplacian,
    multiplier,
    padded_trig,
    symmetric_from_padded,
    to_padded_physical,
    dealiased_outer,
)


class LadderError(ValueError):
    """Invalid or unrepresentable frequency ladder."""


# -- ladder -------------------------------------------------------------------------------


def paper_mu(n: int) -> int:
    """Default separation exponent ``μ = 4n + 5`` of the full tower ladder."""
    return 4 * n + 5


def tower_descriptor(lam: int, mu: int, j: int) -> str:
    """Symbolic form of ``log_λ λ_j`` for the full tower ladder ``log_λ λ_j = 2^(λ^(4μ log_λ λ_{j-1}))``.

    ``log_λ λ_0 = 1``.  Level 1 is written with its exact integer inner
    exponent, e.g. ``2^(2^68)`` for λ = 2, μ = 17.
    """
    if j <= 0:
        return "1"
    lg = int(math.log2(lam))
    prev = tower_descriptor(lam, mu, j - 1)
    if j == 1:
        return f"2^(2^{4 * mu * lg})"
    return f"2^(2^({4 * mu * lg}*{prev}))"


def tower_inner_exponent(lam: int, mu: int) -> int:
    """``log₂ log₂ (log_λ λ_1) = 4 μ log₂ λ`` as an exact integer."""
    return 4 * mu * int(math.log2(lam))


def _is_pow2(x: int) -> bool:
    return isinstance(x, (int, np.integer)) and x >= 2 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class LadderParams:
    """Per-level frequency sets and scales.

    Attributes:
        lam: Base frequency λ (a power of two).
        mu: Separation exponent μ.
        J: Number of levels.
        Lambda_sets: Per-level increasing integer sets Λ_j (empty in paper mode).
        mode: ``"toy"`` or ``"paper"``.
        n: Spatial dimension.
        scales: Level scales ``s_j`` (toy mode).
        mollifier_freqs: Frequencies ``λ_j`` setting the mollifier width ``λ_j^{-2}``.
        tower: Symbolic ``log_λ λ_j`` descriptors (paper mode).
    """

    lam: int
    mu: int
    J: int
    Lambda_sets: tuple
    mode: str = "toy"
    n: int = 3
    scales: tuple = ()
    mollifier_freqs: tuple = ()
    tower: tuple = ()

    @property
    def representable(self) -> bool:
        return self.mode == "toy"

    def h_exact(self, j: int) -> Fraction:
        return sum((Fraction(1, l) for l in self.Lambda_sets[j - 1]), Fraction(0))

    def h(self, j: int) -> float:
        return float(self.h_exact(j))

    def Lambda(self, j: int) -> tuple:
        return self.Lambda_sets[j - 1]

    def scale(self, j: int) -> float:
        return float(self.scales[j - 1])

    def require_representable(self):
        if not self.representable:
            desc = ", ".join(f"log_{self.lam} λ_{j + 1} = {t}" for j, t in enumerate(self.tower))
            raise LadderError(f"paper-mode ladder is not representable on a grid ({desc})")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "mu": self.mu,
            "J": self.J,
            "mode": self.mode,
            "n": self.n,
            "Lambda": [list(L) for L in self.Lambda_sets],
            "h": [str(self.h_exact(j)) for j in range(1, len(self.Lambda_sets) + 1)],
            "scales": [float(s) for s in self.scales],
            "mollifier_freqs": [float(f) for f in self.mollifier_freqs],
            "tower": list(self.tower),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


MAX_B_NORM = math.sqrt(2.0)


def max_toy_exponent(lam: int, N: int) -> int:
    """Largest ℓ with ``2 λ^ℓ max|b_k| <= N/2`` (doubled frequencies stay on the grid)."""
    ell = 0
    while 2 * lam ** (ell + 1) * MAX_B_NORM <= N / 2:
        ell += 1
    return ell


def default_scale(lam: int, mu: int, Lambda_j: Sequence[int]) -> float:
    """Toy level scale ``λ^{8 min Λ_j / μ}`` (the ``λ_{j-1}^8`` proxy)."""
    return float(lam) ** (8.0 * min(Lambda_j) / mu)


def build_ladder(
    lam: int,
    mu: int | None = None,
    J: int = 1,
    grid: Grid | None = None,
    mode: str = "toy",
    Lambda: Sequence[Sequence[int]] | None = None,
    scales: Sequence[float] | None = None,
    n: int | None = None,
    mollifier_freqs: Sequence[float] | None = None,
) -> LadderParams:
    """Validate and assemble a frequency ladder.

    In toy mode the sets Λ_j are taken from ``Lambda`` or, when omitted, the
    exponents ``1..ℓ_max`` allowed by the grid are split into ``J`` consecutive
    runs.  Paper mode stores only symbolic descriptors.
    """
    if not _is_pow2(int(lam)) or int(lam) != lam:
        raise LadderError(f"λ must be a power of two >= 2, got {lam}")
    lam = int(lam)
    n = grid.n if grid is not None else (3 if n is None else n)
    mu = paper_mu(n) if mu is None else int(mu)
    if J < 1:
        raise LadderError("need at least one level")
    if mode == "paper":
        tower = tuple(tower_descriptor(lam, mu, j) for j in range(1, J + 1))
        return LadderParams(lam, mu, J, (), "paper", n, (), (), tower)
    if mode != "toy":
        raise LadderError(f"unknown ladder mode {mode!r}")

    if Lambda is None:
        if grid is None:
            raise LadderError("toy auto-fill needs a grid")
        top = max_toy_exponent(lam, grid.N)
        if top < J:
            raise LadderError(f"grid N={grid.N} admits only {top} exponents for λ={lam}, need {J} levels")
        chunks = np.array_split(np.arange(1, top + 1), J)
        Lambda = [tuple(int(x) for x in c) for c in chunks]
    Lambda = tuple(tuple(int(x) for x in L) for L in Lambda)
    if len(Lambda) != J:
        raise LadderError(f"expected {J} frequency sets, got {len(Lambda)}")
    for j, L in enumerate(Lambda, start=1):
        if len(L) == 0:
            raise LadderError(f"Λ_{j} is empty")
        if any(b <= a for a, b in zip(L, L[1:])):
            raise LadderError(f"Λ_{j} must be strictly increasing")
        if L[0] < 1:
            raise LadderError(f"Λ_{j} must contain positive integers")
    for j in range(1, J):
        if max(Lambda[j - 1]) >= min(Lambda[j]):
            raise LadderError(f"scale separation fails between levels {j} and {j + 1}")
    if grid is not None:
        top = max(max(L) for L in Lambda)
        if 2 * lam**top * MAX_B_NORM > grid.N / 2:
            raise LadderError(
                f"Nyquist violation: 2·λ^{top}·√2 = {2 * lam**top * MAX_B_NORM:.1f} exceeds N/2 = {grid.N // 2}"
            )
    if scales is None:
        scales = tuple(default_scale(lam, mu, L) for L in Lambda)
    scales = tuple(float(s) for s in scales)
    if len(scales) != J or any(s <= 0 for s in scales):
        raise LadderError("need one positive scale per level")
    if mollifier_freqs is None:
        mollifier_freqs = tuple(float(lam) ** max(L) for L in Lambda)
    mollifier_freqs = tuple(float(f) for f in mollifier_freqs)
    if len(mollifier_freqs) != J:
        raise LadderError("need one mollifier frequency per level")
    return LadderParams(lam, mu, J, Lambda, "toy", n, scales, mollifier_freqs, ())


# -- elementary fields ----------------------------------------------------------------------


def _mode_indices(grid: Grid, m: Sequence[int]) -> list[tuple[tuple[int, ...], complex]]:
    """Storage slots (and conjugation flags) of ``exp(i m·x)`` in the half-spectrum layout."""
    m = [int(x) for x in m]
    N = grid.N
    if any(abs(x) >= N // 2 for x in m):
        raise LadderError(f"wavenumber {m} is not representable on N={N}")
    slots = []
    for sign in (1, -1):
        mm = [sign * x for x in m]
        if mm[-1] < 0:
            continue
        idx = tuple(x % N for x in mm[:-1]) + (mm[-1],)
        slots.append((idx, sign))
    return slots


def cosine_field(grid: Grid, m: Sequence[int], amplitude: float = 1.0) -> SpectralField:
    """``amplitude · cos(m·x)`` with exact coefficients."""
    f = SpectralField.zeros(grid)
    if all(int(x) == 0 for x in m):
        f.coeffs[(0,) * grid.n] = amplitude
        return f
    seen = set()
    for idx, _ in _mode_indices(grid, m):
        if idx in seen:
            continue
        seen.add(idx)
        f.coeffs[idx] += 0.5 * amplitude
    return f


def oscillator_profile(j: int, k_index: int, ladder: LadderParams, grid: Grid, sys: NashSystem) -> SpectralField:
    """``Ψ_{j,k}(x) = Σ_ℓ cos(λ^ℓ b_k·x) / (λ^{2ℓ}|b_k|²√(h_j ℓ))`` with exact coefficients."""
    ladder.require_representable()
    b = sys.a_dirs[k_index]
    b2 = float(np.dot(b, b))
    h = ladder.h(j)
    out = SpectralField.zeros(grid)
    for ell in ladder.Lambda(j):
        freq = ladder.lam**ell
        w = 1.0 / (freq**2 * b2 * math.sqrt(h * ell))
        out = out + cosine_field(grid, freq * b, w)
    return out


def _radial_bump(r: np.ndarray) -> np.ndarray:
    out = np.zeros_like(r)
    inside = r < 1
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def mollifier_symbol(eta: np.ndarray, n: int, nodes: int = 400) -> np.ndarray:
    """Fourier transform of the unit-mass radial bump ``C exp(-1/(1-|x|²))`` on ℝⁿ at ``|η|``.

    Uses the radial Hankel form ``ρ̂(η) ∝ ∫_0^1 ρ(r) r^{n-1} Γ(ν+1)(2/(|η|r))^ν J_ν(|η|r) dr``
    with ``ν = n/2 - 1`` and Gauss–Legendre quadrature; normalized so ``ρ̂(0) = 1``.
    """
    eta = np.asarray(eta, dtype=float)
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (x + 1.0)
    w = 0.5 * w * _radial_bump(r) * r ** (n - 1)
    nu = n / 2.0 - 1.0
    flat = np.abs(eta).ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    z = np.outer(uniq, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        kern = special.gamma(nu + 1.0) * (2.0 / z) ** nu * special.jv(nu, z)
    kern = np.where(z == 0, 1.0, kern)
    vals = kern @ w / np.sum(w)
    return vals[inv].reshape(eta.shape)


def mollifier_multiplier(grid: Grid, freq: float, real: bool = True) -> np.ndarray:
    """Periodized ``ρ_j`` of width ``freq^{-2}`` as a multiplier: ``ρ̂(ξ / freq²)``."""
    k2 = grid.k2(real)
    return mollifier_symbol(np.sqrt(k2) / freq**2, grid.n)


# -- level construction ------------------------------------------------------------------------


def _is_constant(f: SpectralField) -> bool:
    c = f.coeffs.copy()
    c[(Ellipsis,) + (0,) * f.grid.n] = 0
    return not np.any(c)


@dataclass
class LevelTerms:
    """One level of the construction with its four-way split."""

    j: int
    scale: float
    V: SpectralField
    Vp: SpectralField
    Vr1: SpectralField
    Vr2: SpectralField
    Vr3: SpectralField
    gammas: list
    mollifier: np.ndarray
    previous: SpectralField | None
    sys: NashSystem = field(repr=False)
    ladder: LadderParams = field(repr=False)

    @property
    def Vr(self) -> SpectralField:
        return self.Vr1 + self.Vr2 + self.Vr3

    @property
    def prefactor(self) -> float:
        return math.sqrt(2.0) * math.sqrt(self.scale)

    def atom(self, k_index: int, ell: int) -> SpectralField:
        """``Φ_{j,k,ℓ} = T(Γ_k cos(λ^ℓ b_k·x)) k / √(h_j ℓ)`` (without the √2 s^{1/2} prefactor)."""
        g = self.gammas[k_index]
        grid = g.grid
        c = cosine_field(grid, self.ladder.lam**ell * self.sys.a_dirs[k_index])
        s = _scalar_product(g, c) / math.sqrt(self.ladder.h(self.j) * ell)
        k = self.sys.K_set[k_index].astype(float)
        return SpectralField(grid, np.stack([s.coeffs * ki for ki in k]), "vector", True)

    def radicand(self, k_index: int) -> SpectralField:
        """``Γ_k(Id - s⁻¹ DV_{j-1})²``, which is affine in ``DV_{j-1}`` and hence band-limited."""
        grid = self.gammas[0].grid
        n = grid.n
        kind, a, b = self.sys.kinds[k_index]
        off = 1.0 / (4.0 * (n - 1))
        if self.previous is None:
            M = SpectralField.zeros(grid, "matrix")
        else:
            M = deformation(self.previous) * (-1.0 / self.scale)
        entry = M.component(a, b)
        if kind == "diag":
            return entry + SpectralField.constant(grid, 0.5)
        sign = 0.5 if kind == "plus" else -0.5
        return entry * sign + SpectralField.constant(grid, off)


def _scalar_product(f: SpectralField, g: SpectralField) -> SpectralField:
    if _is_constant(f):
        return g * f.coeffs[(0,) * f.grid.n].real
    if _is_constant(g):
        return f * g.coeffs[(0,) * g.grid.n].real
    grid = f.grid
    a = to_padded_physical(f.coeffs, grid, True)
    b = to_padded_physical(g.coeffs, grid, True)
    return SpectralField(grid, from_padded_physical(a * b, grid, True), "scalar", True)


def _vector(grid: Grid, coeffs: np.ndarray) -> SpectralField:
    return SpectralField(grid, coeffs, "vector", True)


def build_level(v: SpectralField | None, j: int, ladder: LadderParams, sys: NashSystem, grid: Grid) -> LevelTerms:
    """Construct ``V_j = 𝒱_j[v]`` together with its principal/remainder split."""
    ladder.require_representable()
    if grid.n != sys.n:
        raise ValueError("grid and Nash system dimensions differ")
    top = max(ladder.Lambda(j))
    if 2 * ladder.lam**top * MAX_B_NORM > grid.N / 2:
        raise LadderError(f"Nyquist violation at level {j} on N={grid.N}")
    s = ladder.scale(j)
    gammas = gamma_field(v, sys, s, grid=grid)
    const = v is None or all(_is_constant(g) for g in gammas)
    pref = math.sqrt(2.0) * math.sqrt(s)
    rho = mollifier_multiplier(grid, ladder.mollifier_freqs[j - 1])
    n = grid.n
    spec_shape = (n,) + grid.spectral_shape(True)

    if const:
        U = np.zeros(spec_shape, dtype=complex)
        P = np.zeros(spec_shape, dtype=complex)
        for ki in range(sys.size):
            gk = gammas[ki].coeffs[(0,) * n].real
            psi = oscillator_profile(j, ki, ladder, grid, sys)
            lap = laplacian(psi).coeffs
            kv = sys.K_set[ki].astype(float)
            for i in range(n):
                if kv[i]:
                    U[i] += gk * kv[i] * psi.coeffs
                    P[i] -= gk * kv[i] * lap
        R2 = np.zeros(spec_shape, dtype=complex)
        R3 = np.zeros(spec_shape, dtype=complex)
    else:
        lam, h = ladder.lam, ladder.h(j)
        accU = np.zeros((n,) + (grid.padded_N,) * n)
        accP = np.zeros_like(accU)
        accR2 = np.zeros_like(accU)
        accR3 = np.zeros_like(accU)
        for ki in range(sys.size):
            kv = sys.K_set[ki].astype(float)
            bv = sys.a_dirs[ki].astype(float)
            g = gammas[ki]
            # Ψ, ∇Ψ = χ b and -ΔΨ depend on x only through b·x.
            psi_p = np.zeros(())
            chi_p = np.zeros(())
            lap_p = np.zeros(())
            for ell in ladder.Lambda(j):
                m = lam**ell * sys.a_dirs[ki]
                w = 1.0 / (lam ** (2 * ell) * float(bv @ bv) * math.sqrt(h * ell))
                psi_p = psi_p + w * padded_trig(grid, m, "cos")
                chi_p = chi_p - w * lam**ell * padded_trig(grid, m, "sin")
                lap_p = lap_p + padded_trig(grid, m, "cos") / math.sqrt(h * ell)
            grad_g = gradient(g)
            d_b = to_padded_physical(sum(bv[i] * grad_g.coeffs[i] for i in range(n)), grid, True)
            d_k_spec = SpectralField(grid, sum(kv[i] * grad_g.coeffs[i] for i in range(n)), "scalar", True)
            d_k = to_padded_physical(d_k_spec.coeffs, grid, True)
            g_p = to_padded_physical(g.coeffs, grid, True)
            lapg_p = to_padded_physical(laplacian(g).coeffs, grid, True)
            grad_dk = to_padded_physical(gradient(d_k_spec).coeffs, grid, True)
            gp = g_p * psi_p
            gl = g_p * lap_p
            # D(Γk)∇Ψ + D(Ψk)∇Γ with ∇Ψ = χ b and b·k = 0:  χ (-2 ∂_bΓ k + ∂_kΓ b)
            t_k = -2.0 * chi_p * d_b
            t_b = chi_p * d_k
            for i in range(n):
                if kv[i]:
                    accU[i] += kv[i] * gp
                    accP[i] += kv[i] * gl
                    accR2[i] += kv[i] * t_k
                    accR3[i] -= kv[i] * (psi_p * lapg_p)
                if bv[i]:
                    accR2[i] += bv[i] * t_b
                # div D(Γk) = -k ΔΓ + ∇(k·∇Γ)
                accR3[i] += psi_p * grad_dk[i]
        U = from_padded_physical(accU, grid, True)
        P = from_padded_physical(accP, grid, True)
        R2 = from_padded_physical(accR2, grid, True)
        R3 = from_padded_physical(accR3, grid, True)
        del accU, accP, accR2, accR3

    Ufield = _vector(grid, U)
    V = multiplier(divergence(deformation(Ufield)), rho) * pref
    Vp = _vector(grid, P) * pref
    Vr1 = multiplier(Vp, rho) - Vp
    Vr2 = multiplier(_vector(grid, R2), rho) * pref
    Vr3 = multiplier(_vector(grid, R3), rho) * pref
    return LevelTerms(j, s, V, Vp, Vr1, Vr2, Vr3, gammas, rho, v, sys, ladder)


def block_operator(v: SpectralField | None, j: int, ladder: LadderParams, sys: NashSystem, grid: Grid | None = None) -> SpectralField:
    """``𝒱_j[v]``; ``v = None`` stands for the zero field."""
    grid = grid or (v.grid if v is not None else None)
    if grid is None:
        raise ValueError("grid required when v is None")
    return build_level(v, j, ladder, sys, grid).V


@dataclass
class BlockBundle:
    """All levels ``V_1..V_J`` of an iterated construction."""

    grid: Grid
    ladder: LadderParams
    sys: NashSystem
    levels: list

    def _sum(self, attr: str) -> SpectralField:
        out = SpectralField.zeros(self.grid, "vector")
        for lv in self.levels:
            out = out + getattr(lv, attr)
        return out

    @property
    def V(self) -> SpectralField:
        return self._sum("V")

    @property
    def Vp(self) -> SpectralField:
        return self._sum("Vp")

    @property
    def Vr(self) -> SpectralField:
        out = SpectralField.zeros(self.grid, "vector")
        for lv in self.levels:
            out = out + lv.Vr
        return out

    def level(self, j: int) -> LevelTerms:
        return self.levels[j - 1]


def iterate_blocks(ladder: LadderParams, sys: NashSystem, grid: Grid) -> BlockBundle:
    """``V_0 = 0`` and ``V_j = 𝒱_j[V_{j-1}]`` for ``j = 1..J``.

    Each level re-checks the admissibility ``max|DV_{j-1}| <= r0 s_j`` and
    raises :class:`NashDomainError` if it fails.
    """
    ladder.require_representable()
    levels = []
    prev = None
    for j in range(1, ladder.J + 1):
        try:
            lv = build_level(prev, j, ladder, sys, grid)
        except NashDomainError as exc:
            raise NashDomainError(f"level {j}: {exc}", k=exc.k, measured=exc.measured) from exc
        levels.append(lv)
        prev = lv.V
    return BlockBundle(grid, ladder, sys, levels)


# -- force -------------------------------------------------------------------------------------


def pdiv(m: SpectralField) -> SpectralField:
    """``ℙ div`` of a matrix field (the divergence of a periodic field has zero mean)."""
    return helmholtz_project(divergence(m), allow_mean=True)


@dataclass
class ForceBundle:
    """Residual force of an assembled profile and its structured split.

    ``F`` is computed directly as ``-ΔV + ℙ div(V⊗V)``.  The split satisfies
    ``F = F1 + F2 + F3 + F_top`` where ``F_top = -ΔV_J`` is the linear term of
    the highest level, which no further level cancels in a finite construction.

    Attributes:
        F11, F12: Per-level resonant (doubled frequency) and cross-atom matrices.
        F2: Cross-level terms keyed by ``(j1, j2)`` with ``j1 < j2``.
        VpVp: Per-level ``T(V_j^{(p)} ⊗ V_j^{(p)})``.
    """

    F: SpectralField
    F1: SpectralField
    F11: list
    F12: list
    F2: dict
    F3: SpectralField
    F_top: SpectralField
    VpVp: list

    @property
    def F2_total(self) -> SpectralField:
        out = SpectralField.zeros(self.F.grid, "vector")
        for v in self.F2.values():
            out = out + v
        return out

    @property
    def split_sum(self) -> SpectralField:
        return self.F1 + self.F2_total + self.F3 + self.F_top


def _padded_radicands(level: LevelTerms) -> list:
    """Padded values (or constants) of ``Γ_k(Id - s⁻¹ DV_{j-1})²`` for every k."""
    sys = level.sys
    n = sys.n
    off = 1.0 / (4.0 * (n - 1))
    if level.previous is None:
        return list(sys.radicands(np.eye(n)))
    grid = level.previous.grid
    DV = deformation(level.previous)
    cache = {}

    def entry(a, b):
        key = (min(a, b), max(a, b))
        if key not in cache:
            cache[key] = -to_padded_physical(DV.coeffs[key], grid, True) / level.scale
        return cache[key]

    out = []
    for kind, a, b in sys.kinds:
        if kind == "diag":
            out.append(entry(a, a) + 0.5)
        elif kind == "plus":
            out.append(off + 0.5 * entry(a, b))
        else:
            out.append(off - 0.5 * entry(a, b))
    return out


def _kk_accumulate(acc: dict, kv: np.ndarray, values):
    for a in range(len(kv)):
        for b in range(a, len(kv)):
            if kv[a] and kv[b]:
                acc[(a, b)] = acc.get((a, b), 0.0) + kv[a] * kv[b] * values


def _matrix_from_entries(grid: Grid, acc: dict) -> SpectralField:
    zero = np.zeros((1,) * grid.n)
    return SpectralField(grid, symmetric_from_padded(lambda a, b: acc.get((a, b), zero), grid), "matrix", True)


def force_f11(level: LevelTerms) -> SpectralField:
    """``(s/h) Σ_k Σ_ℓ ℓ⁻¹ T(Γ_k² cos(2λ^ℓ b_k·x)) k⊗k``; ``Γ_k²`` is affine in ``DV_{j-1}``."""
    grid = level.gammas[0].grid
    lad, sys = level.ladder, level.sys
    rads = _padded_radicands(level)
    acc = {}
    for ki in range(sys.size):
        c2 = sum(padded_trig(grid, 2 * lad.lam**ell * sys.a_dirs[ki], "cos") / ell for ell in lad.Lambda(level.j))
        _kk_accumulate(acc, sys.K_set[ki].astype(float), rads[ki] * c2)
    return _matrix_from_entries(grid, acc) * (level.scale / lad.h(level.j))


def diagonal_atom_sum(level: LevelTerms) -> SpectralField:
    """``2 s Σ_{k,ℓ} T(Φ_{k,ℓ}⊗Φ_{k,ℓ})``, the same-atom part of ``T(V^{(p)}⊗V^{(p)})``."""
    grid = level.gammas[0].grid
    lad, sys = level.ladder, level.sys
    h = lad.h(level.j)
    acc = {}
    for ki in range(sys.size):
        g = level.gammas[ki]
        const = _is_constant(g)
        g_p = g.coeffs[(0,) * grid.n].real if const else to_padded_physical(g.coeffs, grid, True)
        sq = 0.0
        for ell in lad.Lambda(level.j):
            gc = g_p * padded_trig(grid, lad.lam**ell * sys.a_dirs[ki], "cos")
            if not const:
                # truncate the atom to the grid before squaring
                gc = to_padded_physical(from_padded_physical(gc, grid, True), grid, True)
            sq = sq + gc * gc / (h * ell)
        _kk_accumulate(acc, sys.K_set[ki].astype(float), sq)
    return _matrix_from_entries(grid, acc) * (2.0 * level.scale)


def f12_pair_sum(level: LevelTerms) -> SpectralField:
    """``2 s Σ_{(k1,ℓ1) ≠ (k2,ℓ2)} T(Φ_{k1,ℓ1} ⊗ Φ_{k2,ℓ2})`` summed pair by pair (reference form)."""
    grid = level.gammas[0].grid
    lad, sys = level.ladder, level.sys
    atoms = [(ki, ell) for ki in range(sys.size) for ell in lad.Lambda(level.j)]
    padded = {a: to_padded_physical(level.atom(*a).coeffs, grid, True) for a in atoms}
    n = grid.n
    out = np.zeros((n, n) + grid.spectral_shape(True), dtype=complex)
    for a in atoms:
        for b in atoms:
            if a == b:
                continue
            pa, pb = padded[a], padded[b]
            for i in range(n):
                for jj in range(n):
                    out[i, jj] += from_padded_physical(pa[i] * pb[jj], grid, True)
    return SpectralField(grid, out * (2.0 * level.scale), "matrix", True)


def residual_force(bundle: BlockBundle) -> ForceBundle:
    """Residual force computed directly and through the level-by-level split."""
    grid = bundle.grid
    levels = bundle.levels
    V = bundle.V
    F = laplacian(V) * -1.0 + pdiv(dealiased_outer(V, V))

    VpVp = [dealiased_outer(lv.Vp, lv.Vp) for lv in levels]
    F11, F12 = [], []
    F1 = SpectralField.zeros(grid, "vector")
    for lv, pp in zip(levels, VpVp):
        F11.append(force_f11(lv))
        F12.append(pp - diagonal_atom_sum(lv))
        lin = SpectralField.zeros(grid, "vector") if lv.previous is None else laplacian(lv.previous) * -1.0
        F1 = F1 + lin + pdiv(pp)

    F2 = {}
    for a in range(len(levels)):
        pa = to_padded_physical(levels[a].Vp.coeffs, grid, True)
        for b in range(a + 1, len(levels)):
            pb = to_padded_physical(levels[b].Vp.coeffs, grid, True)
            m = symmetric_from_padded(lambda i, j: pa[i] * pb[j] + pb[i] * pa[j], grid)
            F2[(a + 1, b + 1)] = pdiv(SpectralField(grid, m, "matrix", True))

    vp = to_padded_physical(bundle.Vp.coeffs, grid, True)
    vr = to_padded_physical(bundle.Vr.coeffs, grid, True)
    m = symmetric_from_padded(lambda i, j: vp[i] * vr[j] + vr[i] * vp[j] + vr[i] * vr[j], grid)
    F3 = pdiv(SpectralField(grid, m, "matrix", True))
    F_top = laplacian(levels[-1].V) * -1.0
    return ForceBundle(F, F1, F11, F12, F2, F3, F_top, VpVp)


def relative_error(a: SpectralField, b: SpectralField) -> float:
    """``max|â - b̂| / max(max|â|, max|b̂|)`` over coefficients."""
    d = np.max(np.abs(a.coeffs - b.as_layout(a.real).coeffs), initial=0.0)
    scale = max(a.max_coeff(), b.max_coeff())
    return float(d / scale) if scale > 0 else float(d)


def nodal_relative_error(a: SpectralField, b: SpectralField) -> float:
    """Relative max-norm difference of the nodal values."""
    pa, pb = a.physical(), b.physical()
    scale = max(np.max(np.abs(pa), initial=0.0), np.max(np.abs(pb), initial=0.0))
    d = np.max(np.abs(pa - pb), initial=0.0)
    return float(d / scale) if scale > 0 else float(d)
