"""Fixed-point solvers for stationary and time-dependent perturbations, and the regime classifier."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .blocks import pdiv
from .littlewood_paley import BesovParams, besov_norm, chemin_lerner_norm
from .reports import DiagnosticReport
from .spectral import (
    SpectralField,
    dealiased_outer,
    divergence,
    helmholtz_project,
    inverse_laplacian,
    lp_norm,
    save_field,
    symmetric_from_padded,
    to_padded_physical,
)

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """Picard iteration stopped contracting; ``log`` holds the iteration records."""

    def __init__(self, msg: str, log_records=None):
        super().__init__(msg)
        self.log = log_records or []


class InstabilityError(RuntimeError):
    """A trajectory norm grew beyond the allowed multiple of its initial value."""


class SmallnessError(ValueError):
    """Initial data exceed the configured smallness threshold."""


# -- stationary problem --------------------------------------------------------------------


@dataclass(frozen=True)
class StationarySolveConfig:
    """Picard iteration settings.

    Args:
        r: Integrability of the solution norm ``B^{n/r-1}_{r,1}``; must lie in ``(n/2, n)``.
        max_iters: Iteration cap.
        tol: Stop when consecutive iterates are closer than this.
        radius: Optional ball radius; iterates outside it are flagged in the log.
        oversample: Quadrature oversampling for ``r != 2``.
    """

    r: float = 2.0
    max_iters: int = 30
    tol: float = 1e-10
    radius: float | None = None
    oversample: int | None = None

    def validate(self, n: int):
        if not (n / 2 < self.r < n):
            raise ValueError(f"solution exponent r = {self.r:g} must lie in (n/2, n) = ({n / 2:g}, {n:g})")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters must be positive and tol > 0")

    def besov(self, n: int) -> BesovParams:
        return BesovParams(self.r, 1, n / self.r - 1)


@dataclass
class IterationRecord:
    iteration: int
    distance: float
    factor: float
    norm: float
    inside_ball: bool


@dataclass
class StationaryResult:
    W: SpectralField
    log: list
    converged: bool
    projected_force: bool = False

    @property
    def factors(self) -> list[float]:
        return [rec.factor for rec in self.log if np.isfinite(rec.factor)]

    @property
    def max_factor(self) -> float:
        f = self.factors
        return max(f) if f else 0.0

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": len(self.log),
            "projected_force": self.projected_force,
            "max_contraction": self.max_factor,
            "log": [rec.__dict__ for rec in self.log],
        }


def stationary_map(W: SpectralField, V: SpectralField, F: SpectralField) -> SpectralField:
    """``𝒳[W] = -(-Δ)^{-1}F - (-Δ)^{-1}ℙdiv(V⊗W + W⊗V + W⊗W)``."""
    B = dealiased_outer(V, W) + dealiased_outer(W, V) + dealiased_outer(W, W)
    return inverse_laplacian(F + pdiv(B)) * -1.0


def solve_stationary(V: SpectralField, F: SpectralField, cfg: StationarySolveConfig) -> StationaryResult:
    """Fixed point of :func:`stationary_map` by Picard iteration from ``W = 0``.

    The contraction factor of step ``k`` is ``‖W_{k+1} - W_k‖ / ‖W_k - W_{k-1}‖``.

    Raises:
        ConvergenceError: three consecutive factors ``>= 1``, or no convergence within ``max_iters``.
    """
    n = V.grid.n
    cfg.validate(n)
    bp = cfg.besov(n)
    norm = lambda f: besov_norm(f, bp, oversample=cfg.oversample).value  # noqa: E731

    PF = helmholtz_project(F, allow_mean=True)
    projected = norm(PF - F) > 1e-12 * max(norm(F), 1e-300)
    if projected:
        log.warning("force is not divergence-free; using its Leray projection")
    F = PF

    W = SpectralField.zeros(V.grid, "vector")
    records: list[IterationRecord] = []
    prev_dist = math.nan
    bad = 0
    for it in range(1, cfg.max_iters + 1):
        W_new = stationary_map(W, V, F)
        dist = norm(W_new - W)
        factor = dist / prev_dist if np.isfinite(prev_dist) and prev_dist > 0 else math.nan
        wn = norm(W_new)
        inside = cfg.radius is None or wn <= cfg.radius
        records.append(IterationRecord(it, dist, factor, wn, inside))
        log.debug("picard %d: distance %.3e factor %.3g norm %.3e", it, dist, factor, wn)
        W = W_new
        if dist < cfg.tol:
            return StationaryResult(W, records, True, projected)
        bad = bad + 1 if (np.isfinite(factor) and factor >= 1.0) else 0
        if bad >= 3:
            raise ConvergenceError("Picard iteration diverges (contraction factor >= 1 three times)", records)
        prev_dist = dist
    raise ConvergenceError(f"no convergence within {cfg.max_iters} iterations", records)


def steady_residual(U: SpectralField, bp: BesovParams, oversample: int | None = None) -> float:
    """``‖(-Δ)^{-1}(-ΔU + ℙdiv(U⊗U))‖`` in the given norm."""
    res = U + inverse_laplacian(pdiv(dealiased_outer(U, U)))
    return besov_norm(res, bp, oversample=oversample).value


# -- evolution problem ---------------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionConfig:
    """Time stepping and monitoring settings.

    Args:
        dt: Time step.
        T: Final time.
        theta: Time exponent of the Chemin–Lerner monitor, ``2 < θ < ∞``.
        p, q: Exponents of the ``B^{n/p-1}_{p,q}`` monitor.
        eta: Smallness threshold for the initial data in that norm.
        blowup: Abort when the norm exceeds this multiple of its initial value.
        store_every: Keep every ``store_every``-th step in the trajectory.
        windows: Number of dyadic time windows ``[T 2^{-k-1}, T 2^{-k}]``.
    """

    dt: float = 0.01
    T: float = 10.0
    theta: float = 4.0
    p: float = 2.0
    q: float = 2.0
    eta: float = 1.0
    blowup: float = 10.0
    store_every: int = 10
    windows: int = 5
    oversample: int | None = None

    def validate(self, n: int):
        if not (self.dt > 0 and self.T > 0):
            raise ValueError("dt and T must be positive")
        if not (2 < self.theta < math.inf):
            raise ValueError(f"θ = {self.theta:g} must lie in (2, ∞)")
        if not (2 <= self.p < 2 * n):
            raise ValueError(f"p = {self.p:g} must lie in [2, 2n)")
        if not n / self.p - 1 + 1 / self.theta > 0:
            raise ValueError("need n/p - 1 + 1/θ > 0")
        if self.store_every < 1:
            raise ValueError("store_every must be positive")

    def besov(self, n: int) -> BesovParams:
        return BesovParams(self.p, self.q, n / self.p - 1)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))


@dataclass
class EvolutionResult:
    times: np.ndarray
    trajectory: list
    norms: np.ndarray
    l2: np.ndarray
    windows: list = field(default_factory=list)

    @property
    def decay(self) -> float:
        return float(self.norms[-1] / self.norms[0]) if self.norms[0] > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "T": float(self.times[-1]),
            "initial_norm": float(self.norms[0]),
            "final_norm": float(self.norms[-1]),
            "decay": self.decay,
            "windows": self.windows,
        }


def _phi1(z: np.ndarray) -> np.ndarray:
    return special.exprel(z)


def evolution_nonlinearity(U: SpectralField | None, w: SpectralField, U_padded: np.ndarray | None = None) -> SpectralField:
    """``ℙdiv(U⊗w + w⊗U + w⊗w)``; ``U_padded`` optionally caches the padded values of ``U``."""
    grid = w.grid
    wp = to_padded_physical(w.coeffs, grid, True)
    if U is None and U_padded is None:
        entry = lambda i, j: wp[i] * wp[j]  # noqa: E731
    else:
        up = U_padded if U_padded is not None else to_padded_physical(U.coeffs, grid, True)
        entry = lambda i, j: up[i] * wp[j] + wp[i] * up[j] + wp[i] * wp[j]  # noqa: E731
    return pdiv(SpectralField(grid, symmetric_from_padded(entry, grid), "matrix", True))


def etd1_step(U: SpectralField | None, w: SpectralField, dt: float, U_padded: np.ndarray | None = None) -> SpectralField:
    """``ŵ ← e^{-dt|ξ|²} ŵ - dt φ1(-dt|ξ|²) N̂(w)`` with the exact heat propagator."""
    z = -dt * w.grid.k2(w.real)
    N = evolution_nonlinearity(U, w, U_padded)
    return w.with_coeffs(np.exp(z) * w.coeffs - dt * _phi1(z) * N.coeffs)


def dyadic_windows(T: float, count: int) -> list[tuple[float, float]]:
    """``[T 2^{-k-1}, T 2^{-k}]`` for ``k = count-1..0`` in increasing time order."""
    return [(T * 2.0 ** (-k - 1), T * 2.0 ** (-k)) for k in reversed(range(count))]


def window_norms(times, traj, bp: BesovParams, theta: float, windows, oversample=None) -> list[dict]:
    times = np.asarray(times)
    out = []
    bp_theta = BesovParams(bp.p, bp.q, bp.s + 2 / theta)
    for a, b in windows:
        sel = [i for i, t in enumerate(times) if a - 1e-12 <= t <= b + 1e-12]
        if len(sel) < 2:
            out.append({"start": a, "end": b, "samples": len(sel), "sup": math.nan, "cl_inf": math.nan, "cl_theta": math.nan})
            continue
        ts = times[sel]
        fs = [traj[i] for i in sel]
        sup = max(besov_norm(f, bp, oversample=oversample).value for f in fs)
        cl_inf = chemin_lerner_norm(fs, ts, math.inf, bp, oversample=oversample).value
        cl_theta = chemin_lerner_norm(fs, ts, theta, bp_theta, oversample=oversample).value
        out.append({"start": a, "end": b, "samples": len(sel), "sup": sup, "cl_inf": cl_inf, "cl_theta": cl_theta})
    return out


def solve_evolution(
    U: SpectralField | None, w0: SpectralField, cfg: EvolutionConfig, store: str | Path | None = None
) -> EvolutionResult:
    """Mild solution of ``∂_t w - Δw + ℙdiv(U⊗w + w⊗U + w⊗w) = 0`` by first-order exponential stepping.

    Args:
        U: Stationary background (``None`` for zero).
        w0: Divergence-free initial perturbation.
        cfg: Step size, horizon and monitoring.
        store: Optional directory for the trajectory dumps, ``index.json`` and ``norms.csv``.

    Raises:
        SmallnessError: ``‖w0‖ > eta``.
        InstabilityError: the monitored norm exceeds ``blowup`` times its initial value.
    """
    n = w0.grid.n
    cfg.validate(n)
    bp = cfg.besov(n)
    norm = lambda f: besov_norm(f, bp, oversample=cfg.oversample).value  # noqa: E731
    div = lp_norm(divergence(w0), 2)
    if div > 1e-10 * max(lp_norm(w0, 2), 1e-300):
        raise ValueError(f"initial data are not divergence-free (‖div w0‖ = {div:.3e})")
    n0 = norm(w0)
    if n0 > cfg.eta:
        raise SmallnessError(f"‖w0‖ = {n0:.4g} exceeds the smallness threshold η = {cfg.eta:.4g}")

    times, traj, norms, l2 = [0.0], [w0], [n0], [lp_norm(w0, 2)]
    if U is not None and not U.real:
        raise ValueError("the background must be a real field")
    U_padded = None if U is None else to_padded_physical(U.coeffs, U.grid, True)
    w = w0
    for step in range(1, cfg.steps + 1):
        w = etd1_step(U, w, cfg.dt, U_padded)
        if step % cfg.store_every == 0 or step == cfg.steps:
            nw = norm(w)
            if not np.isfinite(nw) or (n0 > 0 and nw > cfg.blowup * n0):
                raise InstabilityError(f"norm {nw:.3e} at t = {step * cfg.dt:.4g} exceeds {cfg.blowup:g}× the initial {n0:.3e}")
            times.append(step * cfg.dt)
            traj.append(w)
            norms.append(nw)
            l2.append(lp_norm(w, 2))
    times_arr = np.array(times)
    res = EvolutionResult(times_arr, traj, np.array(norms), np.array(l2))
    res.windows = window_norms(times_arr, traj, bp, cfg.theta, dyadic_windows(times_arr[-1], cfg.windows), cfg.oversample)
    if store is not None:
        write_trajectory(res, store)
    return res


def write_trajectory(res: EvolutionResult, directory: str | Path) -> Path:
    """Dump every stored slice and write ``index.json`` and ``norms.csv``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    index = []
    for i, (t, f, nb, n2) in enumerate(zip(res.times, res.trajectory, res.norms, res.l2)):
        base = d / f"w_{i:05d}"
        save_field(f, base)
        index.append({"t": float(t), "file": base.name, "norms": {"besov": float(nb), "l2": float(n2)}})
    (d / "index.json").write_text(json.dumps(index, indent=2))
    with open(d / "norms.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "besov", "l2"])
        for t, nb, n2 in zip(res.times, res.norms, res.l2):
            wr.writerow([repr(float(t)), repr(float(nb)), repr(float(n2))])
    return d


def step_halving_order(U: SpectralField | None, w0: SpectralField, dt: float, T: float) -> tuple[float, list[float]]:
    """Observed order ``log2(‖w_dt - w_{dt/2}‖ / ‖w_{dt/2} - w_{dt/4}‖)`` at time ``T``."""
    finals = []
    U_padded = None if U is None else to_padded_physical(U.coeffs, U.grid, True)
    for k in range(3):
        h = dt / 2**k
        w = w0
        for _ in range(int(round(T / h))):
            w = etd1_step(U, w, h, U_padded)
        finals.append(w)
    e1 = lp_norm(finals[0] - finals[1], 2)
    e2 = lp_norm(finals[1] - finals[2], 2)
    order = math.log2(e1 / e2) if e1 > 0 and e2 > 0 else math.inf
    return order, [e1, e2]


def asymptotics_report(res: EvolutionResult, min_windows: int = 4) -> DiagnosticReport:
    """Sup norms over dyadic windows and the Chemin–Lerner tail on the last window.

    Passes when the window sup norms decrease strictly from the second window on.

    Raises:
        ValueError: fewer than ``min_windows`` populated windows.
    """
    wins = [w for w in res.windows if w["samples"] >= 2]
    if len(wins) < min_windows:
        raise ValueError(f"horizon too short: {len(wins)} populated windows, need {min_windows}")
    sups = [w["sup"] for w in wins]
    trailing = sups[1:]
    monotone = all(b < a for a, b in zip(trailing, trailing[1:]))
    tail = wins[-1]
    return DiagnosticReport(
        name="trailing window decay",
        measured=sups,
        predicted=[tail["cl_inf"], tail["cl_theta"]],
        ratio=tail["sup"] / tail["cl_inf"] if tail["cl_inf"] > 0 else math.nan,
        passed=bool(monotone),
        tolerance=0.0,
        details={"windows": wins, "decay": res.decay},
    )


# -- regime classifier ---------------------------------------------------------------------

REGIMES = ("U1", "U2", "N1", "N2")


def _recip(x) -> Fraction:
    if isinstance(x, float) and math.isinf(x):
        return Fraction(0)
    x = Fraction(x)
    if x < 1:
        raise ValueError("exponents must lie in [1, ∞]")
    return 1 / x


def classify_regime(n: int, p, q) -> str:
    """Uniqueness (``U1``, ``U2``) or non-uniqueness (``N1``, ``N2``) region for ``B^{n/p-1}_{p,q}``.

    ``U1``: ``p < n``; ``U2``: ``p = n, q <= 2``; ``N1``: ``p = n, q > 2``; ``N2``: ``p > n``.
    """
    if n < 3:
        raise ValueError(f"the classification needs n >= 3, got {n}")
    ip, iq = _recip(p), _recip(q)
    inv_n = Fraction(1, n)
    if ip > inv_n:
        return "U1"
    if ip == inv_n:
        return "U2" if iq >= Fraction(1, 2) else "N1"
    return "N2"


def regime_lattice(n: int, resolution: int = 50) -> tuple[list[Fraction], list[Fraction]]:
    """Equispaced values of ``1/q`` and ``1/p`` in ``[0, 1]``; the ``1/p`` value nearest ``1/n`` is snapped to it."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    xs = [Fraction(i, resolution - 1) for i in range(resolution)]
    ys = list(xs)
    target = Fraction(1, n)
    i = min(range(resolution), key=lambda k: abs(ys[k] - target))
    ys[i] = target
    return xs, ys


def regime_map(n: int, resolution: int = 50) -> list[tuple[Fraction, Fraction, str]]:
    """``(1/q, 1/p, label)`` over :func:`regime_lattice` (``1/p = 0`` stands for ``p = ∞``)."""
    if n < 3:
        raise ValueError(f"the classification needs n >= 3, got {n}")
    xs, ys = regime_lattice(n, resolution)
    out = []
    for ip in ys:
        for iq in xs:
            p = math.inf if ip == 0 else 1 / ip
            q = math.inf if iq == 0 else 1 / iq
            out.append((iq, ip, classify_regime(n, p, q)))
    return out


def write_regime_csv(rows: Sequence[tuple[Fraction, Fraction, str]], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["inv_q", "inv_p", "regime"])
        for iq, ip, lab in rows:
            wr.writerow([repr(float(iq)), repr(float(ip)), lab])
    return path
