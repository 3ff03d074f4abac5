"""Exact algebraic identities of the construction, evaluated on a built profile."""

from __future__ import annotations

import numpy as np

from .blocks import BlockBundle, ForceBundle, nodal_relative_error, pdiv, relative_error
from .nash import NashSystem, nash_reconstruct
from .reports import DiagnosticReport
from .spectral import (
    Grid,
    SpectralField,
    deformation,
    divergence,
    drop_nyquist,
    helmholtz_project,
    laplacian,
)


def _report(name: str, err: float, tol: float) -> DiagnosticReport:
    return DiagnosticReport(name, [err], [0.0], err, bool(err <= tol), tol)


def random_field(grid: Grid, rng: np.random.Generator, rank: str = "vector") -> SpectralField:
    """Mean-zero white noise on the nodes with the Nyquist plane removed."""
    comp = {"scalar": (), "vector": (grid.n,), "matrix": (grid.n, grid.n)}[rank]
    f = SpectralField.from_physical(grid, rng.standard_normal(comp + grid.shape), rank=rank)
    f.coeffs[(Ellipsis,) + (0,) * grid.n] = 0
    return drop_nyquist(f)


def nash_sample_error(sys: NashSystem, rng: np.random.Generator, samples: int = 1000) -> float:
    """Largest relative reconstruction error over random symmetric matrices in the domain."""
    n = sys.n
    A = rng.uniform(-sys.r0, sys.r0, size=(samples, n, n))
    M = np.eye(n) + np.triu(A) + np.swapaxes(np.triu(A, 1), -1, -2)
    err = np.max(np.abs(nash_reconstruct(M, sys) - M), axis=(-2, -1))
    return float(np.max(err / np.max(np.abs(M), axis=(-2, -1))))


def _scaled_identity(grid: Grid, s: float) -> SpectralField:
    out = SpectralField.zeros(grid, "matrix")
    for i in range(grid.n):
        out.coeffs[(i, i) + (0,) * grid.n] = s
    return out


def identity_checks(
    bundle: BlockBundle, force: ForceBundle, seed: int = 0, tol: float = 1e-10, nash_samples: int = 1000
) -> list[DiagnosticReport]:
    """Every exact identity of the construction, each as a relative error against ``tol``."""
    grid = bundle.grid
    rng = np.random.default_rng(seed)
    out = []
    for lv in bundle.levels:
        scale = max(lv.V.max_coeff(), 1e-300)
        out.append(_report(f"div V_{lv.j} = 0", float(np.max(np.abs(divergence(lv.V).coeffs))) / scale, tol))
        out.append(_report(f"V_{lv.j} = principal + remainders", relative_error(lv.V, lv.Vp + lv.Vr1 + lv.Vr2 + lv.Vr3), tol))

    v = random_field(grid, rng)
    out.append(_report("div Dv = -Δℙv", relative_error(divergence(deformation(v)), laplacian(helmholtz_project(v)) * -1.0), tol))
    Pv = helmholtz_project(v)
    out.append(_report("ℙ idempotent", relative_error(helmholtz_project(Pv), Pv), tol))
    out.append(_report(f"Nash reconstruction ({nash_samples} samples)", nash_sample_error(bundle.sys, rng, nash_samples), tol))

    for lv, pp, f11, f12 in zip(bundle.levels, force.VpVp, force.F11, force.F12):
        DV = deformation(lv.previous) if lv.previous is not None else SpectralField.zeros(grid, "matrix")
        sI = _scaled_identity(grid, lv.scale)
        out.append(_report(f"resonance identity level {lv.j}", nodal_relative_error(pp, sI - DV + f11 + f12), tol))
        lin = laplacian(lv.previous) * -1.0 if lv.previous is not None else SpectralField.zeros(grid, "vector")
        flux = pdiv(sI - DV)
        ref = max(lin.max_coeff(), flux.max_coeff())
        err = (lin + flux).max_coeff() / ref if ref > 0 else (lin + flux).max_coeff()
        out.append(_report(f"cancellation level {lv.j}", float(err), tol))
    out.append(_report("F = F1 + F2 + F3 + F_top", relative_error(force.F, force.split_sum), tol))
    return out
