"""Acceptance criteria at desk scale, one verdict line per criterion.

Every check is run at its pinned tolerance.  A failing criterion fails its test
and prints the measured numbers; none of the thresholds below is tuned to the
implementation.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from nsbesov.cli import build_profile
from nsbesov.config import DEFAULTS, RunConfig, exponent
from nsbesov.estimates import (
    SuperpositionSpec,
    alpha,
    beta,
    prop31_refinement,
    random_solenoidal,
    scaling_sweep,
    scan_freq_support,
)
from nsbesov.identities import identity_checks
from nsbesov.littlewood_paley import AngularLocalizers, BesovParams, besov_norm
from nsbesov.nash import build_nash_system
from nsbesov.solvers import (
    asymptotics_report,
    classify_regime,
    regime_map,
    solve_evolution,
    solve_stationary,
    steady_residual,
    step_halving_order,
)

pytestmark = pytest.mark.slow

IDENTITY_TOL = 1e-10
IDENTITY_SECONDS = 120.0
PROP31_BAND = 3.0
PROP31_DRIFT = 0.2
PROP31_SECONDS = 300.0
SUPPORT_THRESHOLD = 1e-8
SUPPORT_SPAN = 6
SCALING_FACTOR = 2.0
PICARD_ITERS = 30
PICARD_CONTRACTION = 0.55
RESIDUAL_FACTOR = 10.0
DECAY_AT_T10 = 1e-3
MIN_ORDER = 1.0


def _besov_critical(n, p, q):
    return BesovParams(p, q, (0.0 if math.isinf(p) else n / p) - 1.0)


@pytest.fixture(scope="module")
def default_build():
    cfg = RunConfig.load()
    grid, bundle, force = build_profile(cfg)
    return cfg, grid, bundle, force


def test_c1_exact_identities(verdict):
    cfg = RunConfig.load(
        overrides={
            "grid": {"n": 3, "N": 128},
            "ladder": {"lambda": 2, "J": 2, "Lambda": [[1, 2], [3, 4]], "scales": [0.01, 50.0]},
        }
    )
    start = time.perf_counter()
    _, bundle, force = build_profile(cfg)
    reports = identity_checks(bundle, force, seed=cfg.seed, tol=IDENTITY_TOL, nash_samples=1000)
    elapsed = time.perf_counter() - start
    worst = max(reports, key=lambda r: r.ratio)
    ok = all(r.passed for r in reports) and elapsed <= IDENTITY_SECONDS
    detail = f"{len(reports)} identities at N=128 J=2, worst {worst.name} = {worst.ratio:.2e} (tol {IDENTITY_TOL:g}), {elapsed:.0f}s (limit {IDENTITY_SECONDS:.0f}s)"
    assert verdict("C1 exact identities", ok, detail), [r.line() for r in reports if not r.passed]


def test_c2_oscillation_bounds(verdict):
    start = time.perf_counter()
    rows = []
    for case in DEFAULTS["prop31"]["cases"]:
        spec = SuperpositionSpec(int(case["n"]), int(case["lambda"]), case["directions"], case["coeffs"])
        bp = BesovParams(exponent(case["p"]), exponent(case["q"]), float(case["s"]))
        assert spec.K <= 3 and spec.L <= 3 and spec.lam in (8, 16) and bp.s in (-1, 0, 1)
        coarse, fine, refined = prop31_refinement(spec, bp, band=PROP31_BAND, drift=PROP31_DRIFT)
        rows.append((refined.passed, coarse.ratio, fine.ratio, refined.ratio, refined.name))
    elapsed = time.perf_counter() - start
    ratios = [r for row in rows for r in row[1:3]]
    ok = all(row[0] for row in rows) and elapsed <= PROP31_SECONDS
    detail = (
        f"{len(rows)} superpositions, ratios in [{min(ratios):.3f}, {max(ratios):.3f}] (band [1/{PROP31_BAND:g}, {PROP31_BAND:g}]), "
        f"max drift {max(row[3] for row in rows):.2e} (limit {PROP31_DRIFT:g}), {elapsed:.0f}s"
    )
    assert verdict("C2 oscillation bounds", ok, detail), [row[4] for row in rows if not row[0]]


def test_c3_frequency_support(verdict):
    fc = DEFAULTS["freq_support"]
    n = int(fc["n"])
    loc = AngularLocalizers(build_nash_system(n).a_dirs)
    reports = scan_freq_support(loc, int(fc["lambda"]), int(fc["ell"]), SUPPORT_SPAN, fc.get("points"), SUPPORT_THRESHOLD)
    c_floor = min(0.25, math.sin(loc.theta_star / 6) / 2)
    worst = max(r.measured[1] for r in reports)
    ok = all(r.passed for r in reports)
    detail = f"{len(reports)} admissible (m, j, k), worst inner mass {worst:.1e} at c = {c_floor:.4f} (threshold {SUPPORT_THRESHOLD:g})"
    assert verdict("C3 frequency support", ok, detail), [r.name for r in reports if not r.passed]


def test_c4_structural_scaling(verdict):
    sc = DEFAULTS["scaling"]
    n = int(sc["n"])
    lambdas = [8, 16, 32]
    literal, torus = [], []
    for p, q in [(2, 2), (math.inf, 1), (n, math.inf)]:
        bp = _besov_critical(n, float(p), float(q))
        literal.append(scaling_sweep(lambdas, bp, n=n, cutoff="literal", tolerance=SCALING_FACTOR))
        torus.append(scaling_sweep(lambdas, bp, n=n, cutoff="torus", tolerance=SCALING_FACTOR))
    ok = all(r.passed for r in literal)
    parts = ", ".join(
        f"({r.details['p']},{r.details['q']}) drift {r.drift:.3g} [torus cutoff {t.drift:.3g}]" for r, t in zip(literal, torus)
    )
    detail = f"λ in {lambdas}, factor {SCALING_FACTOR:g}: {parts}"
    assert verdict("C4 structural scaling", ok, detail)


def test_c5_fixed_points(verdict, default_build):
    cfg, grid, bundle, force = default_build
    st_cfg = cfg.stationary()
    res = solve_stationary(bundle.V, force.F, st_cfg)
    U = bundle.V + res.W
    resid = steady_residual(U, st_cfg.besov(grid.n))

    ev = cfg["evolution"]
    rng = np.random.default_rng(cfg.seed)
    w0 = random_solenoidal(grid, rng, int(ev["w0_band"])) * float(ev["w0_amplitude"])
    ev_cfg = cfg.evolution()
    assert ev_cfg.T == 10.0
    er = solve_evolution(U, w0, ev_cfg)
    asym = asymptotics_report(er)
    order, _ = step_halving_order(bundle.V, w0, 0.02, 0.4)

    checks = {
        "converged": res.converged and len(res.log) <= PICARD_ITERS,
        "contraction": res.max_factor <= PICARD_CONTRACTION,
        "residual": resid <= RESIDUAL_FACTOR * st_cfg.tol,
        "decay": er.decay <= DECAY_AT_T10,
        "windows": asym.passed,
        "order": order >= MIN_ORDER,
    }
    ok = all(checks.values())
    detail = (
        f"{len(res.log)} Picard iterations, contraction {res.max_factor:.3g}, residual {resid:.1e} "
        f"(limit {RESIDUAL_FACTOR * st_cfg.tol:.0e}), decay {er.decay:.1e} at T=10, "
        f"trailing windows {'monotone' if asym.passed else 'not monotone'}, step-halving order {order:.3f}"
    )
    assert verdict("C5 fixed points", ok, detail), {k: v for k, v in checks.items() if not v}


def _partition_oracle(n, ip, iq):
    inv_n = Fraction(1, n)
    if ip > inv_n:
        return "U1"
    if ip < inv_n:
        return "N2"
    return "U2" if iq >= Fraction(1, 2) else "N1"


def test_c6_regime_classifier(verdict):
    n = 3
    rows = regime_map(n, 50)
    mismatches = [(iq, ip, lab) for iq, ip, lab in rows if lab != _partition_oracle(n, ip, iq)]
    boundary = classify_regime(n, n, 2) == "U2" and all(classify_regime(n, n, q) == "N1" for q in (2.5, 3, 10, math.inf))
    arithmetic = all(alpha(math.inf, m) == 12 * m + 11 < beta(m) == 12 * m + 12 for m in (3, 4, 5))
    ok = len(rows) == 2500 and not mismatches and boundary and arithmetic
    detail = (
        f"{len(rows)} lattice points, {len(mismatches)} mismatches, boundary (n,2)->U2 and (n,q>2)->N1 "
        f"{'hold' if boundary else 'fail'}, α(∞) = 12n+11 < β for n = 3, 4, 5 {'holds' if arithmetic else 'fails'}"
    )
    assert verdict("C6 regime classifier", ok, detail), mismatches[:5]


def test_c7_norm_hierarchy(verdict, default_build):
    cfg, grid, bundle, force = default_build
    n = grid.n
    r = exponent(cfg["stationary"]["r"])
    spec = cfg["besov"][0]
    p, q = exponent(spec["p"]), exponent(spec["q"])
    f_norm = besov_norm(force.F, BesovParams(r, 1, n / r - 3)).value
    v_norm = besov_norm(bundle.V, _besov_critical(n, p, q)).value
    top = besov_norm(force.F_top, BesovParams(r, 1, n / r - 3)).value
    ok = f_norm < v_norm
    detail = (
        f"‖F‖ in B^{{{n / r - 3:g}}}_{{{r:g},1}} = {f_norm:.4g} vs ‖V‖ in B^{{{n / p - 1:g}}}_{{{p:g},{q:g}}} = {v_norm:.4g} "
        f"(top-level linear term alone {top:.4g})"
    )
    assert verdict("C7 norm hierarchy", ok, detail)
