"""Command-line interface: ``nsbesov {build,verify,solve,classify,regime-map,sweep}``.

Exit codes: 0 when every check passes, 1 when a numerical check fails, 2 for
configuration or precondition errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy
import scipy.fft as sfft

from .blocks import LadderError, iterate_blocks, residual_force
from .config import ConfigError, RunConfig, exponent
from .estimates import (
    PreconditionError,
    SuperpositionSpec,
    bilinear_bench,
    duhamel_bench,
    prop31_refinement,
    scaling_sweep,
    scan_freq_support,
    random_solenoidal,
    write_sweep,
)
from .identities import identity_checks
from .littlewood_paley import AngularLocalizers, BesovParams, besov_norm
from .nash import NashDomainError, build_nash_system
from .solvers import (
    ConvergenceError,
    InstabilityError,
    SmallnessError,
    asymptotics_report,
    classify_regime,
    regime_map,
    solve_evolution,
    solve_stationary,
    steady_residual,
    write_regime_csv,
)
from .spectral import Grid, divergence, load_field, save_field

log = logging.getLogger("nsbesov")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
SUITES = ("identities", "prop31", "freq-support", "benches", "scaling")


def _version() -> str:
    try:
        return metadata.version("nsbesov")
    except metadata.PackageNotFoundError:
        return "unknown"


def _manifest(cfg: RunConfig, command: str, extra: dict) -> dict:
    return {
        "command": command,
        "version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "seed": cfg.seed,
        "config": cfg.data,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S"),
        **extra,
    }


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=str))
    return path


def _summary(reports) -> dict:
    return {"passed": all(r.passed for r in reports), "reports": [r.to_dict() for r in reports]}


# -- build ---------------------------------------------------------------------------------


def build_profile(cfg: RunConfig):
    """Validate the config and assemble ``(grid, bundle, force)``."""
    grid = cfg.grid()
    ladder = cfg.ladder()
    try:
        ladder.require_representable()
    except LadderError as exc:
        raise ConfigError(str(exc)) from exc
    sys_ = build_nash_system(grid.n)
    bundle = iterate_blocks(ladder, sys_, grid)
    return grid, bundle, residual_force(bundle)


def cmd_build(cfg: RunConfig, out: Path) -> int:
    grid, bundle, force = build_profile(cfg)
    d = out / "build"
    d.mkdir(parents=True, exist_ok=True)
    fields = {"V": bundle.V, "Vp": bundle.Vp, "Vr": bundle.Vr, "F": force.F, "F1": force.F1, "F2": force.F2_total, "F3": force.F3, "F_top": force.F_top}
    for lv in bundle.levels:
        fields[f"V_{lv.j}"] = lv.V
    for name, f in fields.items():
        save_field(f, d / name)
    div = {f"V_{lv.j}": float(np.max(np.abs(divergence(lv.V).coeffs)) / max(lv.V.max_coeff(), 1e-300)) for lv in bundle.levels}
    norms = {}
    for spec in cfg["besov"]:
        p, q = exponent(spec["p"]), exponent(spec["q"])
        bp = BesovParams(p, q, (0 if math.isinf(p) else grid.n / p) - 1)
        norms[f"V B^(n/p-1)_({spec['p']},{spec['q']})"] = besov_norm(bundle.V, bp).value
    extra = {"ladder": bundle.ladder.to_dict(), "div_residuals": div, "norms": norms, "fields": sorted(fields)}
    _write_json(d / "manifest.json", _manifest(cfg, "build", extra))
    print(json.dumps({"div_residuals": div, "norms": norms}, indent=2))
    return EXIT_PASS if max(div.values()) <= 1e-11 else EXIT_FAIL


# -- verify -----------------------------------------------------------------------------------


def _prop31_reports(cfg: RunConfig):
    pc = cfg["prop31"]
    out = []
    for case in pc["cases"]:
        spec = SuperpositionSpec(int(case["n"]), int(case["lambda"]), case["directions"], case["coeffs"], case.get("amplitude", "gaussian"))
        bp = BesovParams(exponent(case["p"]), exponent(case["q"]), float(case["s"]))
        out.extend(prop31_refinement(spec, bp, band=float(pc["band"]), drift=float(pc["drift"])))
    return out


def _freq_reports(cfg: RunConfig):
    fc = cfg["freq_support"]
    loc = AngularLocalizers(build_nash_system(int(fc["n"])).a_dirs)
    return scan_freq_support(loc, int(fc["lambda"]), int(fc["ell"]), int(fc["span"]), fc.get("points"))


def _bench_reports(cfg: RunConfig):
    bc = cfg["benches"]
    grid = Grid(int(bc["n"]), int(bc["N"]))
    b, d = bc["bilinear"], bc["duhamel"]
    bl = bilinear_bench(int(bc["samples"]), exponent(b["p"]), exponent(b["q"]), exponent(b["r"]), grid, seed=cfg.seed, band=int(bc["band"]))
    du = duhamel_bench(
        int(bc["samples"]), exponent(d["p"]), exponent(d["q"]), exponent(d["theta"]), float(d["T"]), grid, steps=int(d["steps"]), seed=cfg.seed, band=int(bc["band"])
    )
    return [bl, du]


def _scaling_reports(cfg: RunConfig, lambdas=None):
    sc = cfg["scaling"]
    lambdas = lambdas or sc["lambdas"]
    if len(lambdas) < 3:
        raise ConfigError(f"scaling needs at least 3 values of λ, got {len(lambdas)}")
    n = int(sc["n"])
    out = []
    for p, q in sc["pairs"]:
        p, q = exponent(p), exponent(q)
        bp = BesovParams(p, q, (0 if math.isinf(p) else n / p) - 1)
        out.append(scaling_sweep(lambdas, bp, n=n, scale=float(sc["scale"]), tolerance=float(sc["tolerance"])))
    return out


def cmd_verify(cfg: RunConfig, suite: str, out: Path, lambdas=None) -> int:
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    if suite == "identities":
        _, bundle, force = build_profile(cfg)
        reports = identity_checks(bundle, force, seed=cfg.seed)
    elif suite == "prop31":
        reports = _prop31_reports(cfg)
    elif suite == "freq-support":
        reports = _freq_reports(cfg)
    elif suite == "benches":
        reports = _bench_reports(cfg)
    else:
        reports = _scaling_reports(cfg, lambdas)
    summary = _summary(reports)
    _write_json(out / f"verify_{suite}.json", {**summary, "manifest": _manifest(cfg, f"verify {suite}", {})})
    for r in reports:
        line = r.line() if hasattr(r, "line") else f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: drift={r.drift:.4g}"
        print(line)
    return EXIT_PASS if summary["passed"] else EXIT_FAIL


# -- solve ----------------------------------------------------------------------------------


def cmd_solve(cfg: RunConfig, which: str, out: Path) -> int:
    bdir = out / "build"
    if not (bdir / "manifest.json").exists():
        raise ConfigError(f"missing build artifacts in {bdir}; run `build` first")
    st_cfg = cfg.stationary() if which in ("stationary", "both") else None
    ev_cfg = cfg.evolution() if which in ("evolution", "both") else None
    V = load_field(bdir / "V")
    F = load_field(bdir / "F")
    n = V.grid.n
    sdir = out / "solve"
    result: dict = {}
    ok = True
    U = None
    if st_cfg is not None:
        res = solve_stationary(V, F, st_cfg)
        U = V + res.W
        save_field(res.W, sdir / "W")
        save_field(U, sdir / "U")
        resid = steady_residual(U, st_cfg.besov(n))
        result["stationary"] = {**res.to_dict(), "steady_residual": resid}
        ok &= res.converged and resid <= 10 * st_cfg.tol
    elif (sdir / "U.json").exists():
        U = load_field(sdir / "U")
    if ev_cfg is not None:
        ev = cfg["evolution"]
        rng = np.random.default_rng(cfg.seed)
        w0 = random_solenoidal(V.grid, rng, int(ev["w0_band"])) * float(ev["w0_amplitude"])
        er = solve_evolution(U, w0, ev_cfg, store=sdir / "trajectory")
        try:
            rep = asymptotics_report(er)
        except ValueError as exc:
            raise ConfigError(f"evolution: {exc}") from exc
        result["evolution"] = {**er.to_dict(), "asymptotics": rep.to_dict()}
        ok &= rep.passed
    _write_json(sdir / "report.json", {**result, "manifest": _manifest(cfg, f"solve {which}", {})})
    print(json.dumps(result, indent=2, default=str)[:4000])
    return EXIT_PASS if ok else EXIT_FAIL


# -- classification -------------------------------------------------------------------------


def cmd_classify(n: int, p, q) -> int:
    try:
        label = classify_regime(n, exponent(p), exponent(q))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(label)
    return EXIT_PASS


def cmd_regime_map(n: int, resolution: int, out: Path) -> int:
    try:
        rows = regime_map(n, resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    path = write_regime_csv(rows, out / f"regime_map_n{n}.csv")
    counts = {}
    for _, _, lab in rows:
        counts[lab] = counts.get(lab, 0) + 1
    print(json.dumps({"csv": str(path), "counts": counts}))
    return EXIT_PASS


def cmd_sweep(cfg: RunConfig, out: Path, lambdas=None) -> int:
    reports = _scaling_reports(cfg, lambdas)
    for r in reports:
        base = out / "sweep" / f"scaling_p{r.details['p']}_q{r.details['q']}"
        write_sweep(r, base)
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: drift={r.drift:.4g} slope={r.slope:.4g} predicted={r.predicted_slope:.4g}")
    return EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL


# -- entry point ------------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="FFT worker threads")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="nsbesov", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="build blocks and force, dump fields")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", required=True, help=" | ".join(SUITES))
    v.add_argument("--lambdas", type=int, nargs="+")
    s = sub.add_parser("solve", parents=[common], help="stationary and/or evolution solve")
    s.add_argument("which", nargs="?", default="both", choices=("stationary", "evolution", "both"))
    c = sub.add_parser("classify", parents=[common], help="uniqueness regime of (n, p, q)")
    c.add_argument("n", type=int)
    c.add_argument("p")
    c.add_argument("q")
    r = sub.add_parser("regime-map", parents=[common], help="CSV of regimes over a (1/q, 1/p) lattice")
    r.add_argument("--n", type=int, default=3)
    r.add_argument("--resolution", type=int, default=50)
    w = sub.add_parser("sweep", parents=[common], help="scaling sweep of the principal block")
    w.add_argument("--lambdas", type=int, nargs="+")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = str(args.out)
        cfg = RunConfig.load(args.config, overrides)
        out = Path(cfg["out"])
        with sfft.set_workers(max(1, args.jobs)):
            if args.command == "build":
                return cmd_build(cfg, out)
            if args.command == "verify":
                return cmd_verify(cfg, args.suite, out, args.lambdas)
            if args.command == "solve":
                return cmd_solve(cfg, args.which, out)
            if args.command == "classify":
                return cmd_classify(args.n, args.p, args.q)
            if args.command == "regime-map":
                return cmd_regime_map(args.n, args.resolution, out)
            if args.command == "sweep":
                return cmd_sweep(cfg, out, args.lambdas)
    except (ConfigError, PreconditionError, LadderError, SmallnessError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NashDomainError, ConvergenceError, InstabilityError) as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
