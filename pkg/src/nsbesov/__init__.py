"""Spectral toolkit for critical Besov norms, oscillatory building blocks and perturbation solvers on the torus."""

from .blocks import (
    BlockBundle,
    ForceBundle,
    LadderError,
    LadderParams,
    block_operator,
    build_ladder,
    build_level,
    iterate_blocks,
    residual_force,
)
from .estimates import (
    PreconditionError,
    SuperpositionSpec,
    alpha,
    beta,
    bilinear_bench,
    duhamel_bench,
    scaling_sweep,
    sigma,
    verify_freq_support,
    verify_prop31,
)
from .littlewood_paley import (
    AngularLocalizers,
    BesovParams,
    DyadicPartition,
    NormReport,
    angular_project,
    besov_norm,
    chemin_lerner_norm,
    lp_block,
)
from .nash import NashDomainError, NashSystem, build_nash_system, gamma_field, nash_reconstruct
from .reports import DiagnosticReport, SweepResult
from .solvers import (
    EvolutionConfig,
    StationarySolveConfig,
    asymptotics_report,
    classify_regime,
    regime_map,
    solve_evolution,
    solve_stationary,
    steady_residual,
)
from .spectral import (
    Grid,
    SpectralField,
    dealiased_outer,
    dealiased_product,
    deformation,
    divergence,
    gradient,
    heat_semigroup,
    helmholtz_project,
    inverse_laplacian,
    laplacian,
    load_field,
    lp_norm,
    save_field,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
