"""Localized states in a quadratic-cubic pattern-forming PDE with
symmetry-breaking gradient terms.

The package covers the full workflow: spectral discretization (grid),
the model right-hand side with its energy and spatial invariant (model),
amplitude-equation criticality coefficients (normal_form), stiff time
stepping (evolve), Newton solvers for steady and drifting profiles
(steady), arclength continuation with event detection (continuation),
temporal spectra (stability), branch measurements (diagnostics), text
serialization (io) and a command-line front end (cli).
"""

from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("esh")
except PackageNotFoundError:
    __version__ = "0.0.0"

from .errors import (
    BlowUp,
    DomainError,
    EshError,
    GridMismatch,
    InsufficientData,
    InvalidSeed,
    NoConvergence,
    NonFiniteInput,
    NoRoot,
    NotVariational,
    SingularJacobian,
    StallError,
    TrackingLost,
    UnsupportedParameters,
    WrongEventType,
)
from .grid import Field, Grid, Parity, dealiased_product, derivative, parity_project
from .model import (
    LinearizedOperator,
    ModelParams,
    SpatialEigenvalues,
    SpatialRegime,
    free_energy,
    linearized_apply,
    rhs,
    spatial_eigenvalues,
    spatial_hamiltonian,
)
from .normal_form import (
    CCoefficients,
    NormalFormRegime,
    NormalFormReport,
    alpha_criticality_roots,
    c_coefficients,
    classify_regime,
    normal_form_report,
    q2_of,
    q2_quadratic_form,
    quintic_coefficients,
)
from .evolve import EvolveConfig, Scheme, Trajectory, run, step
from .steady import SteadyState, newton_stationary, newton_travelling
from .continuation import (
    Branch,
    BranchPoint,
    ContinuationOptions,
    EventType,
    PatternPoint,
    SnakingRegion,
    branch_switch,
    continue_branch,
    continue_rung,
    detect_bifurcations,
    localized_seed,
    pattern_branch,
    snaking_region,
)
from .stability import (
    ModeTrack,
    Spectrum,
    compute_spectrum,
    count_unstable,
    goldstone_eigenvalue,
    track_mode,
)
from .diagnostics import (
    LoopReport,
    MaxwellPoint,
    interior_wavenumber,
    l2_norm,
    maxwell_point,
    maxwell_study,
    oscillation_frequency,
    wavenumber_loop,
)

__all__ = [
    "__version__",
    # errors
    "BlowUp", "DomainError", "EshError", "GridMismatch", "InsufficientData",
    "InvalidSeed", "NoConvergence", "NonFiniteInput", "NoRoot",
    "NotVariational", "SingularJacobian", "StallError", "TrackingLost",
    "UnsupportedParameters", "WrongEventType",
    # grid
    "Field", "Grid", "Parity", "dealiased_product", "derivative",
    "parity_project",
    # model
    "LinearizedOperator", "ModelParams", "SpatialEigenvalues",
    "SpatialRegime", "free_energy", "linearized_apply", "rhs",
    "spatial_eigenvalues", "spatial_hamiltonian",
    # normal form
    "CCoefficients", "NormalFormRegime", "NormalFormReport",
    "alpha_criticality_roots", "c_coefficients", "classify_regime",
    "normal_form_report", "q2_of", "q2_quadratic_form",
    "quintic_coefficients",
    # evolve
    "EvolveConfig", "Scheme", "Trajectory", "run", "step",
    # steady
    "SteadyState", "newton_stationary", "newton_travelling",
    # continuation
    "Branch", "BranchPoint", "ContinuationOptions", "EventType",
    "PatternPoint", "SnakingRegion", "branch_switch", "continue_branch",
    "continue_rung", "detect_bifurcations", "localized_seed",
    "pattern_branch", "snaking_region",
    # stability
    "ModeTrack", "Spectrum", "compute_spectrum", "count_unstable",
    "goldstone_eigenvalue", "track_mode",
    # diagnostics
    "LoopReport", "MaxwellPoint", "interior_wavenumber", "l2_norm",
    "maxwell_point", "maxwell_study", "oscillation_frequency",
    "wavenumber_loop",
]
