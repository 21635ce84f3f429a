"""Pseudo-spectral simulation and estimate certification for
thermo-diffusive reaction-diffusion systems with classical and
fractional diffusion on the torus."""

from .errors import AssumptionViolation, BlowUpError, ConfigError, InstabilityError
from .grids import (
    Field,
    Grid,
    SpaceTimeField,
    apply_semigroup,
    fractional_laplacian,
    make_grid,
)
from .kernels import (
    BoundCheckReport,
    K_gradient_magnitude,
    K_time_derivative,
    check_A_bounds,
    check_K_bounds,
    check_P_bound,
    check_P_time_derivative,
    fractional_kernel_P,
    fractional_kernel_P_dt,
    heat_kernel,
    kernel_A,
    kernel_A_dt,
    kernel_A_gradient_magnitude,
    singular_kernel_K,
    tail_slope,
)
from .operators import (
    OperatorResult,
    apply_T,
    apply_T_direct,
    apply_T_via_J,
    check_L2_bound,
    hoelder_time_modulus,
    solve_forced,
)
from .systems import (
    NonlinearitySpec,
    SystemSpec,
    builtin_model,
    compile_rate_expression,
    validate_assumptions,
)
from .solver import (
    AuxiliarySet,
    GoodBadSplit,
    Trajectory,
    alpha_constant,
    beta_constant,
    decomposition_defect,
    decomposition_residual,
    duhamel_split,
    export_frames_csv,
    good_bad_split,
    load_spacetime_field,
    production_domination,
    reconstruction_residuals,
    save_spacetime_field,
    simulate,
)
from .analysis import (
    CylinderScan,
    JNTailResult,
    MomentReport,
    ParabolicCylinder,
    cylinder_average,
    cylinder_scan,
    exp_moment,
    jn_tail,
    moment_report,
    pack_cylinders,
    pbmo_seminorm,
    standard_family,
    subexp_moment,
    sup_timeline,
    unit_cylinders,
)
from .synth import (
    ForcingSynth,
    constant_field,
    cosine_bump,
    random_forcing,
    random_smooth_field,
)
from .config import RunConfig, load_config, parse_config
from .reports import CheckResult, ReportBundle
from .acceptance import ALL_CRITERIA, CriterionResult, run_all

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "BlowUpError",
    "ConfigError",
    "InstabilityError",
    "Field",
    "Grid",
    "SpaceTimeField",
    "apply_semigroup",
    "fractional_laplacian",
    "make_grid",
    "BoundCheckReport",
    "K_gradient_magnitude",
    "K_time_derivative",
    "check_A_bounds",
    "check_K_bounds",
    "check_P_bound",
    "check_P_time_derivative",
    "fractional_kernel_P",
    "fractional_kernel_P_dt",
    "heat_kernel",
    "kernel_A",
    "kernel_A_dt",
    "kernel_A_gradient_magnitude",
    "singular_kernel_K",
    "tail_slope",
    "OperatorResult",
    "apply_T",
    "apply_T_direct",
    "apply_T_via_J",
    "check_L2_bound",
    "hoelder_time_modulus",
    "solve_forced",
    "NonlinearitySpec",
    "SystemSpec",
    "builtin_model",
    "compile_rate_expression",
    "validate_assumptions",
    "AuxiliarySet",
    "GoodBadSplit",
    "Trajectory",
    "alpha_constant",
    "beta_constant",
    "decomposition_defect",
    "decomposition_residual",
    "duhamel_split",
    "export_frames_csv",
    "good_bad_split",
    "load_spacetime_field",
    "production_domination",
    "reconstruction_residuals",
    "save_spacetime_field",
    "simulate",
    "CylinderScan",
    "JNTailResult",
    "MomentReport",
    "ParabolicCylinder",
    "cylinder_average",
    "cylinder_scan",
    "exp_moment",
    "jn_tail",
    "moment_report",
    "pack_cylinders",
    "pbmo_seminorm",
    "standard_family",
    "subexp_moment",
    "sup_timeline",
    "unit_cylinders",
    "ForcingSynth",
    "constant_field",
    "cosine_bump",
    "random_forcing",
    "random_smooth_field",
    "RunConfig",
    "load_config",
    "parse_config",
    "CheckResult",
    "ReportBundle",
    "ALL_CRITERIA",
    "CriterionResult",
    "run_all",
]
