"""Upper-tail large deviations of the KPZ equation: rate function, limit
shapes, moment Lyapunov exponents and a desk-scale SHE simulator."""

__version__ = "0.1.0"

from .errors import (
    AmbiguityError,
    ConfigError,
    DomainError,
    KPZError,
    MalformedEnsembleError,
    NumericalError,
)
from .legendre import (
    DualPair,
    SymmetryScan,
    TreeCheck,
    dual_height,
    lyapunov_from,
    lyapunov_from_duality,
    symmetry_breaking_scan,
    tree_decomposition_check,
)
from .profile import (
    MembershipClass,
    ProbeConfig,
    TerminalProfile,
    build_profile,
    classify,
    parabola_eval,
    profile_eval,
    reduce_indices,
)
from .rate import RateResult, extended_gradient, one_point_rate, rate, rate_gradient, rate_value
from .shape import (
    CorridorEnsemble,
    LimitShape,
    ShockTree,
    build_limit_shape,
    build_shock_tree,
    characteristic_through,
    ensemble_from_tree,
    entropy_checks,
    evaluate_M,
    shape_eval,
    shape_eval_oracle,
)
from .she import FieldSample, SimConfig, heat_kernel, hydrodynamic_check, scaled_height, simulate_she

__all__ = [
    "__version__",
    "AmbiguityError",
    "ConfigError",
    "DomainError",
    "KPZError",
    "MalformedEnsembleError",
    "NumericalError",
    "DualPair",
    "SymmetryScan",
    "TreeCheck",
    "dual_height",
    "lyapunov_from",
    "lyapunov_from_duality",
    "symmetry_breaking_scan",
    "tree_decomposition_check",
    "MembershipClass",
    "ProbeConfig",
    "TerminalProfile",
    "build_profile",
    "classify",
    "parabola_eval",
    "profile_eval",
    "reduce_indices",
    "RateResult",
    "extended_gradient",
    "one_point_rate",
    "rate",
    "rate_gradient",
    "rate_value",
    "CorridorEnsemble",
    "LimitShape",
    "ShockTree",
    "build_limit_shape",
    "build_shock_tree",
    "characteristic_through",
    "ensemble_from_tree",
    "entropy_checks",
    "evaluate_M",
    "shape_eval",
    "shape_eval_oracle",
    "FieldSample",
    "SimConfig",
    "heat_kernel",
    "hydrodynamic_check",
    "scaled_height",
    "simulate_she",
]
