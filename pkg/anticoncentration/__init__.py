"""anticoncentration - small-ball probabilities of random sums under star-shaped bodies.

Exact and sampled small-ball probabilities of X = sum eta_j v_j, Esseen-type
bounds, hyperplane concentration and generalized arithmetic progression
structure, with an experiment harness on top.
"""

__version__ = "0.1.0"

from .config import ConstantsConfig
from .exceptions import (
    AntiConcentrationError,
    BudgetExceededError,
    ConfigurationError,
    DimensionMismatchError,
    InvalidBodyError,
    InvalidNoiseModelError,
    ValidationError,
)
from .models import (
    AtomDistribution,
    BodyConstants,
    Gap,
    GapPipelineReport,
    SmallBallResult,
    VectorSystem,
    VerificationRecord,
)
from .geometry import (
    BodyKind,
    StarBody,
    dist_to_set,
    estimate_constants,
    estimate_embedding_constants,
    euclidean_transfer_comparison,
    gaussian_measure,
    kappa_scaling_profile,
    lebesgue_measure,
    lp_embedding_constants,
    norm,
    quasi_triangle_check,
)
from .noise import (
    NoiseModel,
    anticoncentration_audit,
    char_abs,
    difference_char,
    eta_norm,
    growth_check,
    lower_expectation_check,
    t_norm,
)
from .smallball import atoms, binomial_sum_S, mass_in_translate, rho_exact, rho_mc, sharp_lo_report, small_ball
from .esseen import (
    char_system_abs,
    esseen_bound,
    esseen_eta_bound,
    esseen_euclidean_bound,
    esseen_integral,
    lemma_tv_check,
    lemma_tv_sweep,
    optimize_scaled_bound,
)
from .hyperplane import (
    best_hyperplane,
    contrapositive_check,
    corollary_k_bound,
    dist_to_hyperplane,
    extract_separated_basis,
    prop_hyper_rhs,
    thm_hyper_threshold,
    verify_prop_hyper,
    verify_thm_hyper,
)
from .gap import (
    bad_vector_split,
    choose_k,
    doubling_ratio,
    dual_volume_check,
    enumerate_gap,
    fit_gap,
    is_proper,
    kfold_sumset,
    level_set_search,
    round_to_lattice,
    thm_gap_pipeline,
    verify_thm_gap,
)
from .harness import ExperimentConfig, RunRecord, batch, load_config, run

__all__ = [
    # Configuration
    "ConstantsConfig",
    "ExperimentConfig",
    # Data models
    "AtomDistribution",
    "BodyConstants",
    "Gap",
    "GapPipelineReport",
    "SmallBallResult",
    "VectorSystem",
    "VerificationRecord",
    "RunRecord",
    # Geometry
    "BodyKind",
    "StarBody",
    "norm",
    "dist_to_set",
    "lp_embedding_constants",
    "gaussian_measure",
    "lebesgue_measure",
    "estimate_constants",
    "estimate_embedding_constants",
    "euclidean_transfer_comparison",
    "kappa_scaling_profile",
    "quasi_triangle_check",
    # Noise
    "NoiseModel",
    "t_norm",
    "char_abs",
    "difference_char",
    "eta_norm",
    "growth_check",
    "anticoncentration_audit",
    "lower_expectation_check",
    # Small-ball probabilities
    "atoms",
    "mass_in_translate",
    "rho_exact",
    "small_ball",
    "rho_mc",
    "binomial_sum_S",
    "sharp_lo_report",
    # Esseen bounds
    "char_system_abs",
    "esseen_integral",
    "esseen_bound",
    "esseen_eta_bound",
    "esseen_euclidean_bound",
    "lemma_tv_check",
    "lemma_tv_sweep",
    "optimize_scaled_bound",
    # Hyperplanes
    "dist_to_hyperplane",
    "extract_separated_basis",
    "best_hyperplane",
    "prop_hyper_rhs",
    "thm_hyper_threshold",
    "corollary_k_bound",
    "verify_prop_hyper",
    "contrapositive_check",
    "verify_thm_hyper",
    # GAP
    "enumerate_gap",
    "is_proper",
    "kfold_sumset",
    "doubling_ratio",
    "level_set_search",
    "bad_vector_split",
    "choose_k",
    "dual_volume_check",
    "round_to_lattice",
    "fit_gap",
    "verify_thm_gap",
    "thm_gap_pipeline",
    # Harness
    "load_config",
    "run",
    "batch",
    # Exceptions
    "AntiConcentrationError",
    "ValidationError",
    "DimensionMismatchError",
    "InvalidBodyError",
    "InvalidNoiseModelError",
    "ConfigurationError",
    "BudgetExceededError",
]
