"""Ferromagnetic two-spin systems at desk scale.

Exact Gibbs tables and transition matrices, Glauber / scan / censored /
field dynamics with a monotone grand coupling, self-avoiding-walk tree
marginals with the potential-function decay apparatus, good-neighbourhood
region construction, and a verification harness tying each stochastic
component back to a brute-force oracle.
"""

from .errors import (
    CapacityError,
    CouplingInvariantError,
    FerrospinError,
    InputError,
    NonconvergenceError,
    NumericError,
)
from .exact import (
    DistributionTable,
    SpectralReport,
    TransitionMatrix,
    all_to_one_influence,
    alternating_scan_matrix,
    block_heatbath_matrix,
    conditional_marginal,
    detailed_balance_residual,
    exact_mixing_time,
    gibbs_distribution,
    glauber_matrix,
    heatbath_matrix,
    influence_pair,
    multiplicative_reversiblization,
    pinned_glauber_matrix,
    scan_matrix,
    spectral_report,
    stationarity_residual,
    tv_distance,
    tv_from_start,
)
from .harness import (
    DecayProbeResult,
    ExperimentConfig,
    MixingReport,
    ReportRow,
    SUITE_NAMES,
    censored_glauber_matrix,
    class_instance,
    coupling_dominance_row,
    coupling_mixing_estimate,
    decay_probe,
    emit_report,
    equality_row,
    field_boost_check,
    gamma_min_pinned,
    inequality_row,
    influence_regime_sweep,
    instance_family,
    max_all_to_one_influence,
    random_connected_graph,
    random_ferro_instance,
    random_tree_instance,
    report_csv_text,
    report_json_text,
    run_suite,
    value_row,
    verify_gap_mixing_relations,
    verify_relaxation_inequality,
    verify_scan_mixing_bound,
    wilson_upper,
)
from .model import (
    ParamClass,
    Pinning,
    RbmParams,
    TwoSpinSystem,
    apply_pinning,
    classify,
    energy,
    instance_dict,
    instance_hash,
    lambda0,
    lambda_c,
    load_instance,
    load_rbm,
    rbm_to_two_spin,
    tilt,
    weight,
)
from .regions import (
    GoodBoundarySpec,
    Region,
    RegionParams,
    RegionVerification,
    assm_sum,
    boundary_pinning,
    check_one_step_relation,
    construct_region,
    good_boundary_configs,
    influence_a_u,
    is_good_boundary,
    is_good_tree_boundary,
    monotone_potential_slack,
    ratio_dominance_slack,
    region_json,
    universal_pinning,
    verify_monotone_potential,
    verify_region,
)
from .samplers import (
    ChainState,
    CoupledPair,
    RandomSource,
    SCHEDULE_KINDS,
    UpdateSchedule,
    coupling_time,
    dominates,
    field_dynamics_step,
    field_kernel_matrix,
    monotone_coupled_step,
    run_chain,
    schedule_step,
    site_conditional,
    trajectory_csv,
    warm_start_check,
)
from .sawtree import (
    Phi,
    PotentialParams,
    SawTree,
    build_saw_tree,
    decay_factor,
    derive_potential,
    evaluate_ratios,
    g_value,
    phi,
    pin_saw_tree,
    prune_pinned_leaves,
    ratio_to_marginal,
    root_ratio,
    saw_marginal,
    tree_recursion_step,
    trivial_term_bound,
    verify_tree_invariants,
)

__all__ = [
    "CapacityError",
    "ChainState",
    "CoupledPair",
    "CouplingInvariantError",
    "DecayProbeResult",
    "DistributionTable",
    "ExperimentConfig",
    "FerrospinError",
    "GoodBoundarySpec",
    "InputError",
    "MixingReport",
    "NonconvergenceError",
    "NumericError",
    "ParamClass",
    "Phi",
    "Pinning",
    "PotentialParams",
    "RandomSource",
    "RbmParams",
    "Region",
    "RegionParams",
    "RegionVerification",
    "ReportRow",
    "SCHEDULE_KINDS",
    "SUITE_NAMES",
    "SawTree",
    "SpectralReport",
    "TransitionMatrix",
    "TwoSpinSystem",
    "UpdateSchedule",
    "all_to_one_influence",
    "alternating_scan_matrix",
    "apply_pinning",
    "assm_sum",
    "block_heatbath_matrix",
    "boundary_pinning",
    "build_saw_tree",
    "censored_glauber_matrix",
    "check_one_step_relation",
    "class_instance",
    "classify",
    "conditional_marginal",
    "construct_region",
    "coupling_dominance_row",
    "coupling_mixing_estimate",
    "coupling_time",
    "decay_factor",
    "decay_probe",
    "derive_potential",
    "detailed_balance_residual",
    "dominates",
    "emit_report",
    "energy",
    "equality_row",
    "evaluate_ratios",
    "exact_mixing_time",
    "field_boost_check",
    "field_dynamics_step",
    "field_kernel_matrix",
    "g_value",
    "gamma_min_pinned",
    "gibbs_distribution",
    "glauber_matrix",
    "good_boundary_configs",
    "heatbath_matrix",
    "inequality_row",
    "influence_a_u",
    "influence_pair",
    "influence_regime_sweep",
    "instance_dict",
    "instance_family",
    "instance_hash",
    "is_good_boundary",
    "is_good_tree_boundary",
    "lambda0",
    "lambda_c",
    "load_instance",
    "load_rbm",
    "max_all_to_one_influence",
    "monotone_coupled_step",
    "monotone_potential_slack",
    "multiplicative_reversiblization",
    "phi",
    "pin_saw_tree",
    "pinned_glauber_matrix",
    "prune_pinned_leaves",
    "random_connected_graph",
    "random_ferro_instance",
    "random_tree_instance",
    "ratio_dominance_slack",
    "ratio_to_marginal",
    "rbm_to_two_spin",
    "region_json",
    "report_csv_text",
    "report_json_text",
    "root_ratio",
    "run_chain",
    "run_suite",
    "saw_marginal",
    "scan_matrix",
    "schedule_step",
    "site_conditional",
    "spectral_report",
    "stationarity_residual",
    "tilt",
    "trajectory_csv",
    "tree_recursion_step",
    "trivial_term_bound",
    "tv_distance",
    "tv_from_start",
    "universal_pinning",
    "value_row",
    "verify_gap_mixing_relations",
    "verify_monotone_potential",
    "verify_region",
    "verify_relaxation_inequality",
    "verify_scan_mixing_bound",
    "verify_tree_invariants",
    "warm_start_check",
    "weight",
    "wilson_upper",
]

__version__ = "0.1.0"
