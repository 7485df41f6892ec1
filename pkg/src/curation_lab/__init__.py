"""Numerical laboratory for preference-curated self-consuming retraining loops.

Finite state spaces only: densities are vectors against positive base
weights, every population formula becomes a finite sum, and each convergence
or stability statement of the underlying theory can be checked directly.
"""

from .dynamics import (
    RegimeConfig,
    TrajectoryRecord,
    reweighted_density,
    reweighted_update,
    run_trajectory,
    update_once,
)
from .fixed_points import (
    FixedPointResult,
    contraction_rate,
    fixed_point_regime_iii,
    fixed_point_regime_iv,
    pure_limit,
    solve_c_star,
)
from .kernels import (
    KernelEstimate,
    ValueDistribution,
    curated_density,
    kernel_finite_exact,
    kernel_finite_mc,
    kernel_infinite,
    pl_select,
    utility_distribution,
)
from .measure import (
    Density,
    StateSpace,
    expectation,
    hilbert_metric,
    kl_divergence,
    make_density,
    set_mass,
    tv_distance,
)
from .perturbations import (
    InstabilityReport,
    KernelShiftReport,
    PerturbationSpec,
    PerturbedPairResult,
    adversarial_delta_r,
    check_assumption_A4,
    instability_experiment,
    kernel_perturbation_check,
    perturb_model,
    run_perturbed_pair,
    stability_bound_regime_iii,
)
from .preferences import (
    AssumptionReport,
    NoiseModel,
    PreferenceModel,
    build_preference,
    check_assumption_A1,
    check_assumption_A2,
    check_assumption_A3,
    exp_reward_stats,
)
from .sampling import (
    EmpiricalHistogram,
    FiniteSampleTrajectory,
    GofResult,
    curation_round,
    empirical_selection_mass,
    finite_sample_trajectory,
    gof_chi_square,
)

__version__ = "0.1.0"

__all__ = [
    "Density",
    "EmpiricalHistogram",
    "FiniteSampleTrajectory",
    "FixedPointResult",
    "GofResult",
    "InstabilityReport",
    "KernelEstimate",
    "KernelShiftReport",
    "NoiseModel",
    "PerturbationSpec",
    "PerturbedPairResult",
    "PreferenceModel",
    "AssumptionReport",
    "RegimeConfig",
    "StateSpace",
    "TrajectoryRecord",
    "ValueDistribution",
    "adversarial_delta_r",
    "build_preference",
    "check_assumption_A1",
    "check_assumption_A2",
    "check_assumption_A3",
    "check_assumption_A4",
    "contraction_rate",
    "curated_density",
    "curation_round",
    "empirical_selection_mass",
    "exp_reward_stats",
    "expectation",
    "finite_sample_trajectory",
    "fixed_point_regime_iii",
    "fixed_point_regime_iv",
    "gof_chi_square",
    "hilbert_metric",
    "instability_experiment",
    "kernel_finite_exact",
    "kernel_finite_mc",
    "kernel_infinite",
    "kernel_perturbation_check",
    "kl_divergence",
    "make_density",
    "perturb_model",
    "pl_select",
    "pure_limit",
    "reweighted_density",
    "reweighted_update",
    "run_perturbed_pair",
    "run_trajectory",
    "set_mass",
    "solve_c_star",
    "stability_bound_regime_iii",
    "tv_distance",
    "update_once",
    "utility_distribution",
]
