"""Toolkit for two-terminal distributed sensing of jointly sparse sources.

The package predicts the asymptotic mean-square error of regularized
joint recovery through a scalar-channel fixed point (``replica``),
implements the coupled two-dimensional soft-thresholding estimator and
its numeric oracle (``scalar_map``), solves the finite-size convex
recovery programs (``recovery``), and validates the prediction with
Monte Carlo trials (``sim_harness``).
"""

from dsn.spectra import (
    EnsembleSpec,
    RTransformDomainError,
    NoiseVarianceError,
    r_transform,
    effective_tuning,
    effective_noise_variance,
)
from dsn.priors import (
    PriorParams,
    MixtureComponent,
    sample_sources,
    mixture_components,
    marginal_nonzero_rate,
)
from dsn.scalar_map import (
    ThresholdGeometry,
    RegionLabel,
    OracleConvergenceError,
    label_regions,
    two_dim_soft_threshold,
    block_soft_threshold,
    weighted_block_soft_threshold,
    scalar_prox_oracle,
    coupled_l1_utility,
    euclidean_norm_utility,
    oracle_equivalence_suite,
)
from dsn.replica import (
    NetworkConfig,
    make_state,
    ReplicaState,
    FixedPointError,
    channel_expectations,
    quadrature_expectations,
    solve_fixed_point,
    asymptotic_distortion,
)
from dsn.recovery import (
    RecoveryProblem,
    Tuning,
    SolverReport,
    objective,
    operator_norm_squared,
    solve_joint_map,
    solve_l21_rls,
)
from dsn.sim_harness import (
    ExperimentConfig,
    TrialResult,
    SimulationReport,
    run_trial,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "EnsembleSpec",
    "RTransformDomainError",
    "NoiseVarianceError",
    "r_transform",
    "effective_tuning",
    "effective_noise_variance",
    "PriorParams",
    "MixtureComponent",
    "sample_sources",
    "mixture_components",
    "marginal_nonzero_rate",
    "ThresholdGeometry",
    "RegionLabel",
    "OracleConvergenceError",
    "label_regions",
    "two_dim_soft_threshold",
    "block_soft_threshold",
    "weighted_block_soft_threshold",
    "scalar_prox_oracle",
    "coupled_l1_utility",
    "euclidean_norm_utility",
    "oracle_equivalence_suite",
    "NetworkConfig",
    "make_state",
    "ReplicaState",
    "FixedPointError",
    "channel_expectations",
    "quadrature_expectations",
    "solve_fixed_point",
    "asymptotic_distortion",
    "RecoveryProblem",
    "Tuning",
    "SolverReport",
    "objective",
    "operator_norm_squared",
    "solve_joint_map",
    "solve_l21_rls",
    "ExperimentConfig",
    "TrialResult",
    "SimulationReport",
    "run_trial",
    "run_experiment",
]
