"""Bayesian parametric and semiparametric binary IRT models.

Core pieces: the 1PL/2PL/3PL likelihood under two parameterizations, the
Dirichlet-process mixture ability model fit through collapsed CRP updates,
the strategy matrix of samplers, identifiability post-processing, latent
density/percentile inference, and ESS-based efficiency diagnostics.
"""

from .archive import SampleArchive
from .errors import ValidationError
from .identify import (
    TransformRecord,
    apply_item_constraints,
    postprocess_archive,
    postprocess_irt,
    postprocess_si,
    rescale_density,
)
from .inference import (
    DensityEstimate,
    MeasureSample,
    WaicResult,
    crp_predictive_density_estimate,
    density_estimate,
    error_metrics,
    parametric_density_estimate,
    percentile_estimates,
    sample_dp_measure,
    waic,
    waic_from_archive,
)
from .diagnostics import (
    EfficiencyReport,
    efficiency_report,
    multivariate_ess,
    univariate_ess,
)
from .model import (
    ItemParametersIRT,
    ItemParametersSI,
    ModelKind,
    Parameterization,
    ResponseMatrix,
    irt_to_si,
    log_likelihood,
    pointwise_log_likelihood,
    si_to_irt,
    success_probability,
)
from .priors import (
    AbilityPriorConfig,
    ConcentrationPrior,
    ItemPriorConfig,
    NormalInverseGamma,
    Priors,
    crp_cluster_moments,
    marginal_cluster_moments,
    simulate_crp_partition,
    simulate_prior_predictive,
)
from .samplers import (
    AbilityModel,
    AdaptiveMHState,
    Algorithm,
    ConstraintMode,
    CRPState,
    StrategyConfig,
    adaptive_rw_mh_step,
    centered_pair_proposal,
    conjugate_normal_invgamma_update,
    crp_assignment_update,
    escobar_west_alpha_update,
    run_chain,
    table_strategies,
)
from .scenarios import (
    GroundTruth,
    Scenario,
    sample_skew_normal,
    scenario_density,
    simulate_abilities,
    simulate_items,
    simulate_responses,
    simulate_truth,
)

__version__ = "0.1.0"
