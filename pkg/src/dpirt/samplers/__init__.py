from .adaptive import AdaptiveMHState, adaptive_rw_mh_step, vector_rw_mh_step
from .chain import ChainState, centered_pair_proposal, run_chain
from .conjugate import conjugate_normal_invgamma_update
from .crp import (
    BaseMeasureMarginal,
    CRPState,
    crp_assignment_update,
    crp_label_sweep,
    escobar_west_alpha_update,
    marginal_for,
    sample_new_atom,
    update_cluster_atoms,
)
from .strategy import (
    AbilityModel,
    Algorithm,
    ConstraintMode,
    StrategyConfig,
    table_strategies,
)

__all__ = [
    "AbilityModel",
    "AdaptiveMHState",
    "Algorithm",
    "BaseMeasureMarginal",
    "CRPState",
    "ChainState",
    "centered_pair_proposal",
    "ConstraintMode",
    "StrategyConfig",
    "adaptive_rw_mh_step",
    "conjugate_normal_invgamma_update",
    "crp_assignment_update",
    "crp_label_sweep",
    "escobar_west_alpha_update",
    "marginal_for",
    "run_chain",
    "sample_new_atom",
    "table_strategies",
    "update_cluster_atoms",
    "vector_rw_mh_step",
]
