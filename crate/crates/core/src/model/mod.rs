//! Knowledge-creation technology, its rotation steady state and the
//! synthetic economy used as ground truth for the estimators.

mod bf;
mod economy;

pub use bf::{
    integer_component_size, isolated_output, pair_output, simulate_rotation, steady_state_targets, BfParams,
    InitialStocks, KnowledgeState, RotationRun, Round, RoundRobinSchedule, TimeAllocation,
};
pub use economy::{category_code, simulate_economy, EconomyConfig, FocalTruth, SyntheticEconomy};
