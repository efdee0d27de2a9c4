//! Many agents sharing `B` inspectors: per-agent utility as a function of the
//! inspection cap, and the grid dynamic program that splits the budget.

mod curve;
mod dp;

pub use curve::{min_beta, UtilityCurve, UtilitySegment};
pub use dp::{
    allocate, gap_bound, value_table, AgentAllocation, Allocation, AllocationProblem, Resolution,
};
pub(crate) use dp::{build_curves, spare_budget};
