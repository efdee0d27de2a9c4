//! Optimal linear contracts with random safety inspections.
//!
//! A principal pays each agent a share `gamma` of the reward it generates and
//! inspects the agent with probability `beta` to deter it from skipping a
//! costly safety step. This crate computes:
//!
//! * the upper envelope of the agent's utility lines ([`envelope`]),
//! * the minimum deterring inspection curve `beta(gamma)` and the optimal
//!   single-agent contract ([`single_agent`]),
//! * an allocation of a budget of `B` inspectors across many agents by
//!   dynamic programming ([`multi_agent`]),
//! * a sequential random assignment of inspectors with exact marginals
//!   ([`scheduler`]),
//! * brute-force oracles used to cross-check all of the above ([`oracle`]).

pub mod cli;
pub mod envelope;
pub mod error;
pub mod instance;
pub mod multi_agent;
pub mod oracle;
pub mod scheduler;
pub mod single_agent;

pub use envelope::{Action, UpperEnvelope};
pub use error::{Error, Result};
pub use multi_agent::{
    allocate, gap_bound, min_beta, AgentAllocation, Allocation, AllocationProblem, Resolution,
    UtilityCurve,
};
pub use scheduler::{Assignment, InspectionSchedule};
pub use single_agent::{
    agent_best_response, needs_inspection, principal_utility, solve_single, sweep_parameter,
    AgentSpec, BetaCurve, BetaPiece, Contract, Response, SingleSolution, SweepParam, SweepRow,
};

/// Absolute tolerance used for floating point comparisons throughout the crate.
pub const TOL: f64 = 1e-9;
