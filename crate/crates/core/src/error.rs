use thiserror::Error;

/// Errors raised by the solvers.
///
/// Variants are grouped by how a caller should react: [`Error::is_invalid_input`]
/// covers malformed instances, [`Error::is_infeasible`] covers well-formed
/// instances that admit no safe contract or allocation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate actions: {0}")]
    DegenerateInput(String),

    #[error("invalid agent: {0}")]
    InvalidAgent(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value {value} is below the envelope's range (minimum {minimum})")]
    BelowRange { value: f64, minimum: f64 },

    #[error(
        "no safe action is implementable (Assumption 2): max(R - c) = {best_surplus} does not exceed kappa_s = {kappa_s}"
    )]
    InfeasibleSafety { best_surplus: f64, kappa_s: f64 },

    #[error("payment share {gamma} is below the participation threshold {gamma_ir}")]
    BelowIrThreshold { gamma: f64, gamma_ir: f64 },

    #[error("inspection cap {beta_bar} is below the minimum inspection {beta_min}")]
    BelowMinimumInspection { beta_bar: f64, beta_min: f64 },

    #[error(
        "inspection budget {budget} cannot cover the minimum inspections (Assumption 3): sum of beta_min = {required}"
    )]
    InfeasibleBudget { required: f64, budget: f64 },

    #[error("epsilon cannot be converted to a grid step: utility lower bound {0} is not positive; pass delta directly")]
    NonpositiveLowerBound(f64),

    #[error("targets sum to {total}, exceeding the {budget} available inspectors")]
    BudgetExceeded { total: f64, budget: u32 },

    #[error("target {index} = {value} is not a probability")]
    InvalidProbability { index: usize, value: f64 },

    #[error("no grid contract implements a safe action")]
    NoSafeContract,

    #[error("{0}")]
    Instance(String),

    #[error("agent {name:?}: {source}")]
    Agent { name: String, source: Box<Error> },
}

impl Error {
    pub fn is_invalid_input(&self) -> bool {
        if let Error::Agent { source, .. } = self {
            return source.is_invalid_input();
        }
        matches!(
            self,
            Error::DegenerateInput(_)
                | Error::InvalidAgent(_)
                | Error::InvalidParameter(_)
                | Error::InvalidProbability { .. }
                | Error::Instance(_)
        )
    }

    pub fn is_infeasible(&self) -> bool {
        if let Error::Agent { source, .. } = self {
            return source.is_infeasible();
        }
        matches!(
            self,
            Error::InfeasibleSafety { .. }
                | Error::InfeasibleBudget { .. }
                | Error::NonpositiveLowerBound(_)
                | Error::BudgetExceeded { .. }
                | Error::NoSafeContract
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
