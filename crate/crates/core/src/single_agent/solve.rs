use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::single_agent::{AgentSpec, BetaCurve, Contract};

/// Utilities closer than this are considered tied.
const TIE_TOL: f64 = 1e-12;

/// Optimal single-agent contract together with the action it implements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSolution {
    pub contract: Contract,
    /// Index of the implemented (safe) action.
    pub action: usize,
    pub utility: f64,
}

impl SingleSolution {
    fn better_than(&self, other: &SingleSolution) -> bool {
        if self.utility > other.utility + TIE_TOL {
            return true;
        }
        if self.utility < other.utility - TIE_TOL {
            return false;
        }
        let (a, b) = (self.contract, other.contract);
        a.beta < b.beta - TIE_TOL || ((a.beta - b.beta).abs() <= TIE_TOL && a.gamma < b.gamma)
    }
}

/// Optimal linear contract for one agent.
///
/// Checks every piece boundary of `beta(gamma)` plus, on each unclamped piece,
/// the stationary point of the concave principal utility. Runs in
/// `O(n log n)`. Ties go to the smaller inspection probability, then the
/// smaller share.
pub fn solve_single(agent: &AgentSpec) -> Result<SingleSolution> {
    let curve = BetaCurve::new(agent)?;
    Ok(solve_on_curve(agent, &curve))
}

pub(crate) fn solve_on_curve(agent: &AgentSpec, curve: &BetaCurve) -> SingleSolution {
    let kappa_i = agent.kappa_i();
    let pieces = curve.pieces();
    let mut best: Option<SingleSolution> = None;
    let mut offer = |gamma: f64, piece_idx: usize| {
        let piece = &pieces[piece_idx];
        let beta = piece.beta(gamma);
        let cand = SingleSolution {
            contract: Contract { gamma, beta },
            action: piece.owner,
            utility: piece.principal_value(gamma, kappa_i),
        };
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            best = Some(cand);
        }
    };

    for (idx, piece) in pieces.iter().enumerate() {
        offer(piece.lo, idx);
        if piece.clamped {
            continue;
        }
        if let Some(g) = piece.stationary_gamma(kappa_i) {
            if g > piece.lo && g < piece.hi {
                offer(g, idx);
            }
        }
    }
    // Interior right ends coincide with the next piece's left end, where the
    // higher-reward owner takes over, so only the final one is offered.
    offer(1.0, pieces.len() - 1);
    best.expect("a beta curve always has at least one piece")
}

/// Parameter varied by [`sweep_parameter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    KappaI,
    KappaS,
    Alpha,
}

impl SweepParam {
    fn apply(self, agent: &AgentSpec, value: f64) -> Result<AgentSpec> {
        match self {
            SweepParam::KappaI => agent.with_kappa_i(value),
            SweepParam::KappaS => agent.with_kappa_s(value),
            SweepParam::Alpha => agent.with_alpha(value),
        }
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa_i" => Ok(SweepParam::KappaI),
            "kappa_s" => Ok(SweepParam::KappaS),
            "alpha" => Ok(SweepParam::Alpha),
            other => Err(Error::InvalidParameter(format!(
                "unknown sweep parameter {other:?}; expected kappa_i, kappa_s or alpha"
            ))),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::KappaI => "kappa_i",
            SweepParam::KappaS => "kappa_s",
            SweepParam::Alpha => "alpha",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<SingleSolution>,
}

/// Re-solves the agent for every grid value of `param`, in grid order. A
/// value that makes the agent invalid or infeasible yields an error row.
pub fn sweep_parameter(agent: &AgentSpec, param: SweepParam, grid: &[f64]) -> Vec<SweepRow> {
    grid.iter()
        .map(|&value| SweepRow {
            value,
            result: param.apply(agent, value).and_then(|a| solve_single(&a)),
        })
        .collect()
}
