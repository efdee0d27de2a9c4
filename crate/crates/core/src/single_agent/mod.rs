//! Single-agent contracts: the agent model, the inspection curve `beta(gamma)`
//! and the optimal linear contract.

mod beta;
mod solve;

pub use beta::{BetaCurve, BetaPiece};
pub use solve::{solve_single, sweep_parameter, SingleSolution, SweepParam, SweepRow};

use serde::{Deserialize, Serialize};

use crate::envelope::{Action, UpperEnvelope};
use crate::error::{Error, Result};
use crate::TOL;

/// One agent: its effort levels, its cost of complying with safety measures
/// (`kappa_s`), the principal's cost per inspection (`kappa_i`) and the
/// probability `alpha` that skipping safety causes a side effect.
///
/// Construction checks that actions are listed by increasing cost with
/// strictly increasing rewards. Whether a safe action can be implemented at
/// all is checked lazily (see [`AgentSpec::is_safety_feasible`]) so that
/// parameter sweeps can report infeasible points instead of failing.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    actions: Vec<Action>,
    kappa_s: f64,
    kappa_i: f64,
    alpha: f64,
    envelope: UpperEnvelope,
}

impl AgentSpec {
    pub fn new(actions: Vec<Action>, kappa_s: f64, kappa_i: f64, alpha: f64) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidAgent(
                "at least one action is required".into(),
            ));
        }
        for (i, w) in actions.windows(2).enumerate() {
            if !(w[0].cost < w[1].cost && w[0].reward < w[1].reward) {
                return Err(Error::InvalidAgent(format!(
                    "Assumption 1 violated: actions {} and {} must have strictly increasing cost and reward",
                    i + 1,
                    i + 2
                )));
            }
        }
        check_kappa_s(kappa_s)?;
        check_kappa_i(kappa_i)?;
        check_alpha(alpha)?;
        let envelope = UpperEnvelope::new(&actions)?;
        Ok(AgentSpec {
            actions,
            kappa_s,
            kappa_i,
            alpha,
            envelope,
        })
    }

    /// Convenience constructor from parallel reward and cost slices.
    pub fn from_parts(
        rewards: &[f64],
        costs: &[f64],
        kappa_s: f64,
        kappa_i: f64,
        alpha: f64,
    ) -> Result<Self> {
        if rewards.len() != costs.len() {
            return Err(Error::InvalidAgent(format!(
                "{} rewards but {} costs",
                rewards.len(),
                costs.len()
            )));
        }
        let actions = rewards
            .iter()
            .zip(costs)
            .map(|(&r, &c)| Action::new(r, c))
            .collect();
        Self::new(actions, kappa_s, kappa_i, alpha)
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn kappa_s(&self) -> f64 {
        self.kappa_s
    }

    pub fn kappa_i(&self) -> f64 {
        self.kappa_i
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn envelope(&self) -> &UpperEnvelope {
        &self.envelope
    }

    /// Reward of the most rewarding action, `R_n`.
    pub fn max_reward(&self) -> f64 {
        self.actions.last().map_or(0.0, |a| a.reward)
    }

    /// `max_i (R_i - c_i)`: the agent's best surplus under full payment.
    pub fn max_surplus(&self) -> f64 {
        self.actions
            .iter()
            .map(|a| a.reward - a.cost)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether some safe action clears participation at full payment.
    pub fn is_safety_feasible(&self) -> bool {
        self.max_surplus() > self.kappa_s
    }

    pub fn check_safety_feasible(&self) -> Result<()> {
        if self.is_safety_feasible() {
            Ok(())
        } else {
            Err(Error::InfeasibleSafety {
                best_surplus: self.max_surplus(),
                kappa_s: self.kappa_s,
            })
        }
    }

    pub fn with_kappa_s(&self, kappa_s: f64) -> Result<Self> {
        check_kappa_s(kappa_s)?;
        Ok(AgentSpec {
            kappa_s,
            ..self.clone()
        })
    }

    pub fn with_kappa_i(&self, kappa_i: f64) -> Result<Self> {
        check_kappa_i(kappa_i)?;
        Ok(AgentSpec {
            kappa_i,
            ..self.clone()
        })
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(AgentSpec {
            alpha,
            ..self.clone()
        })
    }

    /// Agent utility of `(action, safe)` under `contract`.
    pub fn agent_utility(&self, contract: Contract, action: usize, safe: bool) -> f64 {
        let a = self.actions[action];
        if safe {
            contract.gamma * a.reward - a.cost - self.kappa_s
        } else {
            (1.0 - contract.beta) * (1.0 - self.alpha) * contract.gamma * a.reward - a.cost
        }
    }
}

fn check_kappa_s(kappa_s: f64) -> Result<()> {
    if kappa_s.is_finite() && kappa_s >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAgent(format!(
            "kappa_s = {kappa_s} must be finite and >= 0"
        )))
    }
}

fn check_kappa_i(kappa_i: f64) -> Result<()> {
    if kappa_i.is_finite() && kappa_i > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAgent(format!(
            "kappa_i = {kappa_i} must be finite and > 0"
        )))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAgent(format!(
            "alpha = {alpha} must lie in [0, 1)"
        )))
    }
}

/// A linear contract: pay `gamma` times the reward and inspect with
/// probability `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub gamma: f64,
    pub beta: f64,
}

impl Contract {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must lie in [0, 1]"
                )));
            }
        }
        Ok(Contract { gamma, beta })
    }
}

/// The agent's reaction to a contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Accept {
        action: usize,
        safe: bool,
    },
    /// The outside option: every action leaves the agent with negative utility.
    Reject,
}

impl Response {
    pub fn is_safe(&self) -> bool {
        matches!(self, Response::Accept { safe: true, .. })
    }
}

/// With no inspection, no safe action can be
/// implemented whenever `alpha < kappa_s / R_n`.
pub fn needs_inspection(agent: &AgentSpec) -> bool {
    agent.kappa_s > 0.0 && agent.alpha * agent.max_reward() < agent.kappa_s
}

/// Best response over all `2n` actions plus the outside option.
///
/// Utilities within [`TOL`] of the maximum count as ties; ties go to the safe
/// variant, then to the higher-reward action. The agent rejects only when the
/// best utility is below `-TOL`.
pub fn agent_best_response(agent: &AgentSpec, contract: Contract) -> Response {
    let n = agent.actions.len();
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        for safe in [true, false] {
            best = best.max(agent.agent_utility(contract, i, safe));
        }
    }
    if best < -TOL {
        return Response::Reject;
    }
    for safe in [true, false] {
        for i in (0..n).rev() {
            if agent.agent_utility(contract, i, safe) >= best - TOL {
                return Response::Accept { action: i, safe };
            }
        }
    }
    unreachable!("the maximizer is always within tolerance of itself")
}

/// Principal's expected utility: `(1 - gamma) R_i - beta kappa_i` for a safe
/// response, negative infinity for an unsafe one and zero for a rejection.
pub fn principal_utility(agent: &AgentSpec, contract: Contract, response: Response) -> f64 {
    match response {
        Response::Accept { action, safe: true } => {
            (1.0 - contract.gamma) * agent.actions[action].reward - contract.beta * agent.kappa_i
        }
        Response::Accept { safe: false, .. } => f64::NEG_INFINITY,
        Response::Reject => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit1() -> AgentSpec {
        AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn needs_inspection_examples() {
        let a = AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 1.0, 0.05).unwrap();
        assert!(needs_inspection(&a));
        assert!(!needs_inspection(&a.with_kappa_s(0.0).unwrap()));
        assert!(!needs_inspection(&a.with_alpha(0.2).unwrap()));
    }

    // Enumerates every option explicitly; independent of the tie rule above
    // except for the documented preference order.
    fn enumerate(agent: &AgentSpec, c: Contract) -> Vec<(f64, usize, bool)> {
        let mut v = Vec::new();
        for i in 0..agent.actions().len() {
            v.push((agent.agent_utility(c, i, true), i, true));
            v.push((agent.agent_utility(c, i, false), i, false));
        }
        v
    }

    #[test]
    fn best_response_examples() {
        let a = unit1();
        let c = Contract::new(0.3, 1.0 / 3.0).unwrap();
        let opts = enumerate(&a, c);
        assert!((opts[0].0 - opts[1].0).abs() < 1e-12 && opts[0].0.abs() < 1e-12);
        assert_eq!(
            agent_best_response(&a, c),
            Response::Accept {
                action: 0,
                safe: true
            }
        );

        let c = Contract::new(0.3, 0.2).unwrap();
        let opts = enumerate(&a, c);
        assert!((opts[1].0 - 0.4).abs() < 1e-12);
        assert_eq!(
            agent_best_response(&a, c),
            Response::Accept {
                action: 0,
                safe: false
            }
        );

        let c = Contract::new(0.1, 1.0).unwrap();
        assert!(enumerate(&a, c).iter().all(|o| o.0 < 0.0));
        assert_eq!(agent_best_response(&a, c), Response::Reject);
    }

    #[test]
    fn principal_utility_examples() {
        let a = unit1();
        let c = Contract::new(0.3, 1.0 / 3.0).unwrap();
        let u = principal_utility(
            &a,
            c,
            Response::Accept {
                action: 0,
                safe: true,
            },
        );
        assert!((u - (7.0 - 1.0 / 3.0)).abs() < 1e-12);
        let u = principal_utility(
            &a,
            c,
            Response::Accept {
                action: 0,
                safe: false,
            },
        );
        assert_eq!(u, f64::NEG_INFINITY);
        assert_eq!(principal_utility(&a, c, Response::Reject), 0.0);
    }

    #[test]
    fn validation() {
        assert!(AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 1.0, 1.0).is_err());
        assert!(AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 0.0, 0.0).is_err());
        assert!(AgentSpec::from_parts(&[10.0], &[2.0], -1.0, 1.0, 0.0).is_err());
        assert!(AgentSpec::from_parts(&[3.0, 2.0], &[1.0, 2.0], 1.0, 1.0, 0.0).is_err());
        assert!(AgentSpec::from_parts(&[2.0, 3.0], &[2.0, 1.0], 1.0, 1.0, 0.0).is_err());
        assert!(AgentSpec::from_parts(&[2.0], &[1.0, 2.0], 1.0, 1.0, 0.0).is_err());
        assert!(Contract::new(1.2, 0.0).is_err());
        // Infeasible safety is not a construction error.
        let a = AgentSpec::from_parts(&[3.0], &[2.0], 1.0, 1.0, 0.0).unwrap();
        assert!(!a.is_safety_feasible());
    }

    #[test]
    fn full_payment_certain_inspection_implements_best_action() {
        let a = AgentSpec::from_parts(&[2.0, 3.0, 7.0], &[1.0, 1.2, 2.1], 1.0, 1.0, 0.1).unwrap();
        let r = agent_best_response(&a, Contract::new(1.0, 1.0).unwrap());
        assert_eq!(
            r,
            Response::Accept {
                action: 2,
                safe: true
            }
        );
    }
}
