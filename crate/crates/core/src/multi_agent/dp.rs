use crate::error::{Error, Result};
use crate::multi_agent::UtilityCurve;
use crate::single_agent::{AgentSpec, Contract};

/// Grid resolution for the allocation program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// Step of the extra-inspection grid.
    Delta(f64),
    /// Relative accuracy; converted to a step from a lower bound on the optimum.
    Epsilon(f64),
}

#[derive(Debug, Clone)]
pub struct AllocationProblem {
    pub agents: Vec<AgentSpec>,
    /// Number of inspectors `B`.
    pub budget: u32,
    pub resolution: Resolution,
}

impl AllocationProblem {
    pub fn new(agents: Vec<AgentSpec>, budget: u32, resolution: Resolution) -> Self {
        AllocationProblem {
            agents,
            budget,
            resolution,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentAllocation {
    /// Assigned inspection cap.
    pub beta_bar: f64,
    /// Contract attaining the best utility under the cap.
    pub contract: Contract,
    pub action: usize,
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub agents: Vec<AgentAllocation>,
    pub total_utility: f64,
    /// Grid step actually used.
    pub delta: f64,
    /// Upper bound on the loss from discretizing with `delta`.
    pub gap_bound: f64,
}

impl Allocation {
    /// Inspection probabilities of the effective contracts.
    pub fn effective_betas(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.contract.beta).collect()
    }

    pub fn caps(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.beta_bar).collect()
    }
}

/// Lipschitz bound on the discretization loss of a `delta` grid:
/// `delta * sum max(R_n^2 / kappa_s - kappa_i, 0)`. Agents with zero safety
/// cost never need inspection and contribute nothing.
pub fn gap_bound(agents: &[AgentSpec], delta: f64) -> f64 {
    delta
        * agents
            .iter()
            .filter(|a| a.kappa_s() > 0.0)
            .map(|a| (a.max_reward().powi(2) / a.kappa_s() - a.kappa_i()).max(0.0))
            .sum::<f64>()
}

pub(crate) fn build_curves(agents: &[AgentSpec]) -> Result<Vec<UtilityCurve>> {
    agents.iter().map(UtilityCurve::new).collect()
}

/// Checks the minimum inspections fit in the budget and returns the slack
/// `B - sum beta_min`.
pub(crate) fn spare_budget(curves: &[UtilityCurve], budget: u32) -> Result<f64> {
    let required: f64 = curves.iter().map(|c| c.beta_min()).sum();
    let spare = budget as f64 - required;
    if spare < -1e-12 {
        return Err(Error::InfeasibleBudget {
            required,
            budget: budget as f64,
        });
    }
    Ok(spare.max(0.0))
}

fn resolve_delta(problem: &AllocationProblem, curves: &[UtilityCurve]) -> Result<f64> {
    match problem.resolution {
        Resolution::Delta(d) if d.is_finite() && d > 0.0 => Ok(d),
        Resolution::Delta(d) => Err(Error::InvalidParameter(format!("delta = {d} must be > 0"))),
        Resolution::Epsilon(eps) if eps.is_finite() && eps > 0.0 => {
            let m = curves.len();
            let others: f64 = curves.iter().skip(1).map(|c| c.beta_min()).sum();
            let lower = curves[0].utility_at(problem.budget as f64 - others)?;
            if lower <= 0.0 {
                return Err(Error::NonpositiveLowerBound(lower));
            }
            let steepest = problem
                .agents
                .iter()
                .filter(|a| a.kappa_s() > 0.0)
                .map(|a| a.max_reward().powi(2) / a.kappa_s())
                .fold(0.0, f64::max);
            if steepest == 0.0 {
                // Every curve is a single point; any step is exact.
                return Ok(1.0);
            }
            Ok(eps * lower / (m as f64 * steepest))
        }
        Resolution::Epsilon(e) => Err(Error::InvalidParameter(format!(
            "epsilon = {e} must be > 0"
        ))),
    }
}

/// Allocates the inspection budget across agents by dynamic programming over
/// a grid of extra inspection `x = beta_bar - beta_min` in steps of `delta`.
///
/// `V(l, j)` is the best total gain from the first `l` agents using `j` grid
/// steps; each agent picks `eta` steps, capped where its utility curve turns
/// flat. Values are kept in two rolling rows and the choices in a compact
/// per-agent table for backtracking. Ties favour fewer steps, so unused
/// budget is left unassigned.
pub fn allocate(problem: &AllocationProblem) -> Result<Allocation> {
    if problem.agents.is_empty() {
        return Err(Error::InvalidParameter("no agents to allocate".into()));
    }
    let curves = build_curves(&problem.agents)?;
    let spare = spare_budget(&curves, problem.budget)?;
    let delta = resolve_delta(problem, &curves)?;
    let steps = (spare / delta + 1e-9).floor() as usize;

    // gains[l][eta] = U_l(beta_min + eta delta) - U_l(beta_min)
    let mut gains: Vec<Vec<f64>> = Vec::with_capacity(curves.len());
    for c in &curves {
        let flat_from = ((c.beta_cap() - c.beta_min()) / delta - 1e-9)
            .ceil()
            .max(0.0) as usize;
        let cap = flat_from.min(steps);
        let base = c.base_value();
        let row = (0..=cap)
            .map(|eta| {
                let b = c.beta_min() + eta as f64 * delta;
                c.utility_at(b).map(|u| u - base)
            })
            .collect::<Result<Vec<f64>>>()?;
        gains.push(row);
    }

    let width = steps + 1;
    let mut prev = vec![0.0f64; width];
    let mut cur = vec![0.0f64; width];
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(curves.len());
    for g in &gains {
        let mut picks = vec![0u32; width];
        for j in 0..width {
            let mut best = prev[j] + g[0];
            let mut pick = 0usize;
            for (eta, &gain) in g.iter().enumerate().take(j + 1).skip(1) {
                let v = prev[j - eta] + gain;
                if v > best {
                    best = v;
                    pick = eta;
                }
            }
            cur[j] = best;
            picks[j] = pick as u32;
        }
        choice.push(picks);
        std::mem::swap(&mut prev, &mut cur);
    }

    let mut etas = vec![0usize; curves.len()];
    let mut j = steps;
    for l in (0..curves.len()).rev() {
        let eta = choice[l][j] as usize;
        etas[l] = eta;
        j -= eta;
    }

    let mut agents = Vec::with_capacity(curves.len());
    let mut total = 0.0;
    for (c, &eta) in curves.iter().zip(&etas) {
        let beta_bar = c.beta_min() + eta as f64 * delta;
        let (contract, action, utility) = c.contract_at(beta_bar)?;
        total += utility;
        agents.push(AgentAllocation {
            beta_bar,
            contract,
            action,
            utility,
        });
    }

    Ok(Allocation {
        agents,
        total_utility: total,
        delta,
        gap_bound: gap_bound(&problem.agents, delta),
    })
}

/// Full DP table `V(l, j)` for inspection in tests. Row `l` covers the first
/// `l + 1` agents.
#[doc(hidden)]
pub fn value_table(problem: &AllocationProblem) -> Result<Vec<Vec<f64>>> {
    let curves = build_curves(&problem.agents)?;
    let spare = spare_budget(&curves, problem.budget)?;
    let delta = resolve_delta(problem, &curves)?;
    let steps = (spare / delta + 1e-9).floor() as usize;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut prev = vec![0.0; steps + 1];
    for c in &curves {
        let base = c.base_value();
        let row: Vec<f64> = (0..=steps)
            .map(|j| {
                (0..=j)
                    .map(|eta| {
                        let u = c
                            .utility_at(c.beta_min() + eta as f64 * delta)
                            .unwrap_or(base);
                        prev[j - eta] + u - base
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        prev = row.clone();
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single_agent::solve_single;

    fn unit1() -> AgentSpec {
        AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn four_unit1_split_evenly() {
        let p = AllocationProblem::new(vec![unit1(); 4], 1, Resolution::Delta(0.01));
        let a = allocate(&p).unwrap();
        for ag in &a.agents {
            assert!((ag.beta_bar - 0.25).abs() < 1e-9);
            assert!((ag.utility - 5.75).abs() < 1e-9);
        }
        assert!((a.total_utility - 23.0).abs() < 1e-9);
        assert!((a.gap_bound - 3.96).abs() < 1e-12);
    }

    #[test]
    fn slack_budget_gives_unconstrained_optima() {
        let p = AllocationProblem::new(vec![unit1(); 2], 2, Resolution::Delta(0.01));
        let a = allocate(&p).unwrap();
        assert!((a.total_utility - 40.0 / 3.0).abs() < 1e-9);
        for ag in &a.agents {
            assert!((ag.contract.beta - 1.0 / 3.0).abs() < 1e-9);
            assert!(ag.beta_bar <= 1.0 / 3.0 + 0.01);
        }
    }

    #[test]
    fn single_agent_reduces_to_solve_single() {
        let agent = AgentSpec::from_parts(
            &[2.0, 3.0, 7.0, 9.0, 11.0, 13.0],
            &[1.0, 1.2, 2.1, 3.1, 4.8, 6.6],
            1.0,
            1.0,
            0.0,
        )
        .unwrap();
        let s = solve_single(&agent).unwrap();
        let a = allocate(&AllocationProblem::new(
            vec![agent],
            1,
            Resolution::Delta(0.01),
        ))
        .unwrap();
        assert!((a.total_utility - s.utility).abs() < 1e-9);
        assert!((a.agents[0].contract.gamma - s.contract.gamma).abs() < 1e-9);
        assert!((a.agents[0].contract.beta - s.contract.beta).abs() < 1e-9);
    }

    #[test]
    fn gap_bound_examples() {
        assert!((gap_bound(&[unit1()], 0.01) - 0.99).abs() < 1e-12);
        assert_eq!(gap_bound(&[unit1()], 0.0), 0.0);
        assert!((gap_bound(&vec![unit1(); 4], 0.01) - 3.96).abs() < 1e-12);
        assert_eq!(gap_bound(&[unit1().with_kappa_s(0.0).unwrap()], 0.5), 0.0);
    }

    #[test]
    fn infeasible_budget() {
        let p = AllocationProblem::new(vec![unit1(); 11], 1, Resolution::Delta(0.01));
        assert!(matches!(allocate(&p), Err(Error::InfeasibleBudget { .. })));
    }

    #[test]
    fn epsilon_conversion() {
        let p = AllocationProblem::new(vec![unit1(); 2], 1, Resolution::Epsilon(0.1));
        let a = allocate(&p).unwrap();
        // U_1(1 - 0.1) = 20/3; delta = 0.1 * (20/3) / (2 * 100).
        assert!((a.delta - 0.1 * (20.0 / 3.0) / 200.0).abs() < 1e-12);

        // U_1(beta_min) < 0 when the other agents use up the budget.
        let p = AllocationProblem::new(vec![unit1(); 10], 1, Resolution::Epsilon(0.1));
        assert!(matches!(allocate(&p), Err(Error::NonpositiveLowerBound(_))));
    }

    #[test]
    fn value_table_is_monotone_in_budget() {
        let agents = vec![
            unit1(),
            unit1().with_kappa_i(4.0).unwrap(),
            unit1().with_alpha(0.05).unwrap(),
        ];
        let rows = value_table(&AllocationProblem::new(
            agents.clone(),
            1,
            Resolution::Delta(0.02),
        ))
        .unwrap();
        for row in &rows {
            for w in row.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
        let curves = build_curves(&agents).unwrap();
        let a = allocate(&AllocationProblem::new(agents, 1, Resolution::Delta(0.02))).unwrap();
        let top = *rows.last().unwrap().last().unwrap();
        let floor: f64 = curves.iter().map(|c| c.base_value()).sum();
        assert!((a.total_utility - (floor + top)).abs() < 1e-9);
    }
}
