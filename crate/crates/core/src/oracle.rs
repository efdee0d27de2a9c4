//! Brute-force reference solvers. Slow on purpose: they share no code with
//! the closed-form solvers beyond the agent's response model.

use crate::error::{Error, Result};
use crate::multi_agent::{
    build_curves, spare_budget, AgentAllocation, Allocation, AllocationProblem,
};
use crate::single_agent::{agent_best_response, principal_utility, AgentSpec, Contract, Response};

fn grid(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step {step} must lie in (0, 1]"
        )));
    }
    let n = (1.0 / step + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
    if *g.last().unwrap() < 1.0 - 1e-12 {
        g.push(1.0);
    }
    Ok(g)
}

/// Best safe-implementing contract on a uniform `(gamma, beta)` grid over
/// the unit square.
pub fn brute_force_single(agent: &AgentSpec, step: f64) -> Result<(Contract, f64)> {
    brute_force_single_with(agent, step, &[], &[])
}

/// Like [`brute_force_single`] with extra grid coordinates merged in.
pub fn brute_force_single_with(
    agent: &AgentSpec,
    step: f64,
    extra_gammas: &[f64],
    extra_betas: &[f64],
) -> Result<(Contract, f64)> {
    let mut gammas = grid(step)?;
    if !agent.is_safety_feasible() {
        return Err(Error::NoSafeContract);
    }
    let mut betas = gammas.clone();
    gammas.extend(
        extra_gammas
            .iter()
            .copied()
            .filter(|g| (0.0..=1.0).contains(g)),
    );
    betas.extend(
        extra_betas
            .iter()
            .copied()
            .filter(|b| (0.0..=1.0).contains(b)),
    );

    let mut best: Option<(Contract, f64)> = None;
    for &gamma in &gammas {
        for &beta in &betas {
            let contract = Contract { gamma, beta };
            let response = agent_best_response(agent, contract);
            if !response.is_safe() {
                continue;
            }
            let u = principal_utility(agent, contract, response);
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((contract, u));
            }
        }
    }
    best.ok_or(Error::NoSafeContract)
}

/// Exhaustive search over per-agent caps `beta_min + k * step` with total at
/// most the budget. Limited to three agents.
///
/// The last agent's utility is nondecreasing in its cap, so it simply gets
/// the largest grid cap that still fits.
pub fn brute_force_allocate(problem: &AllocationProblem, step: f64) -> Result<Allocation> {
    let m = problem.agents.len();
    if m == 0 || m > 3 {
        return Err(Error::InvalidParameter(format!(
            "brute-force allocation handles 1 to 3 agents, got {m}"
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step {step} must be > 0"
        )));
    }
    let curves = build_curves(&problem.agents)?;
    let spare = spare_budget(&curves, problem.budget)?;
    let steps = (spare / step + 1e-9).floor() as usize;

    let values: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| {
            (0..=steps)
                .map(|k| c.utility_at(c.beta_min() + k as f64 * step))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut best = (f64::NEG_INFINITY, vec![0usize; m]);
    let mut ks = vec![0usize; m];
    loop {
        let used: usize = ks[..m - 1].iter().sum();
        if used <= steps {
            ks[m - 1] = steps - used;
            let total: f64 = ks.iter().zip(&values).map(|(&k, v)| v[k]).sum();
            if total > best.0 {
                best = (total, ks.clone());
            }
        }
        // Odometer over the first m - 1 agents.
        let mut i = 0;
        while i < m - 1 {
            ks[i] += 1;
            if ks[i] <= steps {
                break;
            }
            ks[i] = 0;
            i += 1;
        }
        if i == m - 1 {
            break;
        }
    }

    let mut agents = Vec::with_capacity(m);
    for (c, &k) in curves.iter().zip(&best.1) {
        let beta_bar = c.beta_min() + k as f64 * step;
        let (contract, action, utility) = c.contract_at(beta_bar)?;
        agents.push(AgentAllocation {
            beta_bar,
            contract,
            action,
            utility,
        });
    }
    Ok(Allocation {
        agents,
        total_utility: best.0,
        delta: step,
        gap_bound: crate::multi_agent::gap_bound(&problem.agents, step),
    })
}

/// True when taking `action` safely is individually rational and no other
/// action, safe or not, pays the agent more.
pub fn check_ic_ir(agent: &AgentSpec, contract: Contract, action: usize, safe: bool) -> bool {
    const SLACK: f64 = 1e-12;
    if action >= agent.actions().len() {
        return false;
    }
    let own = agent.agent_utility(contract, action, safe);
    if own < -SLACK {
        return false;
    }
    (0..agent.actions().len()).all(|i| {
        agent.agent_utility(contract, i, true) <= own + SLACK
            && agent.agent_utility(contract, i, false) <= own + SLACK
    })
}

/// [`check_ic_ir`] for the response the solver expects.
pub fn check_response(agent: &AgentSpec, contract: Contract, response: Response) -> bool {
    match response {
        Response::Accept { action, safe } => check_ic_ir(agent, contract, action, safe),
        Response::Reject => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi_agent::Resolution;

    fn unit1() -> AgentSpec {
        AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn unit1_grid_optimum() {
        let (c, u) = brute_force_single(&unit1(), 1e-3).unwrap();
        assert!((u - 20.0 / 3.0).abs() < 2e-2, "{u}");
        assert!(check_ic_ir(&unit1(), c, 0, true));
    }

    #[test]
    fn zero_safety_cost() {
        let agent = unit1().with_kappa_s(0.0).unwrap();
        let (c, u) = brute_force_single(&agent, 1e-3).unwrap();
        assert!((c.gamma - 0.2).abs() < 1e-9);
        assert_eq!(c.beta, 0.0);
        assert!((u - 8.0).abs() < 1e-9);
    }

    #[test]
    fn extra_points_recover_exact_optimum() {
        let (c, u) = brute_force_single_with(&unit1(), 0.1, &[0.3], &[1.0 / 3.0]).unwrap();
        assert!((u - 20.0 / 3.0).abs() < 1e-12);
        assert!((c.gamma - 0.3).abs() < 1e-12);
    }

    #[test]
    fn infeasible_agent_has_no_safe_contract() {
        let agent = unit1().with_kappa_s(8.0).unwrap();
        assert_eq!(brute_force_single(&agent, 0.01), Err(Error::NoSafeContract));
    }

    #[test]
    fn ic_ir_examples() {
        let a = unit1();
        assert!(check_ic_ir(
            &a,
            Contract {
                gamma: 0.3,
                beta: 1.0 / 3.0
            },
            0,
            true
        ));
        assert!(!check_ic_ir(
            &a,
            Contract {
                gamma: 0.3,
                beta: 0.2
            },
            0,
            true
        ));
        assert!(check_ic_ir(
            &a,
            Contract {
                gamma: 1.0,
                beta: 1.0
            },
            0,
            true
        ));
        assert!(!check_ic_ir(
            &a,
            Contract {
                gamma: 0.1,
                beta: 1.0
            },
            0,
            true
        ));
        assert!(!check_ic_ir(
            &a,
            Contract {
                gamma: 1.0,
                beta: 1.0
            },
            3,
            true
        ));
    }

    #[test]
    fn allocation_examples() {
        let p = AllocationProblem::new(vec![unit1(); 2], 2, Resolution::Delta(0.01));
        let a = brute_force_allocate(&p, 0.01).unwrap();
        assert!((a.total_utility - 40.0 / 3.0).abs() < 1e-9);

        let p = AllocationProblem::new(vec![unit1(); 3], 1, Resolution::Delta(0.01));
        let a = brute_force_allocate(&p, 0.01).unwrap();
        assert!((a.total_utility - 20.0).abs() < 0.1, "{}", a.total_utility);

        let p = AllocationProblem::new(vec![unit1()], 1, Resolution::Delta(0.01));
        let a = brute_force_allocate(&p, 0.01).unwrap();
        assert!((a.total_utility - 20.0 / 3.0).abs() < 1e-9);

        let p = AllocationProblem::new(vec![unit1(); 4], 1, Resolution::Delta(0.01));
        assert!(brute_force_allocate(&p, 0.01).is_err());
    }
}
