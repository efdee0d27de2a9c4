//! Randomized assignment of `B` inspectors to agents so that agent `l` is
//! inspected with probability exactly `targets[l]` and never twice.
//!
//! Inspector `b` covers the slice `[b - 1, b)` of the cumulative target mass.
//! An agent whose mass straddles an integer is shared by two consecutive
//! inspectors; the second one avoids it whenever the first already picked it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const MERGE_TOL: f64 = 1e-12;

/// Outcome for one inspector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assignment {
    Agent(usize),
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
struct Rule {
    /// Agent shared with the previous inspector and the mass left for this one.
    carried: Option<(usize, f64)>,
    /// Probability that the previous inspector picked the carried agent.
    zeta_prev: f64,
    /// Unconditional masses of the remaining window agents.
    shares: Vec<(usize, f64)>,
    window: (usize, usize),
}

impl Rule {
    /// Conditional distribution of this inspector given whether the previous
    /// one took the carried agent. Leftover mass is idle.
    fn outcomes(&self, prev_took_carried: bool) -> Vec<(usize, f64)> {
        let Some((c, r)) = self.carried else {
            return self.shares.clone();
        };
        let rest = 1.0 - r;
        let scale = |p: f64| if rest > 0.0 { p / rest } else { 0.0 };
        if prev_took_carried {
            self.shares.iter().map(|&(l, p)| (l, scale(p))).collect()
        } else {
            let pc = if self.zeta_prev < 1.0 {
                (r / (1.0 - self.zeta_prev)).min(1.0)
            } else {
                0.0
            };
            let mut out = Vec::with_capacity(self.shares.len() + 1);
            out.push((c, pc));
            out.extend(self.shares.iter().map(|&(l, p)| (l, scale(p) * (1.0 - pc))));
            out
        }
    }
}

/// Sequential inspector schedule with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct InspectionSchedule {
    targets: Vec<f64>,
    budget: u32,
    boundaries: Vec<Option<usize>>,
    residuals: Vec<Option<f64>>,
    rules: Vec<Rule>,
}

impl InspectionSchedule {
    /// Builds the schedule in `O(m + B)`.
    ///
    /// Targets may sum to less than `budget`; the missing mass becomes idle
    /// inspectors.
    pub fn new(targets: &[f64], budget: u32) -> Result<Self> {
        for (index, &value) in targets.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { index, value });
            }
        }
        let total: f64 = targets.iter().sum();
        if total > budget as f64 + MERGE_TOL {
            return Err(Error::BudgetExceeded { total, budget });
        }

        let m = targets.len();
        let mut boundaries = Vec::with_capacity(budget as usize);
        let mut residuals = Vec::with_capacity(budget as usize);
        let mut rules = Vec::with_capacity(budget as usize);

        // `next` is the first agent not yet fully handed out; `carry` is the
        // part of an agent already taken by the previous inspector.
        let mut next = 0usize;
        let mut carry: Option<(usize, f64)> = None;
        let mut before = 0.0f64; // cumulative mass of agents < next
        for b in 1..=budget {
            let level = b as f64;
            let lo = carry.map_or(next, |(c, _)| c);
            let (carried, zeta_prev) = match carry {
                Some((c, z)) => (Some((c, targets[c] - z)), z),
                None => (None, 0.0),
            };
            let start = if carried.is_some() { next + 1 } else { next };
            let mut shares = Vec::new();
            let mut boundary = None;
            let mut j = start;
            let mut cum = before + carried.map_or(0.0, |(c, _)| targets[c]);
            while j < m {
                let t = targets[j];
                if cum + t >= level - MERGE_TOL {
                    let zeta = (level - cum).clamp(0.0, t);
                    shares.push((j, zeta));
                    boundary = Some((j, zeta));
                    break;
                }
                shares.push((j, t));
                cum += t;
                j += 1;
            }
            let hi = match boundary {
                Some((l, _)) => l,
                None => m.saturating_sub(1).max(lo),
            };
            rules.push(Rule {
                carried: carried.filter(|&(_, r)| r > 0.0),
                zeta_prev,
                shares,
                window: (lo, hi),
            });
            boundaries.push(boundary.map(|(l, _)| l));
            residuals.push(boundary.map(|(_, z)| z));

            match boundary {
                Some((l, zeta)) => {
                    before = cum;
                    next = l;
                    if targets[l] - zeta > MERGE_TOL {
                        carry = Some((l, zeta));
                    } else {
                        // Exactly on the integer: the next window starts after l.
                        carry = None;
                        before += targets[l];
                        next = l + 1;
                    }
                }
                None => {
                    next = m;
                    carry = None;
                    before = cum;
                }
            }
        }

        Ok(InspectionSchedule {
            targets: targets.to_vec(),
            budget,
            boundaries,
            residuals,
            rules,
        })
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    /// `l_b` for each inspector: the agent where its mass slice ends, if the
    /// cumulative targets reach `b`.
    pub fn boundaries(&self) -> &[Option<usize>] {
        &self.boundaries
    }

    /// `zeta_b`: mass of `l_b` covered by inspector `b`.
    pub fn residuals(&self) -> &[Option<f64>] {
        &self.residuals
    }

    /// Inclusive range of agents inspector `b` (0-based) can pick.
    pub fn window(&self, inspector: usize) -> (usize, usize) {
        self.rules[inspector].window
    }

    /// Conditional pick probabilities of `inspector` given whether the previous
    /// inspector took their shared agent. Entries omitted here are zero and the
    /// remainder is idle.
    pub fn conditional(&self, inspector: usize, prev_took_shared: bool) -> Vec<(usize, f64)> {
        self.rules[inspector].outcomes(prev_took_shared)
    }

    /// Inspection probability of every agent, by a forward pass over the
    /// chain tracking the probability that each inspector takes the agent it
    /// shares with the next one.
    pub fn exact_marginals(&self) -> Vec<f64> {
        let mut marginals = vec![0.0; self.targets.len()];
        let mut took_shared = 0.0;
        for (b, rule) in self.rules.iter().enumerate() {
            // outcomes(false) lists the carried agent first, then the same
            // agents as outcomes(true).
            let yes = rule.outcomes(true);
            let mut dist = rule.outcomes(false);
            let skip = usize::from(rule.carried.is_some());
            for e in dist.iter_mut() {
                e.1 *= 1.0 - took_shared;
            }
            for (e, &(_, p)) in dist.iter_mut().skip(skip).zip(&yes) {
                e.1 += took_shared * p;
            }
            for &(l, p) in &dist {
                marginals[l] += p;
            }
            took_shared = match self.rules.get(b + 1).and_then(|r| r.carried) {
                Some((c, _)) => dist.iter().find(|e| e.0 == c).map_or(0.0, |e| e.1),
                None => 0.0,
            };
        }
        marginals
    }

    /// Draws one assignment of all inspectors, reproducible from `seed`.
    pub fn sample(&self, seed: u64) -> Vec<Assignment> {
        self.sample_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Assignment> {
        let mut out = Vec::with_capacity(self.rules.len());
        let mut prev = Assignment::Idle;
        for rule in &self.rules {
            let took =
                matches!((prev, rule.carried), (Assignment::Agent(p), Some((c, _))) if p == c);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = Assignment::Idle;
            for (l, p) in rule.outcomes(took) {
                acc += p;
                if u < acc {
                    pick = Assignment::Agent(l);
                    break;
                }
            }
            out.push(pick);
            prev = pick;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    // Enumerates the full conditional tree; exponential, so small cases only.
    fn tree_marginals(s: &InspectionSchedule) -> Vec<f64> {
        fn walk(s: &InspectionSchedule, b: usize, prev: Assignment, mass: f64, acc: &mut [f64]) {
            if b == s.rules.len() {
                return;
            }
            let took = matches!((prev, s.rules[b].carried), (Assignment::Agent(p), Some((c, _))) if p == c);
            let outs = s.conditional(b, took);
            let mut used = 0.0;
            for (l, p) in outs {
                acc[l] += mass * p;
                used += p;
                walk(s, b + 1, Assignment::Agent(l), mass * p, acc);
            }
            walk(s, b + 1, Assignment::Idle, mass * (1.0 - used), acc);
        }
        let mut acc = vec![0.0; s.targets.len()];
        walk(s, 0, Assignment::Idle, 1.0, &mut acc);
        acc
    }

    #[test]
    fn single_inspector_with_idle_mass() {
        let s = InspectionSchedule::new(&[0.3, 0.5], 1).unwrap();
        assert_eq!(s.conditional(0, false), vec![(0, 0.3), (1, 0.5)]);
        assert_eq!(s.boundaries(), &[None]);
        let m = s.exact_marginals();
        assert!(close(m[0], 0.3) && close(m[1], 0.5));
    }

    #[test]
    fn two_inspectors_split_the_middle_agent() {
        let s = InspectionSchedule::new(&[0.6, 0.8, 0.6], 2).unwrap();
        assert_eq!(s.boundaries(), &[Some(1), Some(2)]);
        assert!(close(s.residuals()[0].unwrap(), 0.4));
        let first = s.conditional(0, false);
        assert!(close(first[0].1, 0.6) && close(first[1].1, 0.4));
        let took = s.conditional(1, true);
        assert_eq!(took.len(), 1);
        assert!(took[0].0 == 2 && close(took[0].1, 1.0));
        let other = s.conditional(1, false);
        assert!(other[0].0 == 1 && close(other[0].1, 2.0 / 3.0));
        assert!(other[1].0 == 2 && close(other[1].1, 1.0 / 3.0));
        assert_eq!(s.window(1), (1, 2));

        let m = s.exact_marginals();
        let t = tree_marginals(&s);
        for (k, want) in [0.6, 0.8, 0.6].into_iter().enumerate() {
            assert!(close(m[k], want));
            assert!(close(t[k], want));
        }
    }

    #[test]
    fn deterministic_and_zero_targets() {
        let s = InspectionSchedule::new(&[1.0], 1).unwrap();
        for seed in 0..20 {
            assert_eq!(s.sample(seed), vec![Assignment::Agent(0)]);
        }
        let s = InspectionSchedule::new(&[0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(s.exact_marginals(), vec![0.0; 3]);
        assert_eq!(s.sample(3), vec![Assignment::Idle; 2]);
    }

    #[test]
    fn boundary_exactly_on_integer() {
        let s = InspectionSchedule::new(&[0.5, 0.5, 0.7, 0.3], 2).unwrap();
        assert_eq!(s.boundaries(), &[Some(1), Some(3)]);
        assert_eq!(s.residuals()[0], Some(0.5));
        assert_eq!(s.window(1), (2, 3));
        let m = s.exact_marginals();
        for (a, b) in m.iter().zip([0.5, 0.5, 0.7, 0.3]) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(matches!(
            InspectionSchedule::new(&[0.5, 1.2], 2),
            Err(Error::InvalidProbability { index: 1, .. })
        ));
        assert!(matches!(
            InspectionSchedule::new(&[0.9, 0.9, 0.9], 2),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(InspectionSchedule::new(&[f64::NAN], 1).is_err());
    }

    #[test]
    fn tree_agrees_with_forward_pass() {
        let cases: [(&[f64], u32); 4] = [
            (&[0.9, 0.9, 0.9, 0.3], 3),
            (&[0.2, 0.9, 0.95, 0.4, 0.1], 3),
            (&[0.7, 0.7, 0.1], 3),
            (&[1.0, 1.0, 0.25, 0.75], 3),
        ];
        for (t, b) in cases {
            let s = InspectionSchedule::new(t, b).unwrap();
            let m = s.exact_marginals();
            let tree = tree_marginals(&s);
            for k in 0..t.len() {
                assert!(close(m[k], t[k]), "{t:?}: {m:?}");
                assert!(close(tree[k], t[k]), "{t:?}: {tree:?}");
            }
        }
    }
}
