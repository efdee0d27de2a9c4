#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safecontract_core::AgentSpec;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit1() -> AgentSpec {
    AgentSpec::from_parts(&[10.0], &[2.0], 1.0, 1.0, 0.0).unwrap()
}

pub fn six_action(alpha: f64) -> AgentSpec {
    AgentSpec::from_parts(
        &[2.0, 3.0, 7.0, 9.0, 11.0, 13.0],
        &[1.0, 1.2, 2.1, 3.1, 4.8, 6.6],
        1.0,
        1.0,
        alpha,
    )
    .unwrap()
}

pub fn stepped_six(kappa_s: f64, alpha: f64) -> AgentSpec {
    AgentSpec::from_parts(
        &[1.5, 3.0, 4.0, 6.0, 7.0, 9.0],
        &[1.0, 1.3, 1.5, 2.5, 3.4, 5.2],
        kappa_s,
        1.0,
        alpha,
    )
    .unwrap()
}

/// Random rewards and costs, both strictly increasing, with at least one
/// action of positive surplus.
pub fn random_actions(rng: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    loop {
        let mut r = Vec::with_capacity(n);
        let mut c = Vec::with_capacity(n);
        let (mut rs, mut cs) = (0.0, 0.0);
        for _ in 0..n {
            rs += rng.random_range(0.2..4.0);
            cs += rng.random_range(0.05..2.5);
            r.push(rs);
            c.push(cs);
        }
        if r.iter().zip(&c).any(|(r, c)| r - c > 0.3) {
            return (r, c);
        }
    }
}

/// Agent satisfying the ordering and safety-feasibility assumptions.
pub fn random_agent(rng: &mut impl Rng, max_actions: usize) -> AgentSpec {
    let n = rng.random_range(1..=max_actions);
    let (r, c) = random_actions(rng, n);
    let surplus = r
        .iter()
        .zip(&c)
        .map(|(r, c)| r - c)
        .fold(f64::NEG_INFINITY, f64::max);
    let kappa_s = if rng.random_bool(0.1) {
        0.0
    } else {
        rng.random_range(0.02..0.9) * surplus
    };
    let kappa_i = rng.random_range(0.1..8.0);
    let alpha = if rng.random_bool(0.3) {
        0.0
    } else {
        rng.random_range(0.0..0.3)
    };
    AgentSpec::from_parts(&r, &c, kappa_s, kappa_i, alpha).unwrap()
}

pub fn linspace(a: f64, b: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
        .collect()
}
