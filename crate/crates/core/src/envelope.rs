//! Upper envelope of the agent's utility lines `h_i(gamma) = gamma * R_i - c_i`.
//!
//! Under point-line duality the lines that appear on the upper envelope are
//! exactly the vertices of the lower convex hull of the points `(R_i, c_i)`,
//! so the envelope is built with a monotone-chain scan over actions sorted by
//! reward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cross products within this distance of zero are treated as collinear.
const COLLINEAR_TOL: f64 = 1e-9;

/// One effort level: expected reward to the principal and the agent's cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub reward: f64,
    pub cost: f64,
}

impl Action {
    pub fn new(reward: f64, cost: f64) -> Self {
        Action { reward, cost }
    }

    /// Agent utility `gamma * R - c` of taking this action safely, before the
    /// safety cost.
    #[inline]
    pub fn line(&self, gamma: f64) -> f64 {
        gamma * self.reward - self.cost
    }
}

/// Piecewise linear, convex and increasing function `u_h(gamma) = max_i h_i(gamma)`
/// on `[0, inf)`.
///
/// Segment `j` spans `[b_j, b_{j+1}]` with `b_0 = 0` and the last segment
/// unbounded; it is owned by action `hull_actions()[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperEnvelope {
    hull: Vec<usize>,
    lines: Vec<Action>,
    breakpoints: Vec<f64>,
    // u_h at each breakpoint, used by `invert`.
    values: Vec<f64>,
}

impl UpperEnvelope {
    /// Builds the envelope in `O(n log n)`.
    ///
    /// Actions must be comonotone with pairwise distinct rewards and costs: an
    /// action that costs more must also earn more. Lines that only touch the
    /// envelope at a single point (collinear hull vertices) are dropped.
    pub fn new(actions: &[Action]) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::DegenerateInput("no actions".into()));
        }
        for (i, a) in actions.iter().enumerate() {
            if !(a.reward.is_finite() && a.cost.is_finite()) || a.reward < 0.0 || a.cost < 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "action {} has reward {} and cost {}; both must be finite and nonnegative",
                    i + 1,
                    a.reward,
                    a.cost
                )));
            }
        }

        let mut order: Vec<usize> = (0..actions.len()).collect();
        order.sort_by(|&a, &b| actions[a].reward.total_cmp(&actions[b].reward));
        for w in order.windows(2) {
            let (p, q) = (&actions[w[0]], &actions[w[1]]);
            if p.reward == q.reward || p.cost >= q.cost {
                return Err(Error::DegenerateInput(format!(
                    "actions {} and {} do not have strictly increasing reward and cost together",
                    w[0] + 1,
                    w[1] + 1
                )));
            }
        }

        let mut hull: Vec<usize> = Vec::with_capacity(actions.len());
        for &k in &order {
            while hull.len() >= 2 {
                let i = hull[hull.len() - 2];
                let j = hull[hull.len() - 1];
                if keeps_middle(&actions[i], &actions[j], &actions[k]) {
                    break;
                }
                hull.pop();
            }
            hull.push(k);
        }

        let lines: Vec<Action> = hull.iter().map(|&i| actions[i]).collect();
        let breakpoints: Vec<f64> = lines
            .windows(2)
            .map(|w| (w[1].cost - w[0].cost) / (w[1].reward - w[0].reward))
            .collect();
        let values = breakpoints
            .iter()
            .zip(&lines)
            .map(|(&b, l)| l.line(b))
            .collect();

        Ok(UpperEnvelope {
            hull,
            lines,
            breakpoints,
            values,
        })
    }

    /// Indices (into the input slice) of the actions owning a segment, in
    /// increasing reward.
    pub fn hull_actions(&self) -> &[usize] {
        &self.hull
    }

    /// Interior breakpoints `b_1 < ... < b_{k-1}`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Line owning segment `j`.
    pub fn line(&self, segment: usize) -> Action {
        self.lines[segment]
    }

    /// Original action index owning segment `j`.
    pub fn owner(&self, segment: usize) -> usize {
        self.hull[segment]
    }

    /// Segment containing `gamma`. At a breakpoint the higher-reward segment is
    /// returned.
    pub fn segment_at(&self, gamma: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= gamma)
    }

    /// Evaluates `u_h(gamma)`.
    pub fn eval(&self, gamma: f64) -> f64 {
        self.lines[self.segment_at(gamma)].line(gamma)
    }

    /// `u_h(0)`, the smallest value the envelope takes on `[0, inf)`.
    pub fn min_value(&self) -> f64 {
        -self.lines[0].cost
    }

    /// Segment containing the preimage of `value`.
    pub fn segment_of_value(&self, value: f64) -> usize {
        self.values.partition_point(|&v| v <= value)
    }

    /// Returns the `gamma >= 0` with `u_h(gamma) = value`, in `O(log n)`.
    ///
    /// If the first segment is flat (zero reward) the largest preimage is
    /// returned.
    pub fn invert(&self, value: f64) -> Result<f64> {
        let minimum = self.min_value();
        if value < minimum {
            if value >= minimum - 1e-12 {
                return Ok(0.0);
            }
            return Err(Error::BelowRange { value, minimum });
        }
        let line = self.lines[self.segment_of_value(value)];
        if line.reward == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(((value + line.cost) / line.reward).max(0.0))
    }
}

/// True when `j` lies strictly below the chord from `i` to `k` in the
/// `(reward, cost)` plane, i.e. line `j` owns a segment of positive length.
fn keeps_middle(i: &Action, j: &Action, k: &Action) -> bool {
    let cross =
        (k.cost - j.cost) * (j.reward - i.reward) - (j.cost - i.cost) * (k.reward - j.reward);
    cross > COLLINEAR_TOL
}
