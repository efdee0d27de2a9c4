use crate::error::{Error, Result};
use crate::single_agent::{AgentSpec, BetaCurve, BetaPiece, Contract};

const CAP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// Best utility over all caps up to here, attained at `at`.
    Flat {
        value: f64,
        at: Contract,
        action: usize,
    },
    /// Utility follows `(1 - gamma(b)) R_o - b kappa_i` on a beta piece.
    Rising { piece: BetaPiece, kappa_i: f64 },
}

/// One piece of `U(beta_bar)` over `[lo, hi]` in the inspection cap.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySegment {
    pub lo: f64,
    pub hi: f64,
    shape: Shape,
}

impl UtilitySegment {
    pub fn is_flat(&self) -> bool {
        matches!(self.shape, Shape::Flat { .. })
    }

    fn eval(&self, beta_bar: f64) -> (Contract, usize, f64) {
        match &self.shape {
            Shape::Flat { value, at, action } => (*at, *action, *value),
            Shape::Rising { piece, kappa_i } => {
                let gamma = piece.gamma_for_beta(beta_bar);
                let value = (1.0 - gamma) * piece.owner_line().reward - beta_bar * kappa_i;
                (
                    Contract {
                        gamma,
                        beta: beta_bar,
                    },
                    piece.owner,
                    value,
                )
            }
        }
    }
}

/// Best principal utility from one agent when its inspection probability may
/// not exceed a cap `beta_bar`:
/// `U(beta_bar) = max { (1 - gamma) R(gamma) - beta(gamma) kappa_i : beta(gamma) <= beta_bar }`.
///
/// Because `beta` is nonincreasing this is a running maximum of the utility
/// over shares `gamma >= gamma(beta_bar)`, which is how it is built: the beta
/// pieces are visited from `gamma = 1` down to `gamma_ir`, and each one adds
/// flat stretches (where the running max is not beaten) and at most one rising
/// stretch (where the concave per-piece utility exceeds it).
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityCurve {
    beta_min: f64,
    beta_cap: f64,
    base: (Contract, usize, f64),
    top: (Contract, usize, f64),
    segments: Vec<UtilitySegment>,
}

impl UtilityCurve {
    pub fn new(agent: &AgentSpec) -> Result<Self> {
        let curve = BetaCurve::new(agent)?;
        Ok(Self::from_beta_curve(agent, &curve))
    }

    pub(crate) fn from_beta_curve(agent: &AgentSpec, curve: &BetaCurve) -> Self {
        let kappa_i = agent.kappa_i();
        let pieces = curve.pieces();
        let last = &pieces[pieces.len() - 1];
        let beta_min = curve.beta_min();
        let beta_cap = curve.beta_cap();

        let mut best = (
            Contract {
                gamma: 1.0,
                beta: beta_min,
            },
            last.owner,
            last.principal_value(1.0, kappa_i),
        );
        let mut segments: Vec<UtilitySegment> = Vec::new();
        let mut push = |lo: f64, hi: f64, shape: Shape| {
            if hi > lo {
                segments.push(UtilitySegment { lo, hi, shape });
            }
        };

        for piece in pieces.iter().rev() {
            let value_at = |g: f64| piece.principal_value(g, kappa_i);
            if piece.clamped {
                let u = value_at(piece.lo);
                if u > best.2 {
                    best = (
                        Contract {
                            gamma: piece.lo,
                            beta: 0.0,
                        },
                        piece.owner,
                        u,
                    );
                }
                continue;
            }

            let (lo, hi) = (piece.lo, piece.hi);
            let peak = match piece.stationary_gamma(kappa_i) {
                Some(g) => g.clamp(lo, hi),
                None if value_at(lo) >= value_at(hi) => lo,
                None => hi,
            };
            let flat = |best: &(Contract, usize, f64)| Shape::Flat {
                value: best.2,
                at: best.0,
                action: best.1,
            };
            if value_at(peak) <= best.2 {
                push(piece.beta(hi), piece.beta(lo), flat(&best));
                continue;
            }
            // Utility decreases in gamma on [peak, hi]; find where it drops to
            // the running max.
            let cross = if value_at(hi) >= best.2 {
                hi
            } else {
                let (mut a, mut b) = (peak, hi);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if value_at(m) > best.2 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                a
            };
            push(piece.beta(hi), piece.beta(cross), flat(&best));
            push(
                piece.beta(cross),
                piece.beta(peak),
                Shape::Rising {
                    piece: piece.clone(),
                    kappa_i,
                },
            );
            best = (
                Contract {
                    gamma: peak,
                    beta: piece.beta(peak),
                },
                piece.owner,
                value_at(peak),
            );
            push(piece.beta(peak), piece.beta(lo), flat(&best));
        }

        let base = match segments.first() {
            Some(s) => s.eval(beta_min),
            None => best,
        };
        UtilityCurve {
            beta_min,
            beta_cap,
            base,
            top: best,
            segments,
        }
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn beta_cap(&self) -> f64 {
        self.beta_cap
    }

    pub fn segments(&self) -> &[UtilitySegment] {
        &self.segments
    }

    /// Utility for caps at or above `beta_cap`: the unconstrained optimum.
    pub fn top_value(&self) -> f64 {
        self.top.2
    }

    /// Utility at `beta_min`, the tightest admissible cap.
    pub fn base_value(&self) -> f64 {
        self.base.2
    }

    /// `U(beta_bar)` in `O(log n)`.
    pub fn utility_at(&self, beta_bar: f64) -> Result<f64> {
        self.contract_at(beta_bar).map(|(_, _, u)| u)
    }

    /// Contract attaining `U(beta_bar)`, the action it implements and its
    /// utility. The contract's inspection probability never exceeds the cap.
    pub fn contract_at(&self, beta_bar: f64) -> Result<(Contract, usize, f64)> {
        if beta_bar.is_nan() || beta_bar < self.beta_min - CAP_TOL {
            return Err(Error::BelowMinimumInspection {
                beta_bar,
                beta_min: self.beta_min,
            });
        }
        if beta_bar >= self.beta_cap || self.segments.is_empty() {
            return Ok(self.top);
        }
        if beta_bar <= self.beta_min {
            return Ok(self.base);
        }
        let idx = self
            .segments
            .partition_point(|s| s.hi < beta_bar)
            .min(self.segments.len() - 1);
        Ok(self.segments[idx].eval(beta_bar))
    }
}

/// `beta(1)` for the agent: the least inspection implementing a safe action.
pub fn min_beta(agent: &AgentSpec) -> Result<f64> {
    Ok(BetaCurve::new(agent)?.beta_min())
}
