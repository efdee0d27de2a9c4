use crate::envelope::Action;
use crate::error::{Error, Result};
use crate::single_agent::AgentSpec;

/// Cut points closer than this are merged.
const MERGE_TOL: f64 = 1e-12;

/// A piece of `beta(gamma)` on which both the dominant line at `gamma` (the
/// owner) and the line at the deviation share
/// `gamma~ = u_h^{-1}(u_h(gamma) - kappa_s)` (the shadow) are fixed.
///
/// On an unclamped piece
/// `beta(gamma) = 1 - (R_o gamma - c_o - kappa_s + c_s) / (R_s gamma (1 - alpha))`;
/// on a clamped piece `beta` is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPiece {
    pub lo: f64,
    pub hi: f64,
    /// Action index dominating at `gamma`.
    pub owner: usize,
    /// Action index dominating at the deviation share `gamma~`.
    pub shadow: usize,
    pub clamped: bool,
    owner_line: Action,
    shadow_line: Action,
    kappa_s: f64,
    alpha: f64,
}

impl BetaPiece {
    pub fn owner_line(&self) -> Action {
        self.owner_line
    }

    pub fn shadow_line(&self) -> Action {
        self.shadow_line
    }

    /// `c_o - c_s + kappa_s`, the numerator of `f'(gamma)`.
    pub(crate) fn offset(&self) -> f64 {
        self.owner_line.cost - self.shadow_line.cost + self.kappa_s
    }

    /// Largest share at which an unsafe deviation is still no better than
    /// complying: `u_h^{-1}(u_h(gamma) - kappa_s)`.
    pub fn shadow_gamma(&self, gamma: f64) -> f64 {
        (self.owner_line.line(gamma) - self.kappa_s + self.shadow_line.cost)
            / self.shadow_line.reward
    }

    /// `f(gamma) = gamma~ / (gamma (1 - alpha))`, so that `beta = max(1 - f, 0)`.
    pub fn deterrence_ratio(&self, gamma: f64) -> f64 {
        self.shadow_gamma(gamma) / (gamma * (1.0 - self.alpha))
    }

    pub fn beta(&self, gamma: f64) -> f64 {
        if self.clamped {
            0.0
        } else {
            (1.0 - self.deterrence_ratio(gamma)).clamp(0.0, 1.0)
        }
    }

    /// `d beta / d gamma = -(c_o - c_s + kappa_s) / (R_s gamma^2 (1 - alpha))`.
    pub fn beta_slope(&self, gamma: f64) -> f64 {
        if self.clamped {
            0.0
        } else {
            -self.offset() / (self.shadow_line.reward * gamma * gamma * (1.0 - self.alpha))
        }
    }

    /// Inverse of `beta` on this piece: the share at which the minimum
    /// deterring inspection equals `beta`.
    pub fn gamma_for_beta(&self, beta: f64) -> f64 {
        let denom =
            self.owner_line.reward - (1.0 - beta) * (1.0 - self.alpha) * self.shadow_line.reward;
        (self.offset() / denom).clamp(self.lo, self.hi)
    }

    /// Stationary point of `(1 - gamma) R_o - beta(gamma) kappa_i`, which is
    /// concave on the piece. `None` on clamped pieces.
    pub fn stationary_gamma(&self, kappa_i: f64) -> Option<f64> {
        if self.clamped {
            return None;
        }
        let num = kappa_i * self.offset();
        let den = self.owner_line.reward * self.shadow_line.reward * (1.0 - self.alpha);
        (den > 0.0).then(|| (num / den).sqrt())
    }

    /// Principal utility `(1 - gamma) R_o - beta(gamma) kappa_i` with the
    /// minimum deterring inspection.
    pub fn principal_value(&self, gamma: f64, kappa_i: f64) -> f64 {
        (1.0 - gamma) * self.owner_line.reward - self.beta(gamma) * kappa_i
    }
}

/// The minimum inspection probability `beta(gamma)` that makes a safe action
/// implementable at payment share `gamma`, on `[gamma_ir, 1]`.
///
/// `beta` is nonincreasing, convex between consecutive envelope breakpoints
/// and continuous. Its pieces split `[gamma_ir, 1]` at every envelope
/// breakpoint, at every share where the deviation share crosses an envelope
/// breakpoint, and where `beta` reaches zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaCurve {
    gamma_ir: f64,
    pieces: Vec<BetaPiece>,
    segment_bounds: Vec<f64>,
}

impl BetaCurve {
    pub fn new(agent: &AgentSpec) -> Result<Self> {
        agent.check_safety_feasible()?;
        let env = agent.envelope();
        let kappa_s = agent.kappa_s();
        let alpha = agent.alpha();
        let gamma_ir = env.invert(kappa_s)?;

        // (position, is an envelope breakpoint)
        let mut cuts: Vec<(f64, bool)> = Vec::new();
        for &b in env.breakpoints() {
            if b > gamma_ir && b < 1.0 {
                cuts.push((b, true));
            }
            let g = env.invert(env.eval(b) + kappa_s)?;
            if g > gamma_ir && g < 1.0 {
                cuts.push((g, false));
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut bounds = vec![gamma_ir];
        let mut segment_bounds = vec![gamma_ir];
        for (g, from_envelope) in cuts {
            if from_envelope {
                segment_bounds.push(g);
            }
            let last = bounds.len() - 1;
            if g - bounds[last] <= MERGE_TOL {
                // Prefer the exact envelope breakpoint over a recomputed one.
                if from_envelope && last > 0 {
                    bounds[last] = g;
                }
                continue;
            }
            bounds.push(g);
        }
        if 1.0 - bounds[bounds.len() - 1] <= MERGE_TOL && bounds.len() > 1 {
            bounds.pop();
        }
        bounds.push(1.0);
        segment_bounds.push(1.0);

        let mut pieces = Vec::with_capacity(bounds.len());
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let owner_seg = env.segment_at(mid);
            let shadow_seg = env.segment_of_value(env.eval(mid) - kappa_s);
            let mut piece = BetaPiece {
                lo,
                hi,
                owner: env.owner(owner_seg),
                shadow: env.owner(shadow_seg),
                clamped: false,
                owner_line: env.line(owner_seg),
                shadow_line: env.line(shadow_seg),
                kappa_s,
                alpha,
            };
            // beta reaches zero where gamma~ = gamma (1 - alpha).
            let slope = piece.owner_line.reward - (1.0 - alpha) * piece.shadow_line.reward;
            let threshold = if slope > 0.0 {
                piece.offset() / slope
            } else if piece.offset() <= 0.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            };
            if threshold > lo + MERGE_TOL && threshold < hi - MERGE_TOL {
                pieces.push(BetaPiece {
                    hi: threshold,
                    ..piece.clone()
                });
                piece.lo = threshold;
                piece.clamped = true;
            } else {
                piece.clamped = threshold <= mid;
            }
            pieces.push(piece);
        }

        Ok(BetaCurve {
            gamma_ir,
            pieces,
            segment_bounds,
        })
    }

    /// Participation threshold `gamma_1 = u_h^{-1}(kappa_s)`.
    pub fn gamma_ir(&self) -> f64 {
        self.gamma_ir
    }

    pub fn pieces(&self) -> &[BetaPiece] {
        &self.pieces
    }

    /// `gamma_ir`, the envelope breakpoints inside `(gamma_ir, 1)`, and 1.
    /// `beta` is convex between consecutive entries.
    pub fn segment_bounds(&self) -> &[f64] {
        &self.segment_bounds
    }

    /// Index of the piece containing `gamma`, assumed inside the domain. At a
    /// boundary the left piece is returned.
    pub fn piece_index(&self, gamma: f64) -> usize {
        self.pieces
            .partition_point(|p| p.hi < gamma)
            .min(self.pieces.len() - 1)
    }

    pub fn beta_at(&self, gamma: f64) -> Result<f64> {
        if gamma < self.gamma_ir - MERGE_TOL {
            return Err(Error::BelowIrThreshold {
                gamma,
                gamma_ir: self.gamma_ir,
            });
        }
        if gamma.is_nan() || gamma > 1.0 + MERGE_TOL {
            return Err(Error::InvalidParameter(format!(
                "gamma = {gamma} exceeds 1"
            )));
        }
        let gamma = gamma.clamp(self.gamma_ir, 1.0);
        Ok(self.pieces[self.piece_index(gamma)].beta(gamma))
    }

    /// `beta(1)`: the least inspection that implements any safe action.
    pub fn beta_min(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].beta(1.0)
    }

    /// `beta(gamma_ir)`: inspection at the cheapest participating share.
    pub fn beta_cap(&self) -> f64 {
        self.pieces[0].beta(self.gamma_ir)
    }
}
