//! Tilted segment-pair sampler and the three-step change-of-measure scheme.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng as _;
use serde::Serialize;

use crate::asymptotics::h1_closed_form;
use crate::error::{Error, Result};
use crate::model::{gamma_tail_sum, letter_pair_mgf, GapPenalty, ScoringModel};
use crate::rng::{LetterSampler, Rng};

/// Largest allowed ν-mass beyond the length cap.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Default upper limit on segment lengths.
pub const DEFAULT_LENGTH_CAP: usize = 1 << 20;

/// Segment-pair law ν ∝ exp(θ G_1(v, w)) μ(v) μ(w) for one-match segments.
///
/// Under ν the lengths r and s are independent with P(r) ∝ exp(-θ g(r-1)),
/// the first letter pair is tilted by exp(θ K) and the remaining letters are
/// i.i.d. μ.
#[derive(Debug, Clone)]
pub struct TiltedSegmentSampler {
    theta: f64,
    kappa: usize,
    model: ScoringModel,
    gap: GapPenalty,
    cap: usize,
    gap_values: Vec<f64>,
    length_probs: Vec<f64>,
    length_index: WeightedIndex<f64>,
    pair_probs: Vec<f64>,
    pair_index: WeightedIndex<f64>,
    letters: LetterSampler,
    log_mgf: f64,
    log_h1: f64,
    sampled_mass: f64,
    residual: f64,
}

/// Builds ν at θ. Lengths are truncated at the smallest power of two whose
/// excluded ν-mass is certified below [`RESIDUAL_TOL`], which must not exceed
/// `cap`.
pub fn build_tilted_sampler(
    theta: f64,
    kappa: usize,
    model: &ScoringModel,
    g: &GapPenalty,
    cap: usize,
) -> Result<TiltedSegmentSampler> {
    if kappa != 1 {
        return Err(Error::InvalidArgument(format!("tilted sampling is implemented for kappa = 1 only, got {kappa}")));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    if cap == 0 {
        return Err(Error::InvalidArgument("length cap must be >= 1".into()));
    }
    let cap = cap.min(g.max_len().saturating_add(1));
    let scale = (-theta * g.delta).exp();

    let (len, residual) = if g.is_infinite() {
        (1, 0.0)
    } else {
        let mut r = 1usize;
        loop {
            let tail = gamma_tail_sum(g, theta, r - 1)?;
            if !tail.converges() {
                return Err(Error::Divergent { theta });
            }
            let z_r = 1.0 + scale * tail.partial;
            let rem = scale * tail.remainder;
            let residual = 1.0 - (z_r / (z_r + rem)).powi(2);
            if residual < RESIDUAL_TOL {
                break (r, residual.max(0.0));
            }
            if r >= cap {
                return Err(Error::SamplerResidual { residual, cap });
            }
            r = (2 * r).min(cap);
        }
    };

    let gap_values: Vec<f64> = (0..len).map(|k| g.eval(k)).collect::<Result<_>>()?;
    let weights: Vec<f64> = gap_values.iter().map(|&v| (-theta * v).exp()).collect();
    let z_r: f64 = weights.iter().sum();
    let length_probs: Vec<f64> = weights.iter().map(|w| w / z_r).collect();
    let length_index = WeightedIndex::new(&length_probs)
        .map_err(|e| Error::Invariant(format!("length law: {e}")))?;

    let alpha = model.size();
    let probs = model.dist().probs();
    let mgf = letter_pair_mgf(model, theta);
    let mut pair_probs = Vec::with_capacity(alpha * alpha);
    for a in 0..alpha {
        for b in 0..alpha {
            let k = model.scores().get(a as u8, b as u8);
            pair_probs.push((theta * k).exp() * probs[a] * probs[b] / mgf);
        }
    }
    let pair_index =
        WeightedIndex::new(&pair_probs).map_err(|e| Error::Invariant(format!("pair law: {e}")))?;

    let log_h1 = h1_closed_form(theta, g, model)?.value;
    // ν-mass of the retained length grid, summed from its unnormalized weights.
    let sampled_mass = (2.0 * z_r.ln() + mgf.ln() - log_h1).exp();

    Ok(TiltedSegmentSampler {
        theta,
        kappa,
        model: model.clone(),
        gap: g.clone(),
        cap: len,
        gap_values,
        length_probs,
        length_index,
        pair_probs,
        pair_index,
        letters: LetterSampler::new(model.dist()),
        log_mgf: mgf.ln(),
        log_h1,
        sampled_mass,
        residual,
    })
}

impl TiltedSegmentSampler {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn model(&self) -> &ScoringModel {
        &self.model
    }

    pub fn gap(&self) -> &GapPenalty {
        &self.gap
    }

    /// Largest segment length that can be drawn.
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// P(r) for 1 <= r <= cap under the truncated length law.
    pub fn length_prob(&self, r: usize) -> f64 {
        if r == 0 || r > self.cap {
            0.0
        } else {
            self.length_probs[r - 1]
        }
    }

    /// Tilted law of the first letter pair.
    pub fn pair_prob(&self, a: u8, b: u8) -> f64 {
        self.pair_probs[a as usize * self.model.size() + b as usize]
    }

    /// log h_1(θ); zero when θ is the root of ψ_1.
    pub fn log_normalizer(&self) -> f64 {
        self.log_h1
    }

    /// ν-mass of segment pairs with both lengths <= cap.
    pub fn sampled_mass(&self) -> f64 {
        self.sampled_mass
    }

    /// Certified upper bound on the ν-mass beyond the cap.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn total_mass(&self) -> f64 {
        self.sampled_mass + self.residual
    }

    /// G_1 of a segment pair with lengths (r, s) and first letters (a, b).
    pub fn segment_score(&self, r: usize, s: usize, a: u8, b: u8) -> f64 {
        (self.model.scores().get(a, b) - self.gap_values[r - 1]) - self.gap_values[s - 1]
    }

    /// log dP′/dQ of one written segment: untilted over tilted first pair.
    pub fn segment_log_weight(&self, a: u8, b: u8) -> f64 {
        self.log_mgf - self.theta * self.model.scores().get(a, b)
    }

    pub(crate) fn draw_length(&self, rng: &mut Rng) -> usize {
        self.length_index.sample(rng) + 1
    }

    pub(crate) fn draw_pair(&self, rng: &mut Rng) -> (u8, u8) {
        let idx = self.pair_index.sample(rng);
        let alpha = self.model.size();
        ((idx / alpha) as u8, (idx % alpha) as u8)
    }
}

// ---------------------------------------------------------------------------
// Simulation under Q
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ThresholdReached,
    Overflow,
}

/// One written segment pair. Positions are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub start: (usize, usize),
    pub r: usize,
    pub s: usize,
    pub first_pair: (u8, u8),
    pub score: f64,
    /// log ν(v, w) / μ(v)μ(w).
    pub log_ratio: f64,
    /// log dP′/dQ contribution.
    pub log_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPath {
    pub start: (usize, usize),
    pub segments: Vec<Segment>,
    /// Σ of segment scores.
    pub total: f64,
    /// c - (κ-1) K_max.
    pub threshold: f64,
    pub termination: Termination,
    /// Σ of segment log ratios, accumulated in order.
    pub log_ratio: f64,
    pub log_weight: f64,
}

/// Runs the three-step scheme: uniform start cell, tilted segments written
/// until the partial sum reaches c - (κ-1)K_max or a segment overflows, then
/// i.i.d. fill of the remaining positions.
pub fn simulate_q(
    m: usize,
    n: usize,
    c: f64,
    sampler: &TiltedSegmentSampler,
    rng: &mut Rng,
) -> Result<(Vec<u8>, Vec<u8>, SimPath)> {
    if m == 0 || n == 0 {
        return Err(Error::EmptySequence);
    }
    if c.is_nan() {
        return Err(Error::InvalidArgument("threshold c is NaN".into()));
    }
    let threshold = c - (sampler.kappa as f64 - 1.0) * sampler.model.k_max();
    let mut x = vec![0u8; m];
    let mut y = vec![0u8; n];

    let i0 = rng.gen_range(1..=m);
    let j0 = rng.gen_range(1..=n);
    sampler.letters.fill(rng, &mut x[..i0 - 1]);
    sampler.letters.fill(rng, &mut y[..j0 - 1]);

    let (mut i, mut j) = (i0, j0);
    let mut total = 0.0;
    let mut log_ratio = 0.0;
    let mut log_weight = 0.0;
    let mut segments = Vec::new();
    let termination = loop {
        let r = sampler.draw_length(rng);
        let s = sampler.draw_length(rng);
        if i + r - 1 > m || j + s - 1 > n {
            break Termination::Overflow;
        }
        let (a, b) = sampler.draw_pair(rng);
        x[i - 1] = a;
        y[j - 1] = b;
        sampler.letters.fill(rng, &mut x[i..i + r - 1]);
        sampler.letters.fill(rng, &mut y[j..j + s - 1]);
        let score = sampler.segment_score(r, s, a, b);
        let seg_ratio = sampler.theta * score - sampler.log_h1;
        let seg_weight = sampler.segment_log_weight(a, b);
        segments.push(Segment {
            start: (i, j),
            r,
            s,
            first_pair: (a, b),
            score,
            log_ratio: seg_ratio,
            log_weight: seg_weight,
        });
        total += score;
        log_ratio += seg_ratio;
        log_weight += seg_weight;
        i += r;
        j += s;
        if total >= threshold {
            break Termination::ThresholdReached;
        }
    };
    sampler.letters.fill(rng, &mut x[i - 1..]);
    sampler.letters.fill(rng, &mut y[j - 1..]);
    Ok((x, y, SimPath { start: (i0, j0), segments, total, threshold, termination, log_ratio, log_weight }))
}
