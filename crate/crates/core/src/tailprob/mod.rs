//! Tail probabilities P{H >= c}: the analytic bound at a root of ψ_κ, direct
//! Monte Carlo, and importance sampling through the tilted segment scheme.

mod sampler;

use rayon::prelude::*;
use serde::Serialize;

use crate::align::{alignment_score, fixed_match_score, local_align_ws, DpWorkspace, GapTable};
use crate::asymptotics::{psi_kappa, PsiConfig, RootReport};
use crate::error::{Error, Result};
use crate::model::{Alignment, GapPenalty, ScoringModel};
use crate::rng::{self, LetterSampler};

pub use sampler::{
    build_tilted_sampler, simulate_q, Segment, SimPath, Termination, TiltedSegmentSampler, DEFAULT_LENGTH_CAP,
    RESIDUAL_TOL,
};

/// Hits needed before a Monte Carlo estimate counts as resolved.
pub const RESOLVABLE_HITS: usize = 50;

// ---------------------------------------------------------------------------
// Analytic bound
// ---------------------------------------------------------------------------

/// A θ at which ψ_κ has been checked to vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifiedRoot {
    pub theta: f64,
    pub kappa: usize,
    pub residual: f64,
}

impl VerifiedRoot {
    /// Accepts θ when |ψ_κ(θ)| <= tol.
    pub fn check(theta: f64, kappa: usize, residual: f64, tol: f64) -> Result<Self> {
        if !(theta > 0.0) || kappa == 0 {
            return Err(Error::InvalidArgument(format!("theta = {theta}, kappa = {kappa}")));
        }
        if !(residual.abs() <= tol) {
            return Err(Error::UnverifiedRoot { theta, residual: residual.abs(), tol });
        }
        Ok(Self { theta, kappa, residual: residual.abs() })
    }

    /// Uses the value of ψ_κ recorded at the root, net of its error terms.
    pub fn from_report(report: &RootReport, tol: f64) -> Result<Self> {
        let e = &report.at_root;
        let slack = e.trunc_bound + 3.0 * e.mc_se;
        let residual = (e.value.abs() - slack).max(0.0);
        Self::check(report.theta, report.kappa, residual, tol)
    }

    /// Evaluates ψ_κ at θ afresh.
    pub fn evaluate(model: &ScoringModel, g: &GapPenalty, theta: f64, cfg: &PsiConfig, tol: f64) -> Result<Self> {
        let e = psi_kappa(model, g, theta, cfg)?;
        let residual = (e.value.abs() - e.trunc_bound - 3.0 * e.mc_se).max(0.0);
        Self::check(theta, cfg.kappa, residual, tol)
    }
}

/// m n exp(θ(κ-1)K_max) exp(-θc), unclamped and without checking θ.
pub fn pvalue_bound_raw(c: f64, m: usize, n: usize, theta: f64, kappa: usize, k_max: f64) -> f64 {
    let log = (m as f64).ln() + (n as f64).ln() + theta * (kappa as f64 - 1.0) * k_max - theta * c;
    log.exp()
}

/// Upper bound on P{H(x_m, y_n) >= c}, clamped to 1.
pub fn pvalue_bound(c: f64, m: usize, n: usize, root: &VerifiedRoot, k_max: f64) -> f64 {
    pvalue_bound_raw(c, m, n, root.theta, root.kappa, k_max).min(1.0)
}

// ---------------------------------------------------------------------------
// Estimates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    DirectMc,
    Importance,
    BoundOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    /// Estimate of P{H >= c}. Importance sampling is unbiased but not clamped,
    /// so single estimates may exceed 1.
    pub p_hat: f64,
    pub se: f64,
    #[serde(rename = "bound")]
    pub analytic_bound: Option<f64>,
    pub method: TailMethod,
    pub c: f64,
    pub m: usize,
    pub n: usize,
    pub theta: Option<f64>,
    pub kappa: Option<usize>,
    #[serde(rename = "N")]
    pub n_samples: usize,
    pub seed: u64,
    pub hits: usize,
}

impl TailEstimate {
    pub fn bound_only(c: f64, m: usize, n: usize, root: &VerifiedRoot, k_max: f64) -> Self {
        Self {
            p_hat: f64::NAN,
            se: 0.0,
            analytic_bound: Some(pvalue_bound(c, m, n, root, k_max)),
            method: TailMethod::BoundOnly,
            c,
            m,
            n,
            theta: Some(root.theta),
            kappa: Some(root.kappa),
            n_samples: 0,
            seed: 0,
            hits: 0,
        }
    }

    pub fn with_bound(mut self, root: &VerifiedRoot, k_max: f64) -> Self {
        self.analytic_bound = Some(pvalue_bound(self.c, self.m, self.n, root, k_max));
        self.theta = Some(root.theta);
        self.kappa = Some(root.kappa);
        self
    }

    /// p̂ - 3 se <= bound, vacuous without a bound.
    pub fn bound_holds(&self) -> bool {
        self.analytic_bound.map_or(true, |b| self.p_hat - 3.0 * self.se <= b)
    }

    pub fn is_resolved(&self) -> bool {
        self.hits >= RESOLVABLE_HITS
    }

    /// -log(p̂)/c, the empirical decay rate.
    pub fn empirical_rate(&self) -> Option<f64> {
        (self.p_hat > 0.0 && self.c > 0.0).then(|| -self.p_hat.ln() / self.c)
    }
}

// ---------------------------------------------------------------------------
// Direct Monte Carlo
// ---------------------------------------------------------------------------

/// Local scores H of `samples` independent μ⊗μ pairs. Replicate i uses its
/// own stream, so the result does not depend on the thread count.
pub fn direct_mc_scores(
    m: usize,
    n: usize,
    model: &ScoringModel,
    g: &GapPenalty,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::EmptySequence);
    }
    let gaps = GapTable::new(g, m.max(n))?;
    let letters = LetterSampler::new(model.dist());
    (0..samples as u64)
        .into_par_iter()
        .map_init(DpWorkspace::new, |ws, i| {
            let mut rng = rng::stream(seed, rng::tag::DIRECT_MC, i);
            let x = letters.word(&mut rng, m);
            let y = letters.word(&mut rng, n);
            Ok(local_align_ws(ws, &x, &y, model.scores(), &gaps)?.score)
        })
        .collect()
}

/// Binomial estimate of P{H >= c} from precomputed scores.
pub fn tail_from_scores(scores: &[f64], c: f64, m: usize, n: usize, seed: u64) -> Result<TailEstimate> {
    if scores.is_empty() {
        return Err(Error::InvalidArgument("at least one sample required".into()));
    }
    let hits = scores.iter().filter(|&&h| h >= c).count();
    let total = scores.len() as f64;
    let p = hits as f64 / total;
    Ok(TailEstimate {
        p_hat: p,
        se: (p * (1.0 - p) / total).sqrt(),
        analytic_bound: None,
        method: TailMethod::DirectMc,
        c,
        m,
        n,
        theta: None,
        kappa: None,
        n_samples: scores.len(),
        seed,
        hits,
    })
}

pub fn direct_mc_pvalue(
    c: f64,
    m: usize,
    n: usize,
    model: &ScoringModel,
    g: &GapPenalty,
    samples: usize,
    seed: u64,
) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample required".into()));
    }
    let scores = direct_mc_scores(m, n, model, g, samples, seed)?;
    tail_from_scores(&scores, c, m, n, seed)
}

// ---------------------------------------------------------------------------
// Importance sampling
// ---------------------------------------------------------------------------

/// Unbiased estimate of P{H >= c} from paths simulated under Q, each
/// weighted by dP′/dQ. P′ keeps the segment structure of Q but draws every
/// letter from μ, so its sequence marginal is exactly μ⊗μ.
pub fn is_pvalue(
    c: f64,
    m: usize,
    n: usize,
    sampler: &TiltedSegmentSampler,
    samples: usize,
    seed: u64,
) -> Result<TailEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample required".into()));
    }
    if m == 0 || n == 0 {
        return Err(Error::EmptySequence);
    }
    let gaps = GapTable::new(sampler.gap(), m.max(n))?;
    let model = sampler.model();
    let log_weights: Vec<Option<f64>> = (0..samples as u64)
        .into_par_iter()
        .map_init(DpWorkspace::new, |ws, i| {
            let mut rng = rng::stream(seed, rng::tag::IMPORTANCE, i);
            let (x, y, path) = simulate_q(m, n, c, sampler, &mut rng)?;
            let h = local_align_ws(ws, &x, &y, model.scores(), &gaps)?.score;
            Ok((h >= c).then_some(path.log_weight))
        })
        .collect::<Result<_>>()?;

    let hits: Vec<f64> = log_weights.iter().flatten().copied().collect();
    let total = samples as f64;
    let (p_hat, se) = if hits.is_empty() {
        (0.0, 0.0)
    } else {
        let top = hits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top > 700.0 {
            return Err(Error::Invariant(format!("importance weight exp({top}) overflows")));
        }
        let s1: f64 = hits.iter().map(|l| (l - top).exp()).sum();
        let s2: f64 = hits.iter().map(|l| (2.0 * (l - top)).exp()).sum();
        let mean = top.exp() * s1 / total;
        let second = (2.0 * top).exp() * s2 / total;
        let var = if samples > 1 { ((second - mean * mean) * total / (total - 1.0)).max(0.0) } else { 0.0 };
        (mean, (var / total).sqrt())
    };
    let theta = sampler.theta();
    let analytic_bound = (sampler.log_normalizer().abs() <= 1e-9)
        .then(|| pvalue_bound_raw(c, m, n, theta, sampler.kappa(), model.k_max()).min(1.0));
    Ok(TailEstimate {
        p_hat,
        se,
        analytic_bound,
        method: TailMethod::Importance,
        c,
        m,
        n,
        theta: Some(theta),
        kappa: Some(sampler.kappa()),
        n_samples: samples,
        seed,
        hits: hits.len(),
    })
}

// ---------------------------------------------------------------------------
// Likelihood-ratio chain
// ---------------------------------------------------------------------------

/// Quantities along the inequality chain for one simulated path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrCheck {
    /// Σ log ν/μμ accumulated during simulation.
    pub log_ratio: f64,
    /// θ Σ G - λ log h_1, recomputed from the sequences.
    pub log_ratio_recomputed: f64,
    pub sum_g: f64,
    /// Score of the planted alignment through the segment starts.
    pub planted_score: f64,
    pub local_score: f64,
    pub threshold: f64,
    /// Σ G_κ over the segments of the optimal alignment, and the score of
    /// that alignment trimmed to a multiple of κ matches.
    pub optimal_decomposition: Option<(f64, f64)>,
}

const CHAIN_TOL: f64 = 1e-9;

fn chain_violation(what: &str, lhs: f64, rhs: f64) -> Error {
    Error::Invariant(format!("likelihood-ratio chain broken: {what}: {lhs} < {rhs}"))
}

/// Checks every link of the chain for a path that reached its threshold:
/// additive log ratio, recorded scores equal to G_κ of the written
/// segments, Σ G >= c - (κ-1)K_max, S_planted >= Σ G and H >= S_planted.
/// The decomposition of the optimal alignment into κ-match segments is
/// checked as well: Σ G_κ(segments) >= S_ζ.
pub fn verify_lr_inequality(
    path: &SimPath,
    x: &[u8],
    y: &[u8],
    sampler: &TiltedSegmentSampler,
) -> Result<LrCheck> {
    if path.termination != Termination::ThresholdReached {
        return Err(Error::InvalidArgument("path did not reach its threshold".into()));
    }
    let model = sampler.model();
    let g = sampler.gap();
    let kappa = sampler.kappa();
    let tol = |v: f64| CHAIN_TOL * (1.0 + v.abs());

    let mut sum_g = 0.0;
    for seg in &path.segments {
        let (i, j) = seg.start;
        let v = &x[i - 1..i - 1 + seg.r];
        let w = &y[j - 1..j - 1 + seg.s];
        let gk = fixed_match_score(kappa, v, w, model.scores(), g)?;
        if (gk - seg.score).abs() > tol(gk) {
            return Err(Error::Invariant(format!("segment at {:?}: recorded {} vs G = {gk}", seg.start, seg.score)));
        }
        sum_g += gk;
    }
    let lambda = path.segments.len() as f64;
    let recomputed = sampler.theta() * sum_g - lambda * sampler.log_normalizer();
    if (recomputed - path.log_ratio).abs() > tol(recomputed) {
        return Err(Error::Invariant(format!("log ratio {} does not add up to {recomputed}", path.log_ratio)));
    }
    if sum_g < path.threshold - tol(path.threshold) {
        return Err(chain_violation("sum G vs threshold", sum_g, path.threshold));
    }

    let planted = Alignment::new(path.segments.iter().map(|s| s.start).collect())?;
    let planted_score = alignment_score(&planted, x, y, model.scores(), g)?;
    if planted_score < sum_g - tol(sum_g) {
        return Err(chain_violation("planted score vs sum G", planted_score, sum_g));
    }
    let gaps = GapTable::new(g, x.len().max(y.len()))?;
    let local = local_align_ws(&mut DpWorkspace::new(), x, y, model.scores(), &gaps)?;
    if local.score < planted_score - tol(planted_score) {
        return Err(chain_violation("H vs planted score", local.score, planted_score));
    }

    let optimal_decomposition = decomposition_bound(&local.optimal, kappa, x, y, model, g)?;
    if let Some((sum, s_zeta)) = optimal_decomposition {
        if sum < s_zeta - tol(s_zeta) {
            return Err(chain_violation("sum G over optimal segments vs trimmed score", sum, s_zeta));
        }
    }
    Ok(LrCheck {
        log_ratio: path.log_ratio,
        log_ratio_recomputed: recomputed,
        sum_g,
        planted_score,
        local_score: local.score,
        threshold: path.threshold,
        optimal_decomposition,
    })
}

/// Splits z, trimmed to λκ matches, into λ segments starting at matches
/// 1, κ+1, 2κ+1, ... and returns (Σ G_κ(segment), S_ζ). `None` when z has
/// fewer than κ matches.
pub fn decomposition_bound(
    z: &Alignment,
    kappa: usize,
    x: &[u8],
    y: &[u8],
    model: &ScoringModel,
    g: &GapPenalty,
) -> Result<Option<(f64, f64)>> {
    if kappa == 0 {
        return Err(Error::InvalidArgument("kappa must be >= 1".into()));
    }
    let lambda = z.len() / kappa;
    if lambda == 0 {
        return Ok(None);
    }
    let zeta = &z.pairs()[..lambda * kappa];
    let s_zeta = alignment_score(&Alignment::new(zeta.to_vec())?, x, y, model.scores(), g)?;
    let mut sum = 0.0;
    for eta in 0..lambda {
        let (i0, j0) = zeta[eta * kappa];
        let (i1, j1) = if eta + 1 < lambda {
            let (a, b) = zeta[(eta + 1) * kappa];
            (a - 1, b - 1)
        } else {
            zeta[lambda * kappa - 1]
        };
        sum += fixed_match_score(kappa, &x[i0 - 1..i1], &y[j0 - 1..j1], model.scores(), g)?;
    }
    Ok(Some((sum, s_zeta)))
}
