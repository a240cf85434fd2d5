//! Constants and log moment generating functions of the alignment theory.
//!
//! * [`theta_star`]: positive root of E exp(θK) = 1.
//! * [`summation_test`]: classification of a gap family into the logarithmic
//!   or linear growth domain.
//! * [`h1_closed_form`]: the one-match generating function in closed form.
//! * [`psi`]: anchored generating functions ψ_κ, ξ_κ and their roots.
//! * [`bracket`]: the bracket on θ̃, the derivative ψ′ and growth constants.

pub mod bracket;
pub mod psi;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    gamma_tail_sum, letter_pair_mgf, letter_pair_mgf_derivative, GapFamily, GapPenalty, ScoringModel, TailSum,
};
use crate::roots::{golden_min, increasing_root};

pub use bracket::{growth_constants, psi_prime, theta_tilde, BracketReport, GrowthConstants, KappaRoots, PsiPrime, ThetaBracket};
pub use psi::{
    psi_kappa, root_psi_kappa, root_xi_kappa, xi_kappa, Method, PsiConfig, PsiTable, RootReport, XiEstimate,
    XiRootReport, XiTable,
};

/// Default tolerance on roots, in θ.
pub const ROOT_TOL: f64 = 1e-6;

/// Result of any ψ_κ / ξ_κ evaluation. `value` is within `trunc_bound` of
/// the untruncated quantity (up to Monte Carlo error `mc_se`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiEstimate {
    pub value: f64,
    pub trunc_bound: f64,
    pub mc_se: f64,
    pub kappa: usize,
    pub theta: f64,
    pub method: String,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// θ*
// ---------------------------------------------------------------------------

/// Unique θ > 0 with E exp(θ K(x1, y1)) = 1.
pub fn theta_star(model: &ScoringModel) -> Result<f64> {
    if model.expected_score() >= 0.0 || model.k_max() <= 0.0 {
        return Err(Error::InvalidModel("E[K] < 0 < K_max required".into()));
    }
    // Minimizer of the mgf: root of its increasing derivative.
    let d = |t: f64| letter_pair_mgf_derivative(model, t);
    let mut hi = 1.0;
    while d(hi) < 0.0 {
        hi *= 2.0;
    }
    let (mut lo, mut up) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + up);
        if d(mid) < 0.0 {
            lo = mid;
        } else {
            up = mid;
        }
        if up - lo < 1e-15 {
            break;
        }
    }
    let mut top = up.max(1e-3) * 2.0;
    while letter_pair_mgf(model, top) < 1.0 {
        top *= 2.0;
    }
    let f = |t: f64| Ok((letter_pair_mgf(model, t) - 1.0, letter_pair_mgf_derivative(model, t)));
    let root = increasing_root(f, lo, top, 0.0, 1e-15)?;
    if (letter_pair_mgf(model, root) - 1.0).abs() > 1e-12 {
        return Err(Error::Invariant(format!("theta* iteration stalled at {root}")));
    }
    Ok(root)
}

// ---------------------------------------------------------------------------
// Summation test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    LogarithmicForLargeDelta,
    LinearForAllDelta,
    Indeterminate,
}

/// Classification with the evidence used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainVerdict {
    pub verdict: Verdict,
    pub theta_star: f64,
    pub inv_theta_star: f64,
    /// Exponent at which the series Σ exp(-θ̂ γ(k)) was examined.
    pub theta_hat: Option<f64>,
    /// Partial sum and tail bound at `theta_hat`.
    pub tail: Option<TailSum>,
    pub reason: String,
    /// Whether the given Δ already makes the one-match generating function
    /// dip below 1, i.e. a root θ_1 exists.
    pub delta_certifies: bool,
}

/// Growth-domain classification of a gap penalty for a model.
pub fn summation_test(g: &GapPenalty, model: &ScoringModel) -> Result<DomainVerdict> {
    summation_test_with_margin(g, model, ROOT_TOL)
}

pub fn summation_test_with_margin(g: &GapPenalty, model: &ScoringModel, margin: f64) -> Result<DomainVerdict> {
    let ts = theta_star(model)?;
    let family = g.asymptotic_family()?;
    let (verdict, theta_hat, reason) = match family {
        GapFamily::Infinite => (
            Verdict::LogarithmicForLargeDelta,
            None,
            "gapless scoring grows logarithmically".to_string(),
        ),
        GapFamily::Affine { .. } | GapFamily::PowerLaw { .. } => (
            Verdict::LogarithmicForLargeDelta,
            Some(0.5 * ts),
            "series converges for every positive exponent, in particular below theta*".to_string(),
        ),
        GapFamily::Logarithmic { delta } => {
            let inv = 1.0 / ts;
            if delta > inv + margin {
                let th = 0.5 * (1.0 / delta + ts);
                (
                    Verdict::LogarithmicForLargeDelta,
                    Some(th),
                    format!("delta = {delta} > 1/theta* = {inv}: series converges at theta_hat in (1/delta, theta*)"),
                )
            } else if delta < inv - margin {
                let th = 0.5 * (1.0 / delta + ts);
                (
                    Verdict::LinearForAllDelta,
                    Some(th),
                    format!("delta = {delta} < 1/theta* = {inv}: series diverges at theta_hat in (theta*, 1/delta)"),
                )
            } else {
                (
                    Verdict::Indeterminate,
                    None,
                    format!("|delta - 1/theta*| = {} within margin {margin}", (delta - inv).abs()),
                )
            }
        }
        GapFamily::Table { .. } => unreachable!("asymptotic_family resolves tables"),
    };
    let tail = match theta_hat {
        Some(th) => Some(gamma_tail_sum(g, th, 1000)?),
        None => None,
    };
    let delta_certifies = match theta_one_closed_form(g, model) {
        Ok(_) => true,
        Err(Error::NoRoot(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(DomainVerdict { verdict, theta_star: ts, inv_theta_star: 1.0 / ts, theta_hat, tail, reason, delta_certifies })
}

// ---------------------------------------------------------------------------
// Closed-form one-match generating function
// ---------------------------------------------------------------------------

/// Σ_{k>=1} exp(-θ γ(k)) as (midpoint, half-width); +∞ when divergent.
fn gamma_series(g: &GapPenalty, theta: f64) -> Result<(f64, f64)> {
    let mut k = 64usize;
    loop {
        let t = gamma_tail_sum(g, theta, k)?;
        if !t.converges() {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        if t.exact_remainder {
            return Ok((t.partial + t.remainder, 0.0));
        }
        if t.remainder <= 1e-13 * t.partial || k >= 1 << 22 || k >= g.max_len() {
            return Ok((t.partial + 0.5 * t.remainder, 0.5 * t.remainder));
        }
        k *= 8;
    }
}

/// ψ_1(θ) = log of [1 + exp(-θΔ) Σ exp(-θγ(k))]² E exp(θK). A divergent
/// series yields `value = +∞` rather than an error.
pub fn h1_closed_form(theta: f64, g: &GapPenalty, model: &ScoringModel) -> Result<PsiEstimate> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let (series, half) = if g.is_infinite() { (0.0, 0.0) } else { gamma_series(g, theta)? };
    let scale = (-theta * g.delta).exp();
    let z = 1.0 + scale * series;
    let log_mgf = letter_pair_mgf(model, theta).ln();
    let (value, trunc_bound) = if z.is_finite() {
        let value = 2.0 * z.ln() + log_mgf;
        let spread = scale * half;
        let trunc = if spread > 0.0 { 2.0 * ((z + spread).ln() - z.ln()).max(z.ln() - (z - spread).ln()) } else { 0.0 };
        (value, trunc)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(PsiEstimate { value, trunc_bound, mc_se: 0.0, kappa: 1, theta, method: "closed_form".into(), seed: 0 })
}

/// Largest positive root of the closed-form ψ_1, if any.
pub fn theta_one_closed_form(g: &GapPenalty, model: &ScoringModel) -> Result<f64> {
    let ts = theta_star(model)?;
    if g.is_infinite() {
        return Ok(ts);
    }
    let f = |t: f64| -> Result<f64> { Ok(h1_closed_form(t, g, model)?.value) };
    let (tmin, fmin) = golden_min(f, 1e-4 * ts, ts, 1e-10)?;
    if !(fmin < 0.0) {
        return Err(Error::NoRoot(format!("one-match log mgf has minimum {fmin} >= 0 on (0, theta*]")));
    }
    let fd = |t: f64| -> Result<(f64, f64)> {
        let h = 1e-7 * t;
        let v = h1_closed_form(t, g, model)?.value;
        let d = (h1_closed_form(t + h, g, model)?.value - h1_closed_form(t - h, g, model)?.value) / (2.0 * h);
        Ok((v, d))
    };
    increasing_root(fd, tmin, ts, 1e-14, 1e-14)
}
