//! Bracketing θ̃ between the roots of ψ_κ and ξ_κ, the derivative ψ′ and
//! the growth constants it implies.

use serde::Serialize;

use super::psi::{root_psi_kappa, root_xi_kappa, PsiConfig, PsiTable, RootReport, XiRootReport};
use super::theta_star;
use crate::error::{Error, Result};
use crate::model::{GapPenalty, ScoringModel};

/// [θ_κ, θ̂_κ] for one κ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaBracket {
    pub kappa: usize,
    pub lower: f64,
    pub upper: f64,
    /// Allowed violation of lower <= upper from root and estimator error.
    pub slack: f64,
}

impl ThetaBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn is_ordered(&self) -> bool {
        self.lower <= self.upper + self.slack
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaRoots {
    pub bracket: ThetaBracket,
    pub psi_root: RootReport,
    pub xi_root: XiRootReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub theta_star: f64,
    pub per_kappa: Vec<KappaRoots>,
    /// Bracket at the largest κ.
    pub bracket: ThetaBracket,
    pub estimate: f64,
}

/// Roots of ψ_κ and ξ_κ for κ = 1..=κ_max. ξ_κ is maximized over
/// κ <= r <= κ + r_extra.
pub fn theta_tilde(
    model: &ScoringModel,
    g: &GapPenalty,
    kappa_max: usize,
    r_extra: usize,
    base: &PsiConfig,
    tol: f64,
) -> Result<(BracketReport, PsiTable)> {
    if kappa_max == 0 {
        return Err(Error::InvalidArgument("kappa_max must be >= 1".into()));
    }
    let ts = theta_star(model)?;
    let mut per_kappa = Vec::with_capacity(kappa_max);
    let mut last_table = None;
    for kappa in 1..=kappa_max {
        let cfg = PsiConfig { kappa, max_auto_offset: PsiConfig::new(kappa).max_auto_offset, ..base.clone() };
        let (psi_root, table) = root_psi_kappa(model, g, &cfg, tol)?;
        let (xi_root, _) = root_xi_kappa(model, g, kappa, kappa + r_extra, &cfg, tol)?;
        let xi_err = 3.0 * xi_root.at_root.estimate.mc_se / xi_root.at_root.d1.max(1e-12);
        let slack = 2.0 * tol + psi_root.theta_uncertainty() + xi_err;
        let bracket = ThetaBracket { kappa, lower: psi_root.theta, upper: xi_root.theta, slack };
        per_kappa.push(KappaRoots { bracket, psi_root, xi_root });
        last_table = Some(table);
    }
    let bracket = per_kappa.last().expect("kappa_max >= 1").bracket.clone();
    let estimate = bracket.midpoint();
    Ok((BracketReport { theta_star: ts, per_kappa, bracket, estimate }, last_table.expect("kappa_max >= 1")))
}

// ---------------------------------------------------------------------------
// ψ′
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiPrime {
    pub kappa: usize,
    /// Point of the difference quotients.
    pub theta: f64,
    pub h: f64,
    /// [ψ_κ(θ+h) - ψ_κ(θ-h)] / (2hκ).
    pub central: f64,
    /// Same with step h/2.
    pub central_half: f64,
    /// Extrapolated error of `central_half`.
    pub central_err: f64,
    /// ψ_κ′(θ)/κ from the tilted law of the table.
    pub analytic: f64,
    /// Estimate from the shift of the root under K -> K ± λ.
    pub shift_route: f64,
    pub shift_lambda: f64,
    pub shift_err: f64,
    pub consistent: bool,
    pub warnings: Vec<String>,
}

impl PsiPrime {
    /// Preferred value.
    pub fn value(&self) -> f64 {
        self.central_half
    }
}

/// Secant through the roots θ^(±λ) of ψ_κ for scores K ± λ, which satisfy
/// ψ_κ(θ^(λ)) = -λκθ^(λ).
fn shift_estimate(model: &ScoringModel, g: &GapPenalty, table: &PsiTable, cfg: &PsiConfig, lambda: f64, tol: f64) -> Result<f64> {
    let mut roots = [0.0; 2];
    for (slot, sign) in roots.iter_mut().zip([1.0, -1.0]) {
        let shifted = model.shifted(sign * lambda)?;
        let cfg = PsiConfig {
            max_offset: Some(table.max_offset()),
            theta_ref: Some(table.theta_ref()),
            ..cfg.clone()
        };
        let (r, _) = root_psi_kappa(&shifted, g, &cfg, tol)?;
        *slot = r.theta;
    }
    let (plus, minus) = (roots[0], roots[1]);
    Ok(lambda * (plus + minus) / (minus - plus))
}

/// ψ′ near θ̃ by central differences at `theta`, cross-checked against the
/// root-shift route. `h` is both the θ step and the score shift λ.
pub fn psi_prime(
    model: &ScoringModel,
    g: &GapPenalty,
    table: &PsiTable,
    cfg: &PsiConfig,
    bracket: &ThetaBracket,
    h: f64,
) -> Result<PsiPrime> {
    let kappa = table.kappa() as f64;
    let theta = bracket.midpoint();
    let diff = |step: f64| -> Result<f64> {
        Ok((table.eval(theta + step)?.value - table.eval(theta - step)?.value) / (2.0 * step * kappa))
    };
    let central = diff(h)?;
    let central_half = diff(0.5 * h)?;
    let central_err = (central - central_half).abs() / 3.0;
    let at = table.eval_full(theta)?;
    let analytic = at.d1 / kappa;

    let tol = 1e-13;
    let shift_full = shift_estimate(model, g, table, cfg, h, tol)?;
    let shift_half = shift_estimate(model, g, table, cfg, 0.5 * h, tol)?;
    let shift_err = (shift_full - shift_half).abs() / 3.0;

    // The shift route measures the slope at the root of ψ_κ, the lower end.
    let offset = at.d2 / kappa * (theta - bracket.lower).abs();
    let noise = (at.estimate.mc_se + at.estimate.trunc_bound) / (h * kappa);
    let allowed = 4.0 * (central_err + shift_err) + offset + noise + 1e-6 * central_half.abs();
    let consistent = (central_half - shift_half).abs() <= allowed;
    let mut warnings = Vec::new();
    if bracket.width() > h {
        warnings.push(format!("bracket width {:.3e} exceeds step {h:.3e}", bracket.width()));
    }
    if !consistent {
        warnings.push(format!(
            "Inconsistent: difference route {central_half:.6} vs shift route {shift_half:.6} (allowed {allowed:.2e})"
        ));
    }
    Ok(PsiPrime {
        kappa: table.kappa(),
        theta,
        h,
        central,
        central_half,
        central_err,
        analytic,
        shift_route: shift_half,
        shift_lambda: 0.5 * h,
        shift_err,
        consistent,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Growth constants
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthConstants {
    /// Interval for lim H / log n.
    pub score_rate: (f64, f64),
    /// Interval for lim |z*| / log n.
    pub match_rate: (f64, f64),
}

pub fn growth_constants(bracket: &ThetaBracket, psi_prime: f64) -> Result<GrowthConstants> {
    if !(psi_prime > 0.0) {
        return Err(Error::Invariant(format!("psi' = {psi_prime} must be positive at the root")));
    }
    let (lo, hi) = (bracket.lower.min(bracket.upper), bracket.lower.max(bracket.upper));
    if !(lo > 0.0) {
        return Err(Error::Invariant(format!("bracket [{lo}, {hi}] must be positive")));
    }
    Ok(GrowthConstants {
        score_rate: (2.0 / hi, 2.0 / lo),
        match_rate: (2.0 / (hi * psi_prime), 2.0 / (lo * psi_prime)),
    })
}
