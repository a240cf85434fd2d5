//! Gap penalties g(k) = Δ + γ(k) and the series Σ exp(-θ γ(k)).

use serde::Serialize;
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};

/// Tail behaviour assumed for γ beyond a finite table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum AsymptoticClass {
    Affine { delta: f64 },
    PowerLaw { delta: f64, alpha: f64 },
    Logarithmic { delta: f64 },
    Unknown,
}

impl AsymptoticClass {
    fn family(self) -> Option<GapFamily> {
        match self {
            AsymptoticClass::Affine { delta } => Some(GapFamily::Affine { delta }),
            AsymptoticClass::PowerLaw { delta, alpha } => Some(GapFamily::PowerLaw { delta, alpha }),
            AsymptoticClass::Logarithmic { delta } => Some(GapFamily::Logarithmic { delta }),
            AsymptoticClass::Unknown => None,
        }
    }
}

/// Shape of γ.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GapFamily {
    /// γ(k) = δ (k - 1)
    Affine { delta: f64 },
    /// γ(k) = δ (k - 1)^α
    PowerLaw { delta: f64, alpha: f64 },
    /// γ(k) = δ ln k
    Logarithmic { delta: f64 },
    /// γ(1..=len) listed explicitly.
    Table { gamma: Vec<f64>, class: AsymptoticClass },
    /// g(k) = +∞ for every k >= 1.
    Infinite,
}

impl GapFamily {
    fn closed_gamma(&self, k: usize) -> f64 {
        let km1 = (k - 1) as f64;
        match *self {
            GapFamily::Affine { delta } => delta * km1,
            GapFamily::PowerLaw { delta, alpha } => {
                if k == 1 {
                    0.0
                } else {
                    delta * km1.powf(alpha)
                }
            }
            GapFamily::Logarithmic { delta } => delta * (k as f64).ln(),
            GapFamily::Infinite => f64::INFINITY,
            GapFamily::Table { .. } => unreachable!("table has no closed form"),
        }
    }
}

/// A validated gap penalty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapPenalty {
    /// Gap initiation cost Δ (0 for the infinite penalty).
    pub delta: f64,
    pub family: GapFamily,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidGap(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_class(class: AsymptoticClass) -> Result<()> {
    match class {
        AsymptoticClass::Affine { delta } | AsymptoticClass::Logarithmic { delta } => {
            check_positive("class delta", delta)
        }
        AsymptoticClass::PowerLaw { delta, alpha } => {
            check_positive("class delta", delta)?;
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidGap(format!("class alpha {alpha} not in (0, 1)")));
            }
            Ok(())
        }
        AsymptoticClass::Unknown => Ok(()),
    }
}

impl GapPenalty {
    fn with_family(delta: f64, family: GapFamily) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::InvalidGap(format!("initiation cost {delta} must be >= 0")));
        }
        Ok(Self { delta, family })
    }

    pub fn affine(delta_init: f64, delta: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        Self::with_family(delta_init, GapFamily::Affine { delta })
    }

    pub fn power_law(delta_init: f64, delta: f64, alpha: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidGap(format!("alpha {alpha} not in (0, 1)")));
        }
        Self::with_family(delta_init, GapFamily::PowerLaw { delta, alpha })
    }

    pub fn logarithmic(delta_init: f64, delta: f64) -> Result<Self> {
        check_positive("delta", delta)?;
        Self::with_family(delta_init, GapFamily::Logarithmic { delta })
    }

    /// `gamma[k - 1]` holds γ(k). γ(1) must be 0, the table nondecreasing and
    /// concave in k.
    pub fn table(delta_init: f64, gamma: Vec<f64>, class: AsymptoticClass) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidGap("empty gap table".into()));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGap("gap table entries must be finite".into()));
        }
        if gamma[0] != 0.0 {
            return Err(Error::InvalidGap(format!("gamma(1) must be 0, got {}", gamma[0])));
        }
        for (i, w) in gamma.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::InvalidGap(format!("gamma decreases at k = {}", i + 2)));
            }
        }
        for (i, w) in gamma.windows(3).enumerate() {
            if w[2] - w[1] > w[1] - w[0] {
                return Err(Error::InvalidGap(format!("gamma not concave at k = {}", i + 2)));
            }
        }
        check_class(class)?;
        Self::with_family(delta_init, GapFamily::Table { gamma, class })
    }

    pub fn infinite() -> Self {
        Self { delta: 0.0, family: GapFamily::Infinite }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.family, GapFamily::Infinite)
    }

    /// γ(k) for k >= 1.
    pub fn gamma(&self, k: usize) -> Result<f64> {
        assert!(k >= 1, "gamma is defined for k >= 1");
        match &self.family {
            GapFamily::Table { gamma, .. } => gamma
                .get(k - 1)
                .copied()
                .ok_or(Error::TableExhausted { len: gamma.len(), k }),
            f => Ok(f.closed_gamma(k)),
        }
    }

    /// g(k): 0 at k = 0, Δ + γ(k) otherwise.
    pub fn eval(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(0.0);
        }
        if self.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(self.delta + self.gamma(k)?)
    }

    /// g(0), …, g(max_k).
    pub fn tabulate(&self, max_k: usize) -> Result<Vec<f64>> {
        (0..=max_k).map(|k| self.eval(k)).collect()
    }

    /// Largest k with a defined value (`usize::MAX` for closed families).
    pub fn max_len(&self) -> usize {
        match &self.family {
            GapFamily::Table { gamma, .. } => gamma.len(),
            _ => usize::MAX,
        }
    }

    /// Whether the concavity inequality also holds at k = 1, i.e. γ(2) <= Δ.
    /// Not required for validity.
    pub fn is_concave_at_origin(&self) -> bool {
        match self.gamma(2) {
            Ok(v) => self.is_infinite() || v <= self.delta,
            Err(_) => true,
        }
    }

    /// Closed family governing the tail of γ.
    pub fn asymptotic_family(&self) -> Result<GapFamily> {
        match &self.family {
            GapFamily::Table { class, .. } => class.family().ok_or(Error::UnknownAsymptoticClass),
            f => Ok(f.clone()),
        }
    }
}

/// Convenience wrapper for [`GapPenalty::eval`].
pub fn eval_gap(g: &GapPenalty, k: usize) -> Result<f64> {
    g.eval(k)
}

/// Partial sum Σ_{k=1}^{K} exp(-θ γ(k)) with an upper bound on the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSum {
    pub partial: f64,
    /// Upper bound on Σ_{k>K} exp(-θ γ(k)); +∞ when the series diverges.
    pub remainder: f64,
    /// True when `remainder` is the exact value of the tail.
    pub exact_remainder: bool,
}

impl TailSum {
    pub fn converges(&self) -> bool {
        self.remainder.is_finite()
    }

    /// Upper bound on the full series.
    pub fn total_upper(&self) -> f64 {
        self.partial + self.remainder
    }
}

/// Upper bound on Σ_{k>K} exp(-θ γ(k)) for a closed family, with the
/// exactness flag.
fn closed_remainder(family: &GapFamily, theta: f64, k_cut: usize) -> (f64, bool) {
    match *family {
        GapFamily::Affine { delta } => {
            let r = (-theta * delta).exp();
            ((-theta * delta * k_cut as f64).exp() / (1.0 - r), true)
        }
        GapFamily::PowerLaw { delta, alpha } => {
            // Terms decrease in k, so the tail after K is below ∫_K^∞ of the
            // same function: (1/α) c^(-1/α) Γ(1/α, c (K-1)^α).
            if k_cut == 0 {
                let (rest, _) = closed_remainder(family, theta, 1);
                return (1.0 + rest, false);
            }
            let c = theta * delta;
            let s = 1.0 / alpha;
            let x = c * ((k_cut - 1) as f64).powf(alpha);
            let upper_gamma = if x == 0.0 { gamma(s) } else { gamma_ur(s, x) * gamma(s) };
            (s * c.powf(-s) * upper_gamma, false)
        }
        GapFamily::Logarithmic { delta } => {
            let p = theta * delta;
            if p <= 1.0 {
                return (f64::INFINITY, false);
            }
            if k_cut == 0 {
                (1.0 + 1.0 / (p - 1.0), false)
            } else {
                ((k_cut as f64).powf(1.0 - p) / (p - 1.0), false)
            }
        }
        GapFamily::Infinite => (0.0, true),
        GapFamily::Table { .. } => unreachable!("tables are resolved by the caller"),
    }
}

/// Σ_{k=1}^{K} exp(-θ γ(k)) plus a certified upper bound on the remainder.
/// Divergence is reported through an infinite remainder. Tables beyond their
/// length use the declared class as a lower bound on γ.
pub fn gamma_tail_sum(g: &GapPenalty, theta: f64, k_cut: usize) -> Result<TailSum> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    match &g.family {
        GapFamily::Infinite => Ok(TailSum { partial: 0.0, remainder: 0.0, exact_remainder: true }),
        GapFamily::Table { gamma, class } => {
            let family = class.family().ok_or(Error::UnknownAsymptoticClass)?;
            let len = gamma.len();
            let term = |v: f64| (-theta * v).exp();
            let partial: f64 = gamma.iter().take(k_cut.min(len)).map(|&v| term(v)).sum();
            let mut remainder = 0.0;
            if k_cut < len {
                remainder += gamma[k_cut..].iter().map(|&v| term(v)).sum::<f64>();
            }
            let beyond = k_cut.max(len);
            if k_cut > len {
                let extra: f64 = (len + 1..=k_cut).map(|k| term(family.closed_gamma(k))).sum();
                let (rest, _) = closed_remainder(&family, theta, beyond);
                return Ok(TailSum { partial: partial + extra, remainder: rest, exact_remainder: false });
            }
            let (rest, _) = closed_remainder(&family, theta, beyond);
            Ok(TailSum { partial, remainder: remainder + rest, exact_remainder: false })
        }
        family => {
            let partial: f64 = (1..=k_cut).map(|k| (-theta * family.closed_gamma(k)).exp()).sum();
            let (remainder, exact_remainder) = closed_remainder(family, theta, k_cut);
            Ok(TailSum { partial, remainder, exact_remainder })
        }
    }
}
