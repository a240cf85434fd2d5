//! Anchored generating functions ψ_κ(θ) = log Σ_{m,n>=κ} E exp(θ G_κ(x_m, y_n))
//! and ξ_κ(θ) = max_r log E exp(θ G_κ(x_r, y_r)).
//!
//! The law of G_κ on each (m, n) cell is computed once, by exact enumeration
//! when the cell is small enough and by Monte Carlo otherwise, and stored as
//! a list of atoms. Evaluating at any θ is then a weighted sum of exponentials,
//! so root finding reuses the same samples at every θ.
//!
//! Cells outside the offset box [0, L]² and cells skipped for having a
//! negligible envelope are covered by the bound
//! G_κ(x_m, y_n) <= κ K_max - e(m - κ) - e(n - κ), where e = g when g is
//! subadditive (concave down to k = 0) and e(k) = g(⌈k/κ⌉) otherwise.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{theta_star, PsiEstimate};
use crate::align::{fixed_match_score_ws, DpWorkspace, GapTable};
use crate::error::{Error, Result};
use crate::model::{gamma_tail_sum, letter_pair_mgf, GapPenalty, ScoringModel};
use crate::rng::{self, LetterSampler};
use crate::roots::{golden_min, increasing_root};

/// Hard cap on sequence pairs enumerated per cell.
pub const MAX_EXACT_PAIRS: u64 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Every retained cell enumerated exactly; fails if a cell is too large.
    Exact,
    /// Every cell sampled.
    MonteCarlo,
    /// Exact where the budget allows, sampled elsewhere.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiConfig {
    pub kappa: usize,
    pub method: Method,
    /// Offset box size L (cells m, n in [κ, κ + L]); chosen from `rel_tol`
    /// when `None`.
    pub max_offset: Option<usize>,
    /// Largest automatic L.
    pub max_auto_offset: usize,
    /// Sequence pairs per cell allowed for exact enumeration.
    pub exact_budget: u64,
    /// Total Monte Carlo samples, spread over sampled cells by envelope weight.
    pub mc_samples: usize,
    pub min_cell_samples: usize,
    pub seed: u64,
    /// θ at which truncation and sampling are planned; θ* when `None`.
    pub theta_ref: Option<f64>,
    /// Target truncation relative to the lower bound mgf(θ)^κ on h_κ.
    pub rel_tol: f64,
    /// Skip cells whose envelope share falls below this relative level.
    pub skip_cells: bool,
}

impl PsiConfig {
    pub fn new(kappa: usize) -> Self {
        Self {
            kappa,
            method: Method::Auto,
            max_offset: None,
            max_auto_offset: if kappa == 1 { 400 } else { 12 },
            exact_budget: 1 << 18,
            mc_samples: 100_000,
            min_cell_samples: 1000,
            seed: 0,
            theta_ref: None,
            rel_tol: 1e-10,
            skip_cells: true,
        }
    }
}

// ---------------------------------------------------------------------------
// Envelope
// ---------------------------------------------------------------------------

/// Certified lower bound on the total gap cost of one side of an anchored
/// alignment with κ pairs leaving k letters unaligned.
#[derive(Debug, Clone)]
struct Envelope {
    gap: GapPenalty,
    kappa: usize,
    subadditive: bool,
    k_max: f64,
}

impl Envelope {
    fn new(gap: &GapPenalty, kappa: usize, k_max: f64) -> Self {
        Self { gap: gap.clone(), kappa, subadditive: gap.is_concave_at_origin(), k_max }
    }

    fn gap_at(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let k = if self.subadditive { k } else { k.div_ceil(self.kappa) };
        self.gap.eval(k).expect("envelope within gap table")
    }

    /// exp(θ(κ K_max - e(a) - e(b))).
    fn cell_weight(&self, theta: f64, a: usize, b: usize) -> f64 {
        (theta * (self.kappa as f64 * self.k_max - self.gap_at(a) - self.gap_at(b))).exp()
    }

    /// Σ_{k>L} exp(-θ e(k)).
    fn tail(&self, theta: f64, l: usize) -> Result<f64> {
        if self.gap.is_infinite() {
            return Ok(0.0);
        }
        let scale = (-theta * self.gap.delta).exp();
        let (cut, factor) = if self.subadditive { (l, 1.0) } else { ((l + 1).div_ceil(self.kappa) - 1, self.kappa as f64) };
        let t = gamma_tail_sum(&self.gap, theta, cut)?;
        if !t.converges() {
            return Err(Error::Divergent { theta });
        }
        Ok(factor * scale * t.remainder)
    }

    /// Bound on the part of h_κ(θ) outside the box [0, L]².
    fn outside_box(&self, theta: f64, l: usize) -> Result<f64> {
        let s: f64 = (0..=l).map(|k| (-theta * self.gap_at(k)).exp()).sum();
        let t = self.tail(theta, l)?;
        Ok((theta * self.kappa as f64 * self.k_max).exp() * (2.0 * s * t + t * t))
    }
}

// ---------------------------------------------------------------------------
// Cell laws
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Cell {
    mult: f64,
    /// (value, probability), sorted by value.
    atoms: Vec<(f64, f64)>,
    /// Sample count for sampled cells.
    samples: Option<usize>,
}

/// Sums of p e^{θv}, p v e^{θv}, p v² e^{θv} and p e^{2θv}.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    m0: f64,
    m1: f64,
    m2: f64,
    sq: f64,
}

impl Cell {
    fn moments(&self, theta: f64) -> Moments {
        let mut out = Moments::default();
        for &(v, p) in &self.atoms {
            let e = (theta * v).exp();
            out.m0 += p * e;
            out.m1 += p * v * e;
            out.m2 += p * v * v * e;
            out.sq += p * e * e;
        }
        out
    }
}

fn finish_atoms(acc: HashMap<u64, f64>) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = acc.into_iter().map(|(bits, p)| (f64::from_bits(bits), p)).collect();
    atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
    atoms
}

/// Number of letters whose values affect G_κ on an (m, n) cell.
fn free_letters(kappa: usize, m: usize, n: usize) -> usize {
    if kappa == 1 {
        2
    } else {
        m + n
    }
}

fn pair_count(alpha: usize, letters: usize) -> Option<u64> {
    (alpha as u64).checked_pow(letters as u32)
}

/// Exact law of G_κ(x_m, y_n) by enumeration. For κ = 1 only x1, y1 vary;
/// the remaining letters are irrelevant and fixed.
fn exact_atoms(kappa: usize, m: usize, n: usize, model: &ScoringModel, gaps: &GapTable) -> Result<Vec<(f64, f64)>> {
    let alpha = model.size();
    let probs = model.dist().probs();
    let k = model.scores();
    let mut x = vec![0u8; m];
    let mut y = vec![0u8; n];
    let mut ws = DpWorkspace::new();
    let mut acc: HashMap<u64, f64> = HashMap::new();
    let free = free_letters(kappa, m, n);
    // Odometer over the free letters: first x1.., then y1...
    let slots: Vec<(bool, usize)> = if kappa == 1 {
        vec![(true, 0), (false, 0)]
    } else {
        (0..m).map(|i| (true, i)).chain((0..n).map(|j| (false, j))).collect()
    };
    debug_assert_eq!(slots.len(), free);
    let mut digits = vec![0usize; free];
    loop {
        for (d, &(is_x, ix)) in digits.iter().zip(&slots) {
            if is_x {
                x[ix] = *d as u8;
            } else {
                y[ix] = *d as u8;
            }
        }
        let p: f64 = digits.iter().map(|&d| probs[d]).product();
        let v = fixed_match_score_ws(&mut ws, kappa, &x, &y, k, gaps)?;
        if v != f64::NEG_INFINITY {
            *acc.entry(v.to_bits()).or_insert(0.0) += p;
        }
        let mut pos = 0;
        loop {
            if pos == free {
                return Ok(finish_atoms(acc));
            }
            digits[pos] += 1;
            if digits[pos] < alpha {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

fn sampled_atoms(
    kappa: usize,
    m: usize,
    n: usize,
    model: &ScoringModel,
    gaps: &GapTable,
    samples: usize,
    mut rng: rng::Rng,
) -> Result<Vec<(f64, f64)>> {
    let sampler = LetterSampler::new(model.dist());
    let mut x = vec![0u8; m];
    let mut y = vec![0u8; n];
    let mut ws = DpWorkspace::new();
    let mut acc: HashMap<u64, f64> = HashMap::new();
    let w = 1.0 / samples as f64;
    for _ in 0..samples {
        sampler.fill(&mut rng, &mut x);
        sampler.fill(&mut rng, &mut y);
        let v = fixed_match_score_ws(&mut ws, kappa, &x, &y, model.scores(), gaps)?;
        if v != f64::NEG_INFINITY {
            *acc.entry(v.to_bits()).or_insert(0.0) += w;
        }
    }
    Ok(finish_atoms(acc))
}

// ---------------------------------------------------------------------------
// ψ_κ table
// ---------------------------------------------------------------------------

/// Per-cell laws of G_κ over an offset box, evaluable at any θ.
#[derive(Debug, Clone)]
pub struct PsiTable {
    kappa: usize,
    max_offset: usize,
    theta_ref: f64,
    seed: u64,
    cells: Vec<Cell>,
    skipped: Vec<(usize, usize, f64)>,
    envelope: Envelope,
}

/// ψ_κ and its first two derivatives at one θ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiEval {
    pub estimate: PsiEstimate,
    pub d1: f64,
    pub d2: f64,
}

fn choose_offset(env: &Envelope, theta: f64, kappa: usize, model: &ScoringModel, cfg: &PsiConfig, cap: usize) -> Result<usize> {
    let floor = letter_pair_mgf(model, theta).powi(kappa as i32);
    let target = cfg.rel_tol * floor;
    for l in 0..=cap {
        if env.outside_box(theta, l)? <= target {
            return Ok(l);
        }
    }
    Ok(cap)
}

impl PsiTable {
    pub fn build(model: &ScoringModel, g: &GapPenalty, cfg: &PsiConfig) -> Result<Self> {
        let kappa = cfg.kappa;
        if kappa == 0 {
            return Err(Error::InvalidArgument("kappa must be >= 1".into()));
        }
        let theta_ref = match cfg.theta_ref {
            Some(t) => t,
            None => theta_star(model)?,
        };
        let envelope = Envelope::new(g, kappa, model.k_max());
        // Table gaps cannot be evaluated past their length.
        let table_cap = g.max_len().saturating_sub(kappa);
        let l = match cfg.max_offset {
            Some(l) => l,
            None => choose_offset(&envelope, theta_ref, kappa, model, cfg, cfg.max_auto_offset.min(table_cap))?,
        };
        let gaps = GapTable::new(g, kappa + l)?;
        let alpha = model.size();
        let budget = cfg.exact_budget.min(MAX_EXACT_PAIRS);

        // Plan cells.
        let floor = letter_pair_mgf(model, theta_ref).powi(kappa as i32);
        let n_cells = ((l + 1) * (l + 2) / 2) as f64;
        let skip_below = if cfg.skip_cells { cfg.rel_tol * floor / n_cells } else { 0.0 };
        let mut plan = Vec::new();
        let mut skipped = Vec::new();
        for a in 0..=l {
            for b in a..=l {
                let mult = if a == b { 1.0 } else { 2.0 };
                let w = mult * envelope.cell_weight(theta_ref, a, b);
                if w == 0.0 || w < skip_below {
                    skipped.push((a, b, mult));
                    continue;
                }
                let (m, n) = (kappa + a, kappa + b);
                let pairs = pair_count(alpha, free_letters(kappa, m, n));
                let exact = match cfg.method {
                    Method::MonteCarlo => false,
                    _ => pairs.is_some_and(|p| p <= budget),
                };
                if !exact && cfg.method == Method::Exact {
                    return Err(Error::SizeCap(format!(
                        "cell ({m}, {n}) needs {alpha}^{} pairs, budget {budget}",
                        free_letters(kappa, m, n)
                    )));
                }
                plan.push((a, b, mult, exact, w));
            }
        }
        let sampled_weight: f64 = plan.iter().filter(|c| !c.3).map(|c| c.4).sum();
        let cells = plan
            .par_iter()
            .map(|&(a, b, mult, exact, w)| -> Result<Cell> {
                let (m, n) = (kappa + a, kappa + b);
                if exact {
                    let atoms = exact_atoms(kappa, m, n, model, &gaps)?;
                    Ok(Cell { mult, atoms, samples: None })
                } else {
                    let share = (cfg.mc_samples as f64 * w / sampled_weight).ceil() as usize;
                    let samples = share.max(cfg.min_cell_samples).max(2);
                    let rng = rng::stream(cfg.seed, rng::tag::PSI, (kappa as u64) << 32 | (a as u64) << 16 | b as u64);
                    let atoms = sampled_atoms(kappa, m, n, model, &gaps, samples, rng)?;
                    Ok(Cell { mult, atoms, samples: Some(samples) })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kappa, max_offset: l, theta_ref, seed: cfg.seed, cells, skipped, envelope })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn max_offset(&self) -> usize {
        self.max_offset
    }

    pub fn theta_ref(&self) -> f64 {
        self.theta_ref
    }

    pub fn is_exact(&self) -> bool {
        self.cells.iter().all(|c| c.samples.is_none())
    }

    fn method_tag(&self) -> &'static str {
        let sampled = self.cells.iter().filter(|c| c.samples.is_some()).count();
        if sampled == 0 {
            "exact"
        } else if sampled == self.cells.len() {
            "monte_carlo"
        } else {
            "mixed"
        }
    }

    /// Σ over retained cells of E exp(θ G_κ), before any truncation term.
    pub fn table_sum(&self, theta: f64) -> f64 {
        self.cells.iter().map(|c| c.mult * c.moments(theta).m0).sum()
    }

    /// Upper bound on h_κ(θ) minus the table sum.
    pub fn truncation(&self, theta: f64) -> Result<f64> {
        let outside = self.envelope.outside_box(theta, self.max_offset)?;
        let skipped: f64 = self.skipped.iter().map(|&(a, b, m)| m * self.envelope.cell_weight(theta, a, b)).sum();
        Ok(outside + skipped)
    }

    pub fn eval_full(&self, theta: f64) -> Result<PsiEval> {
        if !(theta > 0.0) {
            return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
        }
        let mut h = 0.0;
        let mut h1 = 0.0;
        let mut h2 = 0.0;
        let mut var = 0.0;
        for c in &self.cells {
            let mo = c.moments(theta);
            h += c.mult * mo.m0;
            h1 += c.mult * mo.m1;
            h2 += c.mult * mo.m2;
            if let Some(n) = c.samples {
                let v = (mo.sq - mo.m0 * mo.m0).max(0.0) / n as f64;
                var += c.mult * c.mult * v;
            }
        }
        let trunc = self.truncation(theta)?;
        let d1 = h1 / h;
        let d2 = h2 / h - d1 * d1;
        let estimate = PsiEstimate {
            value: h.ln(),
            trunc_bound: (trunc / h).ln_1p(),
            mc_se: var.sqrt() / h,
            kappa: self.kappa,
            theta,
            method: self.method_tag().into(),
            seed: self.seed,
        };
        Ok(PsiEval { estimate, d1, d2 })
    }

    pub fn eval(&self, theta: f64) -> Result<PsiEstimate> {
        Ok(self.eval_full(theta)?.estimate)
    }
}

/// ψ_κ(θ) with truncation planned at θ itself.
pub fn psi_kappa(model: &ScoringModel, g: &GapPenalty, theta: f64, cfg: &PsiConfig) -> Result<PsiEstimate> {
    let mut cfg = cfg.clone();
    cfg.theta_ref.get_or_insert(theta);
    PsiTable::build(model, g, &cfg)?.eval(theta)
}

// ---------------------------------------------------------------------------
// Roots of ψ_κ
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootReport {
    pub kappa: usize,
    pub theta: f64,
    /// ψ_κ at the root with its error terms.
    pub at_root: PsiEstimate,
    /// ψ_κ′ at the root.
    pub slope: f64,
    /// Minimizer of ψ_κ on (0, θ*].
    pub theta_min: f64,
    pub max_offset: usize,
}

impl RootReport {
    /// Uncertainty in θ implied by the truncation and sampling error at the root.
    pub fn theta_uncertainty(&self) -> f64 {
        (self.at_root.trunc_bound + 3.0 * self.at_root.mc_se) / self.slope.max(1e-12)
    }
}

/// Value that the minimizer search treats as +∞ when the series diverges.
fn or_infinite(r: Result<f64>) -> Result<f64> {
    match r {
        Err(Error::Divergent { .. }) => Ok(f64::INFINITY),
        other => other,
    }
}

/// Largest root of a convex f on (0, θ*] with f(θ*) >= 0 (up to rounding).
fn largest_root<F>(f: F, ts: f64, tol: f64, what: &str) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let value = |t: f64| or_infinite(f(t).map(|v| v.0));
    let (tmin, fmin) = golden_min(value, 1e-3 * ts, ts, 1e-9 * ts)?;
    if !(fmin < 0.0) {
        return Err(Error::NoRoot(format!("{what} has minimum {fmin:.6e} >= 0 on (0, theta*]")));
    }
    let mut hi = ts;
    let mut step = 1e-12 * ts;
    while f(hi)?.0 < 0.0 {
        hi += step;
        step *= 4.0;
        if step > ts {
            return Err(Error::Invariant(format!("{what} negative at theta* and beyond")));
        }
    }
    let root = increasing_root(&f, tmin, hi, tol, 1e-15)?;
    Ok((root, tmin))
}

/// θ_κ: the largest positive root of ψ_κ. Rebuilds the table with a lower
/// planning point when the root falls far below it.
pub fn root_psi_kappa(model: &ScoringModel, g: &GapPenalty, cfg: &PsiConfig, tol: f64) -> Result<(RootReport, PsiTable)> {
    let ts = theta_star(model)?;
    if !g.is_infinite() && !gamma_tail_sum(g, ts, 1)?.converges() {
        return Err(Error::NoRoot(format!("psi_{} is infinite on (0, theta*]", cfg.kappa)));
    }
    let mut cfg = cfg.clone();
    let mut attempts = 0;
    loop {
        let table = PsiTable::build(model, g, &cfg)?;
        let f = |t: f64| -> Result<(f64, f64)> {
            let e = table.eval_full(t)?;
            Ok((e.estimate.value, e.d1))
        };
        let (theta, theta_min) = largest_root(f, ts, tol, &format!("psi_{}", cfg.kappa))?;
        let ev = table.eval_full(theta)?;
        attempts += 1;
        let replan = ev.estimate.trunc_bound > 1e-9 && theta < 0.97 * table.theta_ref() && attempts < 3;
        if replan {
            cfg.theta_ref = Some(0.95 * theta);
            continue;
        }
        let report = RootReport {
            kappa: cfg.kappa,
            theta,
            at_root: ev.estimate,
            slope: ev.d1,
            theta_min,
            max_offset: table.max_offset(),
        };
        return Ok((report, table));
    }
}

// ---------------------------------------------------------------------------
// ξ_κ
// ---------------------------------------------------------------------------

/// Laws of G_κ(x_r, y_r) for κ <= r <= r_max.
#[derive(Debug, Clone)]
pub struct XiTable {
    kappa: usize,
    r_max: usize,
    seed: u64,
    cells: Vec<Cell>,
    envelope: Envelope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiEstimate {
    pub estimate: PsiEstimate,
    /// Length r attaining the maximum.
    pub r_arg: usize,
    pub r_max: usize,
    /// True when the envelope shows no r > r_max can exceed the maximum.
    pub certified: bool,
    /// Set when the maximum sits at r_max.
    pub at_boundary: bool,
    /// Slope of the attaining branch.
    pub d1: f64,
}

impl XiTable {
    pub fn build(model: &ScoringModel, g: &GapPenalty, kappa: usize, r_max: usize, cfg: &PsiConfig) -> Result<Self> {
        if kappa == 0 || r_max < kappa {
            return Err(Error::InvalidArgument(format!("need 1 <= kappa <= r_max, got {kappa}, {r_max}")));
        }
        let gaps = GapTable::new(g, r_max)?;
        let budget = cfg.exact_budget.min(MAX_EXACT_PAIRS);
        let alpha = model.size();
        let cells = (kappa..=r_max)
            .into_par_iter()
            .map(|r| -> Result<Cell> {
                let exact = cfg.method != Method::MonteCarlo
                    && pair_count(alpha, free_letters(kappa, r, r)).is_some_and(|p| p <= budget);
                if !exact && cfg.method == Method::Exact {
                    return Err(Error::SizeCap(format!("r = {r} exceeds the enumeration budget")));
                }
                if exact {
                    Ok(Cell { mult: 1.0, atoms: exact_atoms(kappa, r, r, model, &gaps)?, samples: None })
                } else {
                    let samples = cfg.mc_samples.max(2);
                    let rng = rng::stream(cfg.seed, rng::tag::XI, (kappa as u64) << 32 | r as u64);
                    let atoms = sampled_atoms(kappa, r, r, model, &gaps, samples, rng)?;
                    Ok(Cell { mult: 1.0, atoms, samples: Some(samples) })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kappa, r_max, seed: cfg.seed, cells, envelope: Envelope::new(g, kappa, model.k_max()) })
    }

    pub fn eval(&self, theta: f64) -> Result<XiEstimate> {
        if !(theta > 0.0) {
            return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let mut se = 0.0;
        let mut d1 = 0.0;
        for (ix, c) in self.cells.iter().enumerate() {
            let mo = c.moments(theta);
            let v = mo.m0.ln();
            if v > best {
                best = v;
                arg = ix;
                d1 = mo.m1 / mo.m0;
                se = match c.samples {
                    Some(n) => ((mo.sq - mo.m0 * mo.m0).max(0.0) / n as f64).sqrt() / mo.m0,
                    None => 0.0,
                };
            }
        }
        let next = self.r_max + 1 - self.kappa;
        let beyond = theta * (self.kappa as f64 * self.envelope.k_max - 2.0 * self.envelope.gap_at(next));
        let exact = self.cells[arg].samples.is_none();
        let estimate = PsiEstimate {
            value: best,
            trunc_bound: 0.0,
            mc_se: se,
            kappa: self.kappa,
            theta,
            method: if exact { "exact" } else { "monte_carlo" }.into(),
            seed: self.seed,
        };
        let r_arg = self.kappa + arg;
        Ok(XiEstimate { estimate, r_arg, r_max: self.r_max, certified: beyond < best, at_boundary: r_arg == self.r_max, d1 })
    }
}

/// ξ_κ(θ) over κ <= r <= r_max.
pub fn xi_kappa(model: &ScoringModel, g: &GapPenalty, kappa: usize, r_max: usize, theta: f64, cfg: &PsiConfig) -> Result<XiEstimate> {
    XiTable::build(model, g, kappa, r_max, cfg)?.eval(theta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiRootReport {
    pub kappa: usize,
    pub theta: f64,
    pub at_root: XiEstimate,
    pub theta_min: f64,
}

/// θ̂_κ: the largest positive root of ξ_κ, with the attaining length.
pub fn root_xi_kappa(
    model: &ScoringModel,
    g: &GapPenalty,
    kappa: usize,
    r_max: usize,
    cfg: &PsiConfig,
    tol: f64,
) -> Result<(XiRootReport, XiTable)> {
    let ts = theta_star(model)?;
    let table = XiTable::build(model, g, kappa, r_max, cfg)?;
    let f = |t: f64| -> Result<(f64, f64)> {
        let e = table.eval(t)?;
        Ok((e.estimate.value, e.d1))
    };
    let (theta, theta_min) = largest_root(f, ts, tol, &format!("xi_{kappa}"))?;
    let at_root = table.eval(theta)?;
    Ok((XiRootReport { kappa, theta, at_root, theta_min }, table))
}
