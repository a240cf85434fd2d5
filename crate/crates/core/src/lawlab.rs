//! Seeded experiments: strong-law trajectories of H/log n, H∞/log n and
//! |z*|/log n, the linear-domain constant β̂, and (Δ, δ) phase scans.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics, Statistics};

use crate::align::{alignment_score, gapless_local, global_score_ws, local_align_ws, DpWorkspace, GapTable};
use crate::asymptotics::{
    growth_constants, psi_prime, summation_test, theta_star, theta_tilde, DomainVerdict, PsiConfig, PsiPrime,
    ThetaBracket, Verdict, ROOT_TOL,
};
use crate::error::{Error, Result};
use crate::model::{GapPenalty, ScoringModel};
use crate::rng::{self, LetterSampler};

/// Pair of i.i.d. μ sequences of length n. x and y come from separate
/// streams, so the pair for n is a prefix of the pair for any larger n.
pub fn simulate_pair(n: usize, model: &ScoringModel, seed: u64) -> (Vec<u8>, Vec<u8>) {
    pair_from_streams(n, model, seed, rng::tag::PAIR, 0)
}

fn pair_from_streams(n: usize, model: &ScoringModel, seed: u64, tag: u64, rep: u64) -> (Vec<u8>, Vec<u8>) {
    let letters = LetterSampler::new(model.dist());
    let x = letters.word(&mut rng::stream(seed, tag, 2 * rep), n);
    let y = letters.word(&mut rng::stream(seed, tag, 2 * rep + 1), n);
    (x, y)
}

/// Default n grid 2^6, ..., 2^12.
pub fn default_n_grid() -> Vec<usize> {
    (6..=12).map(|e| 1usize << e).collect()
}

/// Geometric grid 2^6, 2^7, ... up to and including the largest power of
/// two not above `n_max`.
pub fn n_grid_up_to(n_max: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..usize::BITS).map(|e| 1usize << e).filter(|&n| n >= 64 && n <= n_max).collect();
    if grid.is_empty() && n_max >= 2 {
        grid.push(n_max);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Self {
        let mut d = Data::new(values.to_vec());
        Self { q1: d.lower_quartile(), median: d.median(), q3: d.upper_quartile() }
    }
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

/// Limits predicted by the asymptotic theory, as far as they can be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Predictions {
    pub theta_star: f64,
    /// 2/θ*, the limit of H∞/log n.
    pub gapless_rate: f64,
    pub bracket: Option<ThetaBracket>,
    /// [2/θ̂_κ, 2/θ_κ] for the limit of H/log n.
    pub score_interval: Option<(f64, f64)>,
    pub psi_prime: Option<PsiPrime>,
    /// Interval for the limit of |z*|/log n.
    pub match_interval: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

/// Step used for ψ′ difference quotients and score shifts.
pub const PSI_PRIME_STEP: f64 = 1e-3;

pub fn predict(model: &ScoringModel, g: &GapPenalty, kappa_max: usize, r_extra: usize, cfg: &PsiConfig) -> Result<Predictions> {
    let ts = theta_star(model)?;
    let mut p = Predictions {
        theta_star: ts,
        gapless_rate: 2.0 / ts,
        bracket: None,
        score_interval: None,
        psi_prime: None,
        match_interval: None,
        notes: Vec::new(),
    };
    if kappa_max == 0 {
        return Ok(p);
    }
    let (report, table) = match theta_tilde(model, g, kappa_max, r_extra, cfg, ROOT_TOL) {
        Ok(v) => v,
        Err(Error::NoRoot(msg)) => {
            p.notes.push(format!("no bracket: {msg}"));
            return Ok(p);
        }
        Err(e) => return Err(e),
    };
    let b = report.bracket.clone();
    if !b.is_ordered() {
        p.notes.push(format!("bracket out of order: [{}, {}] beyond slack {}", b.lower, b.upper, b.slack));
    }
    let (lo, hi) = (b.lower.min(b.upper), b.lower.max(b.upper));
    p.score_interval = Some((2.0 / hi, 2.0 / lo));
    let cfg_k = PsiConfig { kappa: b.kappa, ..cfg.clone() };
    match psi_prime(model, g, &table, &cfg_k, &b, PSI_PRIME_STEP) {
        Ok(pp) => {
            p.notes.extend(pp.warnings.iter().cloned());
            match growth_constants(&b, pp.value()) {
                Ok(gc) => p.match_interval = Some(gc.match_rate),
                Err(e) => p.notes.push(e.to_string()),
            }
            p.psi_prime = Some(pp);
        }
        Err(e) => p.notes.push(format!("psi' unavailable: {e}")),
    }
    p.bracket = Some(b);
    Ok(p)
}

// ---------------------------------------------------------------------------
// Strong-law trajectories
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct LawConfig {
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Wall-clock budget; grid points not started in time are dropped.
    pub budget: Option<Duration>,
}

/// Header of the trajectory table; written even when no row completed.
pub const LAW_CSV_COLUMNS: [&str; 7] = ["n", "rep", "H", "Hinf", "zstar", "H_over_logn", "zstar_over_logn"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawRow {
    pub n: usize,
    pub rep: usize,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "Hinf")]
    pub h_inf: f64,
    pub zstar: usize,
    #[serde(rename = "H_over_logn")]
    pub h_over_logn: f64,
    pub zstar_over_logn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawSummary {
    pub n: usize,
    pub h_over_logn: Quartiles,
    pub hinf_over_logn: Quartiles,
    pub zstar_over_logn: Quartiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawTrajectory {
    pub seed: u64,
    pub reps: usize,
    pub n_grid: Vec<usize>,
    /// Grid points actually completed, a prefix of `n_grid`.
    pub completed: Vec<usize>,
    pub partial: bool,
    #[serde(skip)]
    pub rows: Vec<LawRow>,
    pub summary: Vec<LawSummary>,
    pub predictions: Option<Predictions>,
}

impl LawTrajectory {
    pub fn rows_for(&self, n: usize) -> impl Iterator<Item = &LawRow> {
        self.rows.iter().filter(move |r| r.n == n)
    }

    pub fn summary_for(&self, n: usize) -> Option<&LawSummary> {
        self.summary.iter().find(|s| s.n == n)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        w.write_record(LAW_CSV_COLUMNS).map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        for row in &self.rows {
            w.serialize(row).map_err(|e| Error::Invariant(format!("csv: {e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_grid(grid: &[usize]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty n grid".into()));
    }
    if grid.iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument("every n must be >= 2 so that log n > 0".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n grid must be strictly increasing".into()));
    }
    Ok(())
}

/// H, H∞ and |z*| on nested prefixes of one replicate pair, with the
/// per-replicate invariants checked inline.
fn law_replicate(
    ws: &mut DpWorkspace,
    model: &ScoringModel,
    g: &GapPenalty,
    gaps: &GapTable,
    x: &[u8],
    y: &[u8],
    n: usize,
    rep: usize,
) -> Result<LawRow> {
    let (xs, ys) = (&x[..n], &y[..n]);
    let local = local_align_ws(ws, xs, ys, model.scores(), gaps)?;
    let h_inf = gapless_local(xs, ys, model.scores())?;
    if local.score < h_inf {
        return Err(Error::Invariant(format!("rep {rep}, n = {n}: H = {} < H_inf = {h_inf}", local.score)));
    }
    let s = alignment_score(&local.optimal, xs, ys, model.scores(), g)?;
    if s != local.score {
        return Err(Error::Invariant(format!("rep {rep}, n = {n}: S(z*) = {s} differs from H = {}", local.score)));
    }
    let ln = (n as f64).ln();
    Ok(LawRow {
        n,
        rep,
        h: local.score,
        h_inf,
        zstar: local.match_count,
        h_over_logn: local.score / ln,
        zstar_over_logn: local.match_count as f64 / ln,
    })
}

/// Runs the n grid in increasing order. Replicate r uses the sequence pair
/// of streams (2r, 2r+1), and each n uses its prefixes, so H must be
/// nondecreasing along the grid.
pub fn strong_law_run(model: &ScoringModel, g: &GapPenalty, cfg: &LawConfig) -> Result<LawTrajectory> {
    check_grid(&cfg.n_grid)?;
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be >= 1".into()));
    }
    let start = Instant::now();
    let n_max = *cfg.n_grid.last().expect("nonempty grid");
    let gaps = GapTable::new(g, n_max)?;
    let pairs: Vec<(Vec<u8>, Vec<u8>)> =
        (0..cfg.reps as u64).into_par_iter().map(|r| pair_from_streams(n_max, model, cfg.seed, rng::tag::LAW, r)).collect();

    let mut rows: Vec<LawRow> = Vec::new();
    let mut summary = Vec::new();
    let mut completed = Vec::new();
    let mut last_h: Vec<f64> = vec![f64::NEG_INFINITY; cfg.reps];
    for &n in &cfg.n_grid {
        if cfg.budget.is_some_and(|b| start.elapsed() > b) {
            break;
        }
        let block: Vec<LawRow> = pairs
            .par_iter()
            .enumerate()
            .map_init(DpWorkspace::new, |ws, (rep, (x, y))| law_replicate(ws, model, g, &gaps, x, y, n, rep))
            .collect::<Result<_>>()?;
        for row in &block {
            if row.h < last_h[row.rep] {
                return Err(Error::Invariant(format!(
                    "rep {}: H decreased from {} to {} at n = {n}",
                    row.rep, last_h[row.rep], row.h
                )));
            }
            last_h[row.rep] = row.h;
        }
        let col = |f: fn(&LawRow) -> f64| block.iter().map(f).collect::<Vec<_>>();
        let ln = (n as f64).ln();
        summary.push(LawSummary {
            n,
            h_over_logn: Quartiles::of(&col(|r| r.h_over_logn)),
            hinf_over_logn: Quartiles::of(&block.iter().map(|r| r.h_inf / ln).collect::<Vec<_>>()),
            zstar_over_logn: Quartiles::of(&col(|r| r.zstar_over_logn)),
        });
        rows.extend(block);
        completed.push(n);
    }
    let partial = completed.len() < cfg.n_grid.len();
    Ok(LawTrajectory {
        seed: cfg.seed,
        reps: cfg.reps,
        n_grid: cfg.n_grid.clone(),
        completed,
        partial,
        rows,
        summary,
        predictions: None,
    })
}

// ---------------------------------------------------------------------------
// β̂
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaEstimate {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Mean of G(x_n, y_n)/n.
    pub beta: f64,
    pub se: f64,
    /// Same at 2n on extensions of the same sequences.
    pub beta_2n: f64,
    pub se_2n: f64,
    /// Mean local scores at n and 2n.
    pub mean_h: f64,
    pub mean_h_2n: f64,
}

impl BetaEstimate {
    /// Sign of β̂ at 3 standard errors: 1, -1, or 0 when unresolved.
    pub fn sign(&self) -> i32 {
        if self.beta > 3.0 * self.se {
            1
        } else if self.beta < -3.0 * self.se {
            -1
        } else {
            0
        }
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().mean();
    let se = if v.len() > 1 { v.iter().std_dev() / (v.len() as f64).sqrt() } else { 0.0 };
    (mean, se)
}

/// Sample mean of G(x_n, y_n)/n with its standard error, plus the same at
/// 2n to expose drift. Uses the local scores of the same pairs for the
/// growth diagnostic.
pub fn estimate_beta(model: &ScoringModel, g: &GapPenalty, n: usize, reps: usize, seed: u64) -> Result<BetaEstimate> {
    if n < 2 || reps == 0 {
        return Err(Error::InvalidArgument("n >= 2 and reps >= 1 required".into()));
    }
    let gaps = GapTable::new(g, 2 * n)?;
    let per_rep: Vec<[f64; 4]> = (0..reps as u64)
        .into_par_iter()
        .map_init(DpWorkspace::new, |ws, r| {
            let (x, y) = pair_from_streams(2 * n, model, seed, rng::tag::BETA, r);
            let g1 = global_score_ws(ws, &x[..n], &y[..n], model.scores(), &gaps)?;
            let g2 = global_score_ws(ws, &x, &y, model.scores(), &gaps)?;
            let h1 = local_align_ws(ws, &x[..n], &y[..n], model.scores(), &gaps)?.score;
            let h2 = local_align_ws(ws, &x, &y, model.scores(), &gaps)?.score;
            Ok([g1 / n as f64, g2 / (2 * n) as f64, h1, h2])
        })
        .collect::<Result<_>>()?;
    let column = |i: usize| per_rep.iter().map(|v| v[i]).collect::<Vec<_>>();
    let (beta, se) = mean_se(&column(0));
    let (beta_2n, se_2n) = mean_se(&column(1));
    Ok(BetaEstimate {
        n,
        reps,
        seed,
        beta,
        se,
        beta_2n,
        se_2n,
        mean_h: column(2).iter().mean(),
        mean_h_2n: column(3).iter().mean(),
    })
}

// ---------------------------------------------------------------------------
// Phase scans
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFamilyKind {
    Affine,
    Power,
    Log,
}

impl GapFamilyKind {
    pub fn build(self, delta_init: f64, delta: f64, alpha: Option<f64>) -> Result<GapPenalty> {
        match self {
            Self::Affine => GapPenalty::affine(delta_init, delta),
            Self::Log => GapPenalty::logarithmic(delta_init, delta),
            Self::Power => {
                let a = alpha.ok_or_else(|| Error::InvalidArgument("power family needs alpha".into()))?;
                GapPenalty::power_law(delta_init, delta, a)
            }
        }
    }
}

/// Growth of mean H between n and 2n, per unit n and per unit log n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthDiagnostic {
    pub slope_per_n: f64,
    pub slope_per_log_n: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Agree,
    Disagree,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    pub delta_init: f64,
    pub delta: f64,
    pub alpha: Option<f64>,
    pub verdict: DomainVerdict,
    pub beta: BetaEstimate,
    pub growth: GrowthDiagnostic,
    pub agreement: Agreement,
}

/// Compares the analytic verdict with the sign of β̂. Logarithmic growth at
/// this particular Δ is only claimed when Δ certifies it.
fn agreement(v: &DomainVerdict, beta: &BetaEstimate) -> Agreement {
    match (v.verdict, v.delta_certifies, beta.sign()) {
        (Verdict::LinearForAllDelta, _, 1) => Agreement::Agree,
        (Verdict::LinearForAllDelta, _, -1) => Agreement::Disagree,
        (Verdict::LogarithmicForLargeDelta, true, -1) => Agreement::Agree,
        (Verdict::LogarithmicForLargeDelta, true, 1) => Agreement::Disagree,
        _ => Agreement::Inconclusive,
    }
}

/// Every (Δ, δ) cell gets the analytic verdict and an empirical β̂ from the
/// same seed, so neighbouring cells share their random sequences.
pub fn phase_scan(
    model: &ScoringModel,
    family: GapFamilyKind,
    alpha: Option<f64>,
    delta_init_grid: &[f64],
    delta_grid: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<PhaseCell>> {
    let mut cells = Vec::with_capacity(delta_init_grid.len() * delta_grid.len());
    for &di in delta_init_grid {
        for &d in delta_grid {
            let g = family.build(di, d, alpha)?;
            let verdict = summation_test(&g, model)?;
            let beta = estimate_beta(model, &g, n, reps, seed)?;
            let dh = beta.mean_h_2n - beta.mean_h;
            let growth = GrowthDiagnostic { slope_per_n: dh / n as f64, slope_per_log_n: dh / std::f64::consts::LN_2 };
            let agreement = agreement(&verdict, &beta);
            cells.push(PhaseCell { delta_init: di, delta: d, alpha, verdict, beta, growth, agreement });
        }
    }
    Ok(cells)
}

/// First δ (scanning upward) at which β̂ turns from positive to nonpositive,
/// reported as the midpoint of the two grid points. Cells must share Δ and
/// be sorted by δ.
pub fn beta_sign_change(cells: &[PhaseCell]) -> Option<f64> {
    cells.windows(2).find(|w| w[0].beta.beta > 0.0 && w[1].beta.beta <= 0.0).map(|w| 0.5 * (w[0].delta + w[1].delta))
}
