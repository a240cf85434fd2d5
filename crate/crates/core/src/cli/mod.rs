//! Command-line interface. Every subcommand is a pure function of its files,
//! flags and seed; JSON goes to `--out` or stdout.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::align::{gapless_local, global_score, local_align};
use crate::asymptotics::{
    growth_constants, psi_prime, root_psi_kappa, summation_test, theta_star, theta_tilde, BracketReport,
    GrowthConstants, Method, PsiConfig, PsiPrime, Verdict, ROOT_TOL,
};
use crate::error::Error;
use crate::io::{load_model, load_sequence, parse_gap_spec};
use crate::lawlab::{self, GapFamilyKind, LawConfig, PhaseCell};
use crate::model::{GapPenalty, ScoringModel};
use crate::tailprob::{
    build_tilted_sampler, direct_mc_pvalue, is_pvalue, TailEstimate, VerifiedRoot, DEFAULT_LENGTH_CAP,
};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "GAPSTAT_THREADS";

/// Largest |ψ_κ(θ)| accepted for a θ used in the analytic bound.
pub const ROOT_VERIFY_TOL: f64 = 1e-6;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_ROOT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gapstat", version, about = "Local alignment statistics under general gap penalties")]
struct Cli {
    /// Worker threads (default: $GAPSTAT_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (default: stdout). For `law`, the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Score matrix file.
    #[arg(long)]
    scores: PathBuf,
    /// Letter distribution file (default: uniform).
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Gap penalty: affine:Δ,δ | power:Δ,δ,α | log:Δ,δ | inf | table:FILE,CLASS.
    #[arg(long)]
    gap: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PsiMethod {
    Exact,
    Mc,
    Auto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TailKind {
    Bound,
    Mc,
    Is,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Affine,
    Power,
    Log,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Local alignment score H and the canonical optimal alignment.
    Align {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Also report the global score G.
        #[arg(long)]
        global: bool,
    },
    /// Classify the gap penalty into the logarithmic or linear growth domain.
    Testgap {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Roots θ_κ and θ̂_κ, the bracket on θ̃, ψ′ and growth constants.
    Theta {
        #[command(flatten)]
        model: ModelArgs,
        /// Largest κ.
        #[arg(long, default_value_t = 1)]
        kappa: usize,
        /// Largest r for ξ at the largest κ (default κ + 4).
        #[arg(long)]
        r_max: Option<usize>,
        #[arg(long, value_enum, default_value_t = PsiMethod::Auto)]
        method: PsiMethod,
        /// Monte Carlo samples per cell.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Offset cap L of the ψ table (default: chosen from the truncation bound).
        #[arg(long)]
        max_offset: Option<usize>,
    },
    /// Tail probability P{H >= c}.
    Tail {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = TailKind::Mc)]
        method: TailKind,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Root file written by `theta`.
        #[arg(long, conflicts_with = "theta")]
        root: Option<PathBuf>,
        /// Inline θ; verified as a root of ψ_κ before use in the bound.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 1)]
        kappa: usize,
        /// Segment length cap of the tilted sampler.
        #[arg(long, default_value_t = DEFAULT_LENGTH_CAP)]
        length_cap: usize,
    },
    /// Strong-law trajectories of H/log n, H∞/log n and |z*|/log n.
    Law {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 4096)]
        nmax: usize,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest κ for the predicted bracket (0 skips predictions).
        #[arg(long, default_value_t = 1)]
        kappa_max: usize,
        /// Wall-clock budget in seconds; unfinished grid points are dropped.
        #[arg(long)]
        budget_secs: Option<f64>,
    },
    /// β̂ and the analytic verdict over a (Δ, δ) grid.
    Phase {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        alpha: Option<f64>,
        /// δ values: a,b,c or start:stop:step.
        #[arg(long)]
        delta_grid: String,
        /// Δ values: a,b,c or start:stop:step.
        #[arg(long = "Delta-grid")]
        delta_init_grid: String,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Errors with their exit codes.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(Error::NoRoot(_)) => EXIT_NO_ROOT,
            CliError::Lib(Error::InvalidArgument(_)) => EXIT_USAGE,
            CliError::Lib(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(t) => Some(t),
                Err(_) => {
                    eprintln!("error: {THREADS_ENV}={v:?} is not a thread count");
                    return EXIT_USAGE;
                }
            },
            Err(_) => None,
        },
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_DATA;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("usage error: {msg}"),
                CliError::Lib(err) => eprintln!("error: {err}"),
            }
            e.code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Align { x, y, model, global } => cmd_align(x, y, model, *global, out),
        Command::Testgap { model } => cmd_testgap(model, out),
        Command::Theta { model, kappa, r_max, method, samples, seed, max_offset } => {
            cmd_theta(model, *kappa, *r_max, *method, *samples, *seed, *max_offset, out)
        }
        Command::Tail { model, c, m, n, method, samples, seed, root, theta, kappa, length_cap } => cmd_tail(
            model,
            TailArgs {
                c: *c,
                m: *m,
                n: *n,
                method: *method,
                samples: *samples,
                seed: *seed,
                root: root.as_deref(),
                theta: *theta,
                kappa: *kappa,
                length_cap: *length_cap,
            },
            out,
        ),
        Command::Law { model, nmax, reps, seed, kappa_max, budget_secs } => {
            cmd_law(model, *nmax, *reps, *seed, *kappa_max, *budget_secs, out)
        }
        Command::Phase { scores, dist, family, alpha, delta_grid, delta_init_grid, n, reps, seed } => {
            let model = load_model(scores, dist.as_deref())?;
            let family = match family {
                Family::Affine => GapFamilyKind::Affine,
                Family::Power => GapFamilyKind::Power,
                Family::Log => GapFamilyKind::Log,
            };
            let deltas = parse_grid(delta_grid)?;
            let inits = parse_grid(delta_init_grid)?;
            cmd_phase(&model, family, *alpha, &inits, &deltas, *n, *reps, *seed, out)
        }
    }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(Error::from)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(Error::from)?;
            stdout.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

fn load(args: &ModelArgs) -> CliResult<(ScoringModel, GapPenalty)> {
    let model = load_model(&args.scores, args.dist.as_deref())?;
    let base = std::env::current_dir().map_err(Error::from)?;
    let gap = match parse_gap_spec(&args.gap, &base) {
        Ok(g) => g,
        Err(Error::Io(e)) => return Err(Error::Io(e).into()),
        Err(e) => return Err(CliError::Usage(format!("--gap {:?}: {e}", args.gap))),
    };
    Ok((model, gap))
}

/// `a,b,c` or `start:stop:step` (inclusive, values rounded to 1e-9).
fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("bad grid {spec:?}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    if let Some((start, rest)) = spec.split_once(':') {
        let (stop, step) = rest.split_once(':').ok_or_else(bad)?;
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
    } else {
        spec.split(',').map(num).collect()
    }
}

fn psi_config(kappa: usize, method: PsiMethod, samples: usize, seed: u64, max_offset: Option<usize>) -> PsiConfig {
    PsiConfig {
        method: match method {
            PsiMethod::Exact => Method::Exact,
            PsiMethod::Mc => Method::MonteCarlo,
            PsiMethod::Auto => Method::Auto,
        },
        mc_samples: samples,
        seed,
        max_offset,
        ..PsiConfig::new(kappa)
    }
}

// ---------------------------------------------------------------------------
// align
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct AlignReport {
    #[serde(rename = "H")]
    h: f64,
    zstar: Vec<(usize, usize)>,
    zstar_len: usize,
    #[serde(rename = "Hinf")]
    h_inf: f64,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
}

fn cmd_align(x: &Path, y: &Path, args: &ModelArgs, global: bool, out: Option<&Path>) -> CliResult<()> {
    let (model, gap) = load(args)?;
    let xs = load_sequence(x, model.alphabet())?;
    let ys = load_sequence(y, model.alphabet())?;
    let local = local_align(&xs, &ys, model.scores(), &gap)?;
    let g = if global { Some(global_score(&xs, &ys, model.scores(), &gap)?) } else { None };
    let report = AlignReport {
        h: local.score,
        zstar: local.optimal.pairs().to_vec(),
        zstar_len: local.match_count,
        h_inf: gapless_local(&xs, &ys, model.scores())?,
        g,
    };
    write_json(&report, out)
}

// ---------------------------------------------------------------------------
// testgap
// ---------------------------------------------------------------------------

fn cmd_testgap(args: &ModelArgs, out: Option<&Path>) -> CliResult<()> {
    let (model, gap) = load(args)?;
    let verdict = summation_test(&gap, &model)?;
    write_json(&verdict, out)
}

// ---------------------------------------------------------------------------
// theta
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ThetaOutput {
    seed: u64,
    theta_star: f64,
    report: BracketReport,
    psi_prime: Option<PsiPrime>,
    growth_constants: Option<GrowthConstants>,
    /// Roots of ψ_κ usable for the tail bound, one per κ.
    roots: Vec<VerifiedRoot>,
    warnings: Vec<String>,
}

fn no_root_explanation(model: &ScoringModel, gap: &GapPenalty, kappa: usize, msg: &str) -> CliError {
    let why = match summation_test(gap, model).map(|v| v.verdict) {
        Ok(Verdict::LinearForAllDelta) => "the gap penalty lies in the linear domain".to_string(),
        _ => format!("Δ is too small for a root with κ <= {kappa}; raise Δ or κ"),
    };
    CliError::Lib(Error::NoRoot(format!("{msg} ({why})")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_theta(
    args: &ModelArgs,
    kappa: usize,
    r_max: Option<usize>,
    method: PsiMethod,
    samples: usize,
    seed: u64,
    max_offset: Option<usize>,
    out: Option<&Path>,
) -> CliResult<()> {
    if kappa == 0 {
        return Err(CliError::Usage("--kappa must be >= 1".into()));
    }
    let r_max = r_max.unwrap_or(kappa + 4);
    if r_max < kappa {
        return Err(CliError::Usage(format!("--r-max {r_max} is below --kappa {kappa}")));
    }
    let (model, gap) = load(args)?;
    let cfg = psi_config(1, method, samples, seed, max_offset);
    let (report, table) = match theta_tilde(&model, &gap, kappa, r_max - kappa, &cfg, ROOT_TOL) {
        Ok(v) => v,
        Err(Error::NoRoot(msg)) => return Err(no_root_explanation(&model, &gap, kappa, &msg)),
        Err(e) => return Err(e.into()),
    };
    let mut warnings = Vec::new();
    let roots = report
        .per_kappa
        .iter()
        .filter_map(|k| match VerifiedRoot::from_report(&k.psi_root, ROOT_VERIFY_TOL) {
            Ok(v) => Some(v),
            Err(e) => {
                warnings.push(format!("kappa = {}: {e}", k.bracket.kappa));
                None
            }
        })
        .collect();
    for k in &report.per_kappa {
        if !k.bracket.is_ordered() {
            warnings.push(format!("kappa = {}: theta_kappa exceeds theta_hat_kappa beyond slack", k.bracket.kappa));
        }
    }
    let cfg_k = PsiConfig { kappa, ..cfg };
    let pp = match psi_prime(&model, &gap, &table, &cfg_k, &report.bracket, lawlab::PSI_PRIME_STEP) {
        Ok(pp) => {
            warnings.extend(pp.warnings.iter().cloned());
            Some(pp)
        }
        Err(e) => {
            warnings.push(format!("psi' unavailable: {e}"));
            None
        }
    };
    let gc = match &pp {
        Some(pp) => match growth_constants(&report.bracket, pp.value()) {
            Ok(gc) => Some(gc),
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        },
        None => None,
    };
    let output = ThetaOutput {
        seed,
        theta_star: report.theta_star,
        report,
        psi_prime: pp,
        growth_constants: gc,
        roots,
        warnings,
    };
    write_json(&output, out)
}

// ---------------------------------------------------------------------------
// tail
// ---------------------------------------------------------------------------

struct TailArgs<'a> {
    c: f64,
    m: usize,
    n: usize,
    method: TailKind,
    samples: usize,
    seed: u64,
    root: Option<&'a Path>,
    theta: Option<f64>,
    kappa: usize,
    length_cap: usize,
}

#[derive(serde::Deserialize)]
struct RootEntry {
    theta: f64,
    kappa: usize,
}

#[derive(serde::Deserialize)]
struct RootFile {
    roots: Vec<RootEntry>,
}

/// θ for κ from a root file or inline, re-verified against the model.
fn requested_root(model: &ScoringModel, gap: &GapPenalty, t: &TailArgs) -> CliResult<Option<VerifiedRoot>> {
    let theta = match (t.root, t.theta) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(Error::from)?;
            let file: RootFile = serde_json::from_str(&text).map_err(Error::from)?;
            let r = file
                .roots
                .iter()
                .find(|r| r.kappa == t.kappa)
                .ok_or_else(|| CliError::Usage(format!("root file has no root for kappa = {}", t.kappa)))?;
            r.theta
        }
        (None, Some(theta)) => theta,
        (None, None) => return Ok(None),
    };
    let cfg = PsiConfig::new(t.kappa);
    Ok(Some(VerifiedRoot::evaluate(model, gap, theta, &cfg, ROOT_VERIFY_TOL)?))
}

fn cmd_tail(args: &ModelArgs, t: TailArgs, out: Option<&Path>) -> CliResult<()> {
    if t.m == 0 || t.n == 0 {
        return Err(CliError::Usage("--m and --n must be positive".into()));
    }
    let (model, gap) = load(args)?;
    let estimate: TailEstimate = match t.method {
        TailKind::Bound => {
            let root = requested_root(&model, &gap, &t)?
                .ok_or_else(|| CliError::Usage("--method bound needs --root or --theta".into()))?;
            TailEstimate::bound_only(t.c, t.m, t.n, &root, model.k_max())
        }
        TailKind::Mc => {
            let est = direct_mc_pvalue(t.c, t.m, t.n, &model, &gap, t.samples, t.seed)?;
            match requested_root(&model, &gap, &t)? {
                Some(root) => est.with_bound(&root, model.k_max()),
                None => est,
            }
        }
        TailKind::Is => {
            if t.kappa != 1 {
                return Err(CliError::Usage("importance sampling supports --kappa 1 only".into()));
            }
            let theta = match requested_root(&model, &gap, &t)? {
                Some(r) => r.theta,
                None => default_is_theta(&model, &gap)?,
            };
            let sampler = build_tilted_sampler(theta, 1, &model, &gap, t.length_cap)?;
            is_pvalue(t.c, t.m, t.n, &sampler, t.samples, t.seed)?
        }
    };
    write_json(&estimate, out)
}

/// θ_1 when ψ_1 has a root, else θ* with the tilted law normalized explicitly.
fn default_is_theta(model: &ScoringModel, gap: &GapPenalty) -> CliResult<f64> {
    match root_psi_kappa(model, gap, &PsiConfig::new(1), ROOT_TOL) {
        Ok((r, _)) => Ok(r.theta),
        Err(Error::NoRoot(_)) => Ok(theta_star(model)?),
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------
// law
// ---------------------------------------------------------------------------

fn cmd_law(
    args: &ModelArgs,
    nmax: usize,
    reps: usize,
    seed: u64,
    kappa_max: usize,
    budget_secs: Option<f64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let dir = out.ok_or_else(|| CliError::Usage("law needs --out DIR".into()))?;
    let budget = match budget_secs {
        Some(s) if s.is_finite() && s >= 0.0 => Some(Duration::from_secs_f64(s)),
        Some(s) => return Err(CliError::Usage(format!("bad --budget-secs {s}"))),
        None => None,
    };
    let (model, gap) = load(args)?;
    let cfg = LawConfig { n_grid: lawlab::n_grid_up_to(nmax), reps, seed, budget };
    let mut traj = lawlab::strong_law_run(&model, &gap, &cfg)?;
    traj.predictions = Some(lawlab::predict(&model, &gap, kappa_max, 4, &PsiConfig { seed, ..PsiConfig::new(1) })?);
    fs::create_dir_all(dir).map_err(Error::from)?;
    let file = fs::File::create(dir.join("law.csv")).map_err(Error::from)?;
    traj.write_csv(std::io::BufWriter::new(file))?;
    write_json(&traj, Some(&dir.join("law_summary.json")))
}

// ---------------------------------------------------------------------------
// phase
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PhaseOutput {
    seed: u64,
    theta_star: f64,
    inv_theta_star: f64,
    n: usize,
    reps: usize,
    cells: Vec<PhaseCell>,
    /// δ at which β̂ changes sign, per Δ.
    sign_changes: Vec<(f64, Option<f64>)>,
    disagreements: usize,
}

#[allow(clippy::too_many_arguments)]
fn cmd_phase(
    model: &ScoringModel,
    family: GapFamilyKind,
    alpha: Option<f64>,
    inits: &[f64],
    deltas: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
    out: Option<&Path>,
) -> CliResult<()> {
    let cells = lawlab::phase_scan(model, family, alpha, inits, deltas, n, reps, seed)?;
    let sign_changes = inits
        .iter()
        .map(|&di| {
            let row: Vec<PhaseCell> = cells.iter().filter(|c| c.delta_init == di).cloned().collect();
            (di, lawlab::beta_sign_change(&row))
        })
        .collect();
    let disagreements = cells.iter().filter(|c| c.agreement == lawlab::Agreement::Disagree).count();
    let ts = theta_star(model)?;
    write_json(
        &PhaseOutput { seed, theta_star: ts, inv_theta_star: 1.0 / ts, n, reps, cells, sign_changes, disagreements },
        out,
    )
}
