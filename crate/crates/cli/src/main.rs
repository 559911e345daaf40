use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use steerkit::analysis::{
    critical_eta, critical_w, noise_csv, noise_curve, region_csv, scan_region, to_json, unit_grid,
    violation, Threshold,
};
use steerkit::assemblages::{
    apply_loss, assemble, max_entangled, noisy_lossy_assemblage, save_assemblage,
};
use steerkit::io::sig12;
use steerkit::matcore::{max_abs_diff, ComplexMatrix};
use steerkit::measurements::{
    is_prime, load_bases, lossy_povm, marginalize, max_overlap, mub_prime, parent_povm_lossy,
    random_basis, save_bases,
};
use steerkit::steering::{
    build_functional, exact_lhs_bound_with_guard, lemma_trial, projector_sum_norm_check,
    DEFAULT_GUARD,
};
use steerkit::{Error, MeasurementSet};

const JM_TOL: f64 = 1e-12;
const LEMMA_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "steerkit",
    version,
    about = "Loss-tolerant steering inequalities for von Neumann measurements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic and exact LHS bounds of the steering functional.
    Bound {
        #[command(flatten)]
        set: SetArgs,
        /// No-click coefficient (default: cosθ).
        #[arg(long, value_parser = unit_real)]
        alpha: Option<f64>,
        /// Enumeration guard on the number of deterministic strategies.
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        max_strategies: u64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Steering value of the lossy isotropic state.
    Violation {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_parser = unit_real, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, value_parser = unit_real, default_value_t = 1.0)]
        w: f64,
        /// Also compare against the exact bound.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        max_strategies: u64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Critical efficiency at a given w and critical noise at a given η.
    Critical {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_parser = unit_real)]
        eta: Option<f64>,
        #[arg(long, value_parser = unit_real)]
        w: Option<f64>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Data tables: region of (η, w) (fig 1) or w_c against d (fig 2).
    Scan {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        fig: u8,
        #[command(flatten)]
        set: SetArgs,
        /// Points per axis of the (η, w) grid.
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..=100_001))]
        grid: u32,
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 5, 7, 11, 13])]
        primes: Vec<usize>,
        #[arg(long, value_parser = positive_unit_real, default_value_t = 1.0)]
        eta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Joint measurability: parent POVM for η ≤ 1/n, steering certificate above.
    Jm {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_parser = unit_real)]
        eta: f64,
    },
    /// Seeded checks of the projector-sum norm bound.
    Lemma {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use ℓ copies of one projector instead of random instances.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64), conflicts_with = "orthogonal")]
        identical: Option<u64>,
        /// Use ℓ mutually orthogonal projectors instead of random instances.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        orthogonal: Option<u64>,
    },
    /// Write the d+1 MUBs of prime d (or the first n) as a basis file.
    Mub {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the lossy isotropic assemblage of a measurement set.
    Assemblage {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_parser = unit_real, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, value_parser = unit_real, default_value_t = 1.0)]
        w: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SetArgs {
    /// Local dimension; with no basis file, the MUBs of this prime.
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..=97))]
    d: Option<u64>,
    /// Use the d+1 mutually unbiased bases of prime d.
    #[arg(long, conflicts_with = "bases")]
    mub: bool,
    /// Keep only the first n settings.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Basis file (JSON).
    #[arg(long)]
    bases: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, PartialEq)]
enum TableFormat {
    Csv,
    Json,
}

fn unit_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

fn positive_unit_real(s: &str) -> Result<f64, String> {
    let v = unit_real(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

enum Failure {
    Usage(String),
    Invariant(String),
    Guard(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Invariant(_) => 2,
            Failure::Guard(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Invariant(m) | Failure::Guard(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::GuardExceeded { .. } => Failure::Guard(e.to_string()),
            Error::NonRealPairing(_) | Error::NotHermitian(_) => Failure::Invariant(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<String, Failure>;

fn resolve_set(args: &SetArgs) -> Result<MeasurementSet, Failure> {
    let set = match (&args.bases, args.d) {
        (Some(path), d) => {
            let set =
                load_bases(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            if let Some(d) = d {
                if set.dim() as u64 != d {
                    return Err(Failure::Usage(format!(
                        "--d {d} does not match the basis file dimension {}",
                        set.dim()
                    )));
                }
            }
            set
        }
        (None, Some(d)) => {
            let d = d as usize;
            if !is_prime(d) {
                return Err(Failure::Usage(format!(
                    "--d {d} is not prime; supply --bases for other dimensions"
                )));
            }
            mub_prime(d)?
        }
        (None, None) => {
            return Err(Failure::Usage("supply --d (with --mub) or --bases".into()));
        }
    };
    match args.n {
        Some(n) if n as usize > set.n() => Err(Failure::Usage(format!(
            "--n {n} exceeds the {} available settings",
            set.n()
        ))),
        Some(n) => Ok(set.truncated(n as usize)?),
        None => Ok(set),
    }
}

fn trivial_warning(cos: f64) {
    if cos >= 1.0 - 1e-9 {
        eprintln!(
            "warning: trivial inequality (cosθ = 1): two settings share an outcome direction"
        );
    }
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn write_or_return(out: &Option<PathBuf>, text: String) -> CmdResult {
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

#[derive(Serialize)]
struct BoundJson {
    d: usize,
    n: usize,
    cos_theta: f64,
    alpha: f64,
    strategies: u64,
    analytic_bound: f64,
    exact_bound: f64,
    argmax_strategy: String,
    per_class_max: Vec<f64>,
}

fn cmd_bound(set: &SetArgs, alpha: Option<f64>, guard: u64, format: ReportFormat) -> CmdResult {
    let set = resolve_set(set)?;
    if set.n() < 2 {
        return Err(Failure::Usage(
            "the functional needs at least two settings".into(),
        ));
    }
    let f = build_functional(&set, alpha, false)?;
    trivial_warning(f.cos_theta());
    let r = exact_lhs_bound_with_guard(&f, guard)?;
    let report = BoundJson {
        d: f.dim(),
        n: f.n(),
        cos_theta: f.cos_theta(),
        alpha: f.alpha(),
        strategies: r.strategies as u64,
        analytic_bound: r.analytic_bound,
        exact_bound: r.exact_bound,
        argmax_strategy: r.argmax_strategy.to_string(),
        per_class_max: r.per_class_max.clone(),
    };
    if format == ReportFormat::Json {
        return Ok(json(&report));
    }
    let mut out = format!(
        "d = {}, n = {}\ncos theta = {}\nalpha = {}\nstrategies = {}\nanalytic bound = {}\nexact bound = {}\nargmax strategy = {}\n",
        report.d,
        report.n,
        sig12(report.cos_theta),
        sig12(report.alpha),
        report.strategies,
        sig12(report.analytic_bound),
        sig12(report.exact_bound),
        report.argmax_strategy
    );
    for (k, m) in report.per_class_max.iter().enumerate() {
        out.push_str(&format!("class k={k} max = {}\n", sig12(*m)));
    }
    Ok(out)
}

#[derive(Serialize)]
struct ViolationJson {
    d: usize,
    n: usize,
    eta: f64,
    w: f64,
    cos_theta: f64,
    beta: f64,
    bound: f64,
    lhs_analytic: f64,
    lhs_exact: Option<f64>,
    violated: bool,
    #[serde(rename = "V")]
    v: f64,
}

fn cmd_violation(
    set: &SetArgs,
    eta: f64,
    w: f64,
    exact: bool,
    guard: u64,
    format: ReportFormat,
) -> CmdResult {
    let set = resolve_set(set)?;
    if set.n() < 2 {
        return Err(Failure::Usage(
            "the functional needs at least two settings".into(),
        ));
    }
    let f = build_functional(&set, None, true)?;
    trivial_warning(f.cos_theta());
    let a = noisy_lossy_assemblage(set.dim(), &set, eta, w)?;
    let lhs_exact = if exact {
        Some(exact_lhs_bound_with_guard(&f, guard)?.exact_bound)
    } else {
        None
    };
    let mut r = violation(&f, &a, lhs_exact.unwrap_or(f.analytic_bound()))?;
    r.lhs_exact = lhs_exact;
    let report = ViolationJson {
        d: set.dim(),
        n: set.n(),
        eta,
        w,
        cos_theta: f.cos_theta(),
        beta: r.beta,
        bound: r.bound,
        lhs_analytic: r.lhs_analytic,
        lhs_exact: r.lhs_exact,
        violated: r.violated,
        v: r.normalized_violation,
    };
    if format == ReportFormat::Json {
        return Ok(json(&report));
    }
    let mut out = format!(
        "d = {}, n = {}, eta = {}, w = {}\ncos theta = {}\nbeta = {}\nbound = {}\n",
        report.d,
        report.n,
        sig12(eta),
        sig12(w),
        sig12(report.cos_theta),
        sig12(report.beta),
        sig12(report.bound)
    );
    if let Some(e) = report.lhs_exact {
        out.push_str(&format!(
            "analytic bound = {}\nexact bound = {}\n",
            sig12(report.lhs_analytic),
            sig12(e)
        ));
    }
    out.push_str(&format!(
        "violated = {}\nV = {}\n",
        report.violated,
        sig12(report.v)
    ));
    Ok(out)
}

#[derive(Serialize)]
struct CriticalJson {
    d: usize,
    n: usize,
    cos_theta: f64,
    w: Option<f64>,
    eta_critical: Option<Threshold>,
    eta: Option<f64>,
    w_critical: Option<Threshold>,
}

fn cmd_critical(
    set: &SetArgs,
    eta: Option<f64>,
    w: Option<f64>,
    format: ReportFormat,
) -> CmdResult {
    let set = resolve_set(set)?;
    if set.n() < 2 {
        return Err(Failure::Usage(
            "thresholds need at least two settings".into(),
        ));
    }
    if eta == Some(0.0) {
        return Err(Failure::Usage("--eta must be positive".into()));
    }
    let w = if eta.is_none() && w.is_none() {
        Some(1.0)
    } else {
        w
    };
    let cos = max_overlap(&set)?;
    trivial_warning(cos);
    if cos >= 1.0 - 1e-9 {
        return Err(Failure::Usage(
            "cosθ = 1: the inequality has no threshold".into(),
        ));
    }
    let (d, n) = (set.dim(), set.n());
    let report = CriticalJson {
        d,
        n,
        cos_theta: cos,
        w,
        eta_critical: w.map(|w| critical_eta(n, d, cos, w)).transpose()?,
        eta,
        w_critical: eta.map(|e| critical_w(n, d, cos, e)).transpose()?,
    };
    if format == ReportFormat::Json {
        return Ok(json(&report));
    }
    let mut out = format!("d = {d}, n = {n}\ncos theta = {}\n", sig12(cos));
    if let (Some(w), Some(t)) = (report.w, report.eta_critical) {
        out.push_str(&format!("eta_c (w = {}) = {}\n", sig12(w), t.render()));
    }
    if let (Some(e), Some(t)) = (report.eta, report.w_critical) {
        out.push_str(&format!("w_c (eta = {}) = {}\n", sig12(e), t.render()));
    }
    Ok(out)
}

fn cmd_scan(
    fig: u8,
    set: &SetArgs,
    grid: u32,
    primes: &[usize],
    eta: f64,
    out: &Option<PathBuf>,
    format: TableFormat,
) -> CmdResult {
    let text = if fig == 1 {
        let set = resolve_set(set)?;
        if set.n() < 2 {
            return Err(Failure::Usage(
                "the region needs at least two settings".into(),
            ));
        }
        let cos = max_overlap(&set)?;
        trivial_warning(cos);
        let g = unit_grid(grid as usize);
        let rows = scan_region(set.dim(), set.n(), cos, &g, &g)?;
        match format {
            TableFormat::Csv => region_csv(&rows),
            TableFormat::Json => to_json(&rows),
        }
    } else {
        if let Some(p) = primes.iter().find(|p| !is_prime(**p)) {
            return Err(Failure::Usage(format!("--primes: {p} is not prime")));
        }
        let rows = noise_curve(primes, eta)?;
        match format {
            TableFormat::Csv => noise_csv(&rows),
            TableFormat::Json => to_json(&rows),
        }
    };
    write_or_return(out, text)
}

fn fmt_complex(re: f64, im: f64) -> String {
    let sign = if im.is_sign_negative() && im != 0.0 {
        '-'
    } else {
        '+'
    };
    format!("{}{sign}{}i", sig12(re), sig12(im.abs()))
}

fn fmt_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| fmt_complex(m[(i, j)].re, m[(i, j)].im))
            .collect();
        out.push_str(&format!("  [ {} ]\n", row.join("  ")));
    }
    out
}

fn cmd_jm(set: &SetArgs, eta: f64) -> CmdResult {
    let set = resolve_set(set)?;
    let n = set.n();
    let mut out = format!("d = {}, n = {n}, eta = {}\n", set.dim(), sig12(eta));
    if eta * n as f64 <= 1.0 + 1e-12 {
        let parent = parent_povm_lossy(&set, eta)?;
        let lossy = lossy_povm(&set, eta)?;
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for (m, e) in marginalize(&parent, x)?.iter().zip(&lossy.elements[x]) {
                worst = worst.max(max_abs_diff(m, e));
            }
        }
        let complete = parent.completeness_residual();
        out.push_str(&format!(
            "parent POVM: {} nonzero of {} outcome strings\n",
            parent.nonzero_count(),
            parent.total_outcomes()
        ));
        for (s, m) in &parent.entries {
            out.push_str(&format!("M{s} =\n{}", fmt_matrix(m)));
        }
        out.push_str(&format!(
            "max marginal residual = {worst:.3e}\ncompleteness residual = {complete:.3e}\n"
        ));
        if worst > JM_TOL || complete > JM_TOL || !parent.all_psd() {
            return Err(Failure::Invariant(format!(
                "{out}parent POVM does not reproduce the lossy measurements"
            )));
        }
        out.push_str("JM certified\n");
    } else {
        if n < 2 {
            return Err(Failure::Usage(
                "a steering certificate needs at least two settings".into(),
            ));
        }
        let f = build_functional(&set, None, true)?;
        trivial_warning(f.cos_theta());
        let a = apply_loss(&assemble(&max_entangled(set.dim())?, &set)?, eta)?;
        let r = violation(&f, &a, f.analytic_bound())?;
        out.push_str(&format!(
            "beta = {}\nbound = {}\n",
            sig12(r.beta),
            sig12(r.bound)
        ));
        out.push_str(if r.violated {
            "non-JM certified (steering demonstrated)\n"
        } else {
            "inconclusive (no violation)\n"
        });
    }
    Ok(out)
}

fn cmd_lemma(trials: u64, seed: u64, identical: Option<u64>, orthogonal: Option<u64>) -> CmdResult {
    if let Some(l) = identical.or(orthogonal) {
        let l = l as usize;
        let d = l.max(2);
        let basis = random_basis(d, seed);
        let ps: Vec<ComplexMatrix> = if identical.is_some() {
            vec![basis.projector(0); l]
        } else {
            (0..l).map(|a| basis.projector(a)).collect()
        };
        let (lhs, bound) = projector_sum_norm_check(&ps)?;
        let out = format!(
            "projectors = {l}, d = {d}\nlhs = {}\nbound = {}\n",
            sig12(lhs),
            sig12(bound)
        );
        if lhs > bound + LEMMA_TOL {
            return Err(Failure::Invariant(format!(
                "{out}lemma violated at seed {seed}"
            )));
        }
        return Ok(out + "holds\n");
    }
    if trials == 0 {
        return Err(Failure::Usage("--trials must be positive".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    for t in 0..trials {
        let s = seed.wrapping_add(t);
        let trial = lemma_trial(s)?;
        if !trial.holds(LEMMA_TOL) {
            return Err(Failure::Invariant(format!(
                "lemma violated at seed {s}: lhs = {} > bound = {} (ℓ = {}, d = {})",
                trial.lhs, trial.bound, trial.projectors, trial.dim
            )));
        }
        worst = worst.max(trial.lhs - trial.bound);
    }
    let mut out = format!("trials = {trials}, seed = {seed}\nmax(lhs - bound) = {worst:.3e}\n");
    if trials == 1 {
        let t = lemma_trial(seed)?;
        out.push_str(&format!(
            "lhs = {}\nbound = {}\n",
            sig12(t.lhs),
            sig12(t.bound)
        ));
    }
    Ok(out + "holds\n")
}

fn cmd_mub(d: usize, n: Option<usize>, out: &Option<PathBuf>) -> CmdResult {
    if !is_prime(d) {
        return Err(Failure::Usage(format!("--d {d} is not prime")));
    }
    let mut set = mub_prime(d)?;
    if let Some(n) = n {
        if n == 0 || n > set.n() {
            return Err(Failure::Usage(format!("--n must lie in 1..={}", set.n())));
        }
        set = set.truncated(n)?;
    }
    match out {
        Some(path) => {
            save_bases(&set, path)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(steerkit::measurements::bases_to_string(&set)),
    }
}

fn cmd_assemblage(set: &SetArgs, eta: f64, w: f64, out: &Option<PathBuf>) -> CmdResult {
    let set = resolve_set(set)?;
    let a = noisy_lossy_assemblage(set.dim(), &set, eta, w)?;
    match out {
        Some(path) => {
            save_assemblage(&a, path)
                .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(steerkit::assemblages::assemblage_to_string(&a)),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("STEERKIT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|t| *t > 0).ok_or_else(|| {
        Failure::Usage(format!("STEERKIT_THREADS={raw} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match &cli.command {
        Command::Bound {
            set,
            alpha,
            max_strategies,
            format,
        } => cmd_bound(set, *alpha, *max_strategies, *format),
        Command::Violation {
            set,
            eta,
            w,
            exact,
            max_strategies,
            format,
        } => cmd_violation(set, *eta, *w, *exact, *max_strategies, *format),
        Command::Critical {
            set,
            eta,
            w,
            format,
        } => cmd_critical(set, *eta, *w, *format),
        Command::Scan {
            fig,
            set,
            grid,
            primes,
            eta,
            out,
            format,
        } => cmd_scan(*fig, set, *grid, primes, *eta, out, *format),
        Command::Jm { set, eta } => cmd_jm(set, *eta),
        Command::Lemma {
            trials,
            seed,
            identical,
            orthogonal,
        } => cmd_lemma(*trials, *seed, *identical, *orthogonal),
        Command::Mub { d, n, out } => cmd_mub(*d, *n, out),
        Command::Assemblage { set, eta, w, out } => cmd_assemblage(set, *eta, *w, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
