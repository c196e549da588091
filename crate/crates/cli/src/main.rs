mod config;

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;

use lramimo::bounds::{bound_rows, bound_table_csv};
use lramimo::detect::DetectorKind;
use lramimo::experiments::{
    archive_counterexamples, ber_csv, proximity_csv, run_ber, run_proximity, run_schnorr_audit,
    AuditConfig, BerConfig, Ensemble, ProximityConfig,
};
use lramimo::lattice::{format_basis, parse_basis};
use lramimo::reduction::{reduce, ReductionMethod, ReductionParams, DEFAULT_DELTA, DEFAULT_MAX_TOURS};
use lramimo::Error;

use config::{config_error, Settings};

const EXIT_USAGE: u8 = 1;
const EXIT_GUARD: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "lramimo", version, about = "Lattice reduction, BKZ proximity bounds and MIMO detection experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce a basis file with LLL, BKZ or KZ.
    Reduce(ReduceArgs),
    /// Print the proximity bound table as CSV.
    Bound(BoundArgs),
    /// Measure lambda^2 / |b_i*|^2 on random BKZ-reduced bases.
    Proximity(ProximityArgs),
    /// Monte-Carlo error rates of MIMO detectors.
    Ber(BerArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Reduction {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    max_tours: Option<usize>,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    /// Basis file: "m d" then one generator per line.
    input: Option<PathBuf>,
    /// lll, bkz or kz.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    reduction: Reduction,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BoundArgs {
    /// Rank or inclusive range, e.g. `4` or `2..8`.
    #[arg(long)]
    m: Option<String>,
    /// Block size or inclusive range; defaults to every admissible value.
    #[arg(long)]
    beta: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ProximityArgs {
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    /// gaussian, integer, orthogonal or identity; comma-separated for several.
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Also audit the Schnorr inequalities on the same bases.
    #[arg(long)]
    schnorr: Option<bool>,
    /// Where violating bases are written.
    #[arg(long)]
    counterexample_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    reduction: Reduction,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct BerArgs {
    #[arg(long)]
    n_tx: Option<usize>,
    #[arg(long)]
    n_rx: Option<usize>,
    /// QAM order.
    #[arg(long)]
    order: Option<usize>,
    /// Comma-separated: ml, ml-exhaustive, zf, mmse, sic, lra-lll, lra-bkz, lra-kz.
    #[arg(long)]
    detectors: Option<String>,
    /// Comma-separated SNR grid in dB; `inf` for no noise.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    reduction: Reduction,
    #[command(flatten)]
    common: Common,
}

/// Inclusive integer range written `a`, `a..b`, `a..=b` or `a-b`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Span(usize, usize);

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{e}"));
        let split = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .or_else(|| s.split_once('-'));
        let span = match split {
            Some((a, b)) => Span(num(a)?, num(b)?),
            None => {
                let v = num(s)?;
                Span(v, v)
            }
        };
        if span.0 > span.1 || span.0 == 0 {
            return Err(format!("empty or zero range `{s}`"));
        }
        Ok(span)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == self.1 {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{}..{}", self.0, self.1)
        }
    }
}

/// How a command ended, beyond plain errors.
enum Outcome {
    Done,
    Violation,
}

fn settings(common: &Common, command: &str) -> Result<Settings, Error> {
    let mut s = Settings::load(common.config.as_deref())?;
    s.flag("output", common.output.as_ref().map(|p| p.display()));
    info!("{command}: config file {:?}", common.config);
    Ok(s)
}

fn reduction_flags(s: &mut Settings, r: &Reduction) {
    s.flag("delta", r.delta);
    s.flag("beta", r.beta.as_deref());
    s.flag("max_tours", r.max_tours);
}

fn reduction_params(s: &mut Settings, beta: usize) -> Result<ReductionParams, Error> {
    Ok(ReductionParams {
        delta: s.or("delta", DEFAULT_DELTA)?,
        beta,
        max_tours: s.or("max_tours", DEFAULT_MAX_TOURS)?,
    })
}

/// Echoes the resolved configuration to stderr before any computation.
fn announce(command: &str, s: &Settings) -> Result<(), Error> {
    s.reject_unknown()?;
    let mut err = std::io::stderr().lock();
    writeln!(err, "# lramimo {command}")?;
    for (k, v) in s.effective() {
        writeln!(err, "# {k}={v}")?;
    }
    Ok(())
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Error> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_reduce(args: &ReduceArgs) -> Result<Outcome, Error> {
    let mut s = settings(&args.common, "reduce")?;
    s.flag("input", args.input.as_ref().map(|p| p.display()));
    s.flag("method", args.method.as_deref());
    reduction_flags(&mut s, &args.reduction);
    let input: PathBuf = s.required("input")?;
    let method: ReductionMethod = s.or("method", ReductionMethod::Lll)?;
    let beta = s.or("beta", 2usize)?;
    let params = reduction_params(&mut s, beta)?;
    let output: Option<PathBuf> = s.optional("output")?;
    announce("reduce", &s)?;

    let text = fs::read_to_string(&input)?;
    let basis = parse_basis(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", input.display()),
        },
        other => other,
    })?;
    let outcome = reduce(&basis, method, &params)?;
    let reduced = outcome.basis;
    let b1: f64 = reduced.vector(0).iter().map(|x| x * x).sum();
    let summary = format!(
        "b1_norm_sq={b1:?} gram_det={:?} tours={} converged={}",
        reduced.gram_determinant(),
        outcome.tours,
        outcome.converged
    );
    let comments = vec![format!("{method} reduced; {summary}")];
    emit(output.as_deref(), &format_basis(&reduced, &comments))?;
    if output.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(Outcome::Done)
}

fn cmd_bound(args: &BoundArgs) -> Result<Outcome, Error> {
    let mut s = settings(&args.common, "bound")?;
    s.flag("m", args.m.as_deref());
    s.flag("beta", args.beta.as_deref());
    let m: Span = s.required("m")?;
    let beta: Span = s.or("beta", Span(1, m.1))?;
    let output: Option<PathBuf> = s.optional("output")?;
    announce("bound", &s)?;
    if m.0 == m.1 && beta.0 == beta.1 {
        let (m, b) = (m.0, beta.0);
        if b > m {
            return Err(config_error("beta", format!("beta {b} exceeds m {m}")));
        }
        if m >= 2 && b < 2 {
            return Err(config_error("beta", format!("beta must be at least 2 for m = {m}")));
        }
    }
    let rows = bound_rows(m.0..=m.1, beta.0..=beta.1)?;
    if rows.is_empty() {
        return Err(config_error("beta", "no admissible (m, beta) pair in the given ranges"));
    }
    emit(output.as_deref(), &bound_table_csv(&rows))?;
    Ok(Outcome::Done)
}

fn cmd_proximity(args: &ProximityArgs) -> Result<Outcome, Error> {
    let mut s = settings(&args.common, "proximity")?;
    s.flag("m", args.m);
    s.flag("trials", args.trials);
    s.flag("ensemble", args.ensemble.as_deref());
    s.flag("master_seed", args.master_seed);
    s.flag("tolerance", args.tolerance);
    s.flag("schnorr", args.schnorr);
    s.flag("counterexample_dir", args.counterexample_dir.as_ref().map(|p| p.display()));
    s.flag("threads", args.threads);
    reduction_flags(&mut s, &args.reduction);

    let master_seed: u64 = s.required("master_seed")?;
    let m: usize = s.required("m")?;
    let betas: Vec<usize> = s.list("beta", &format!("{}", m.min(2)))?;
    let ensembles: Vec<Ensemble> = s.list("ensemble", "gaussian")?;
    let trials: u64 = s.or("trials", 10_000)?;
    let delta = s.or("delta", DEFAULT_DELTA)?;
    let max_tours = s.or("max_tours", DEFAULT_MAX_TOURS)?;
    let tolerance = s.or("tolerance", 1e-9)?;
    let schnorr = s.or("schnorr", false)?;
    let dir = PathBuf::from(s.or("counterexample_dir", "counterexamples".to_string())?);
    let threads = s.or("threads", 0usize)?;
    let output: Option<PathBuf> = s.optional("output")?;
    if betas.is_empty() {
        return Err(config_error("beta", "at least one block size is required"));
    }
    if ensembles.is_empty() {
        return Err(config_error("ensemble", "at least one ensemble is required"));
    }
    announce("proximity", &s)?;

    let mut reports = Vec::new();
    let mut counterexamples = Vec::new();
    for &ensemble in &ensembles {
        for &beta in &betas {
            let mut cfg = ProximityConfig::new(m, beta, trials, ensemble, master_seed);
            cfg.delta = delta;
            cfg.max_tours = max_tours;
            cfg.tolerance = tolerance;
            cfg.threads = threads;
            let report = run_proximity(&cfg)?;
            eprintln!(
                "m={m} beta={beta} ensemble={ensemble}: sup ratio {:?} vs bound {:?}, {} violations, {} unconverged",
                report
                    .per_index_empirical_sup
                    .iter()
                    .cloned()
                    .fold(0.0, f64::max),
                report.theorem_bound,
                report.violations.len(),
                report.unconverged
            );
            counterexamples.extend(report.violations.iter().map(|v| v.counterexample.clone()));
            reports.push(report);

            if schnorr {
                let mut audit_cfg = AuditConfig::new(m, beta, trials, ensemble, master_seed);
                audit_cfg.delta = delta;
                audit_cfg.max_tours = max_tours;
                audit_cfg.threads = threads;
                let audit = run_schnorr_audit(&audit_cfg)?;
                eprintln!(
                    "m={m} beta={beta} ensemble={ensemble}: schnorr upper violations {} (worst margin {:?}), lower violations {} (worst margin {:?})",
                    audit.upper_violations,
                    audit.worst_upper_margin,
                    audit.lower_violations,
                    audit.worst_lower_margin
                );
                counterexamples.extend(audit.counterexamples);
            }
        }
    }
    emit(output.as_deref(), &proximity_csv(&reports))?;
    if counterexamples.is_empty() {
        return Ok(Outcome::Done);
    }
    for path in archive_counterexamples(&dir, &counterexamples)? {
        eprintln!("counterexample written to {}", path.display());
    }
    Ok(Outcome::Violation)
}

fn cmd_ber(args: &BerArgs) -> Result<Outcome, Error> {
    let mut s = settings(&args.common, "ber")?;
    s.flag("n_tx", args.n_tx);
    s.flag("n_rx", args.n_rx);
    s.flag("order", args.order);
    s.flag("detectors", args.detectors.as_deref());
    s.flag("snr_db", args.snr_db.as_deref());
    s.flag("trials", args.trials);
    s.flag("master_seed", args.master_seed);
    s.flag("threads", args.threads);
    reduction_flags(&mut s, &args.reduction);

    let master_seed: u64 = s.required("master_seed")?;
    let n_tx = s.or("n_tx", 4usize)?;
    let n_rx = s.or("n_rx", n_tx)?;
    let order = s.or("order", 4usize)?;
    let detectors: Vec<DetectorKind> = s.list("detectors", "ml,zf,mmse,sic,lra-lll,lra-bkz")?;
    let snr_db: Vec<f64> = s.list("snr_db", "0,5,10,15,20,25")?;
    let trials = s.or("trials", 10_000u64)?;
    let beta = s.or("beta", 2usize)?;
    let reduction = reduction_params(&mut s, beta)?;
    let threads = s.or("threads", 0usize)?;
    let output: Option<PathBuf> = s.optional("output")?;
    let config = BerConfig {
        n_tx,
        n_rx,
        order,
        detectors,
        snr_db,
        trials,
        master_seed,
        reduction,
        threads,
    };
    config.validate()?;
    announce("ber", &s)?;

    let curves = run_ber(&config)?;
    emit(output.as_deref(), &ber_csv(&config, &curves))?;
    Ok(Outcome::Done)
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Reduce(a) => cmd_reduce(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Proximity(a) => cmd_proximity(a),
        Command::Ber(a) => cmd_ber(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => {
            eprintln!("error: bound violation detected");
            ExitCode::from(EXIT_VIOLATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_guard() { EXIT_GUARD } else { EXIT_USAGE })
        }
    }
}
