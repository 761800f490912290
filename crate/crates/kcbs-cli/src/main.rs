//! Command-line front end for the pentagon-inequality toolkit.
//!
//! Subcommands: `sweep` evaluates the coherent-state closed forms over an
//! intensity grid, `simulate` produces raw counter tables, `analyze` turns
//! counter tables into correlations and β, `mixture` sweeps
//! single-photon/partner mixtures under E3, and `threshold` solves for the
//! heralding efficiency a bound demands.
//!
//! Every option can come from (in order of precedence) the command line, a
//! KCBS_* environment variable, or a `--config` key = value file. CSV goes
//! to stdout unless `--out` is given; a one-line summary goes to stderr.
//! Exit codes: 0 success (for `analyze`: bound violated), 1 usage, 2 data
//! error, 3 numeric failure, 4 analysis completed without a violation.

mod config;
mod parse;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::Config;
use kcbs::analysis::{analyze, parse_counts_csv, report_csv, swap_detectors_1_3};
use kcbs::events::{coherent_beta_closed_form, eta_h_threshold, BETA_CLASSICAL_BOUND};
use kcbs::montecarlo::{counts_csv_string, simulate_counts, TrialConfig, DEFAULT_TRIGGERS};
use kcbs::network::all_contexts;
use kcbs::numeric::format_sig9;
use kcbs::quasiprob::{mixture_beta_curves, nonclassicality_witness, Verdict};

#[derive(Parser)]
#[command(
    name = "kcbs",
    version,
    about = "Pentagon-inequality toolkit: closed forms, click-model simulation, count-table analysis"
)]
struct Cli {
    /// Key = value config file supplying defaults for the subcommand.
    #[arg(long, global = true, env = "KCBS_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form beta and event probability across coherent intensities
    Sweep(SweepArgs),
    /// Simulate trigger-by-trigger clicks and emit the raw counter table
    Simulate(SimulateArgs),
    /// Analyze a counter table under an event class
    Analyze(AnalyzeArgs),
    /// Beta of (1-lambda) single-photon + lambda partner mixtures under E3
    Mixture(MixtureArgs),
    /// Heralding efficiency required to reach a bound
    Threshold(ThresholdArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated mean photon numbers
    #[arg(long, env = "KCBS_NBAR", value_name = "LIST")]
    nbar: Option<String>,
    /// Comma-separated events to evaluate (default e1,e2,e3)
    #[arg(long, env = "KCBS_EVENT", value_name = "LIST")]
    event: Option<String>,
    /// Detection efficiency (default 1)
    #[arg(long, env = "KCBS_ETA")]
    eta: Option<f64>,
    /// Output file (default stdout)
    #[arg(long, env = "KCBS_OUT", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Input state, e.g. fock:1, coherent:0.4, thermal:1, mixture:0.8*fock:0+0.2*fock:1
    #[arg(long, env = "KCBS_STATE")]
    state: Option<String>,
    /// Detection efficiency (default 1)
    #[arg(long, env = "KCBS_ETA")]
    eta: Option<f64>,
    #[arg(long, env = "KCBS_SEED")]
    seed: Option<u64>,
    /// Repeated series per context (default 1)
    #[arg(long, env = "KCBS_SERIES")]
    series: Option<u32>,
    /// Triggers per series (default 2591146)
    #[arg(long, env = "KCBS_TRIGGERS")]
    triggers: Option<u64>,
    /// Sample every state in the photon-number basis (cross-check mode)
    #[arg(long, env = "KCBS_FORCE_NUMBER_BASIS")]
    force_number_basis: bool,
    /// Comma-separated context indices (default 1,2,3,4,5)
    #[arg(long, env = "KCBS_CONTEXTS", value_name = "LIST")]
    contexts: Option<String>,
    /// Output file (default stdout)
    #[arg(long, env = "KCBS_OUT", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Counter table CSV
    #[arg(env = "KCBS_INPUT", value_name = "COUNTS_CSV")]
    input: Option<PathBuf>,
    /// Event class to condition on: e1, e2, or e3
    #[arg(long, env = "KCBS_EVENT")]
    event: Option<String>,
    /// Under e3, drop no-click triggers (heralded-source assumption)
    #[arg(long, env = "KCBS_FAIR_SAMPLING")]
    fair_sampling: bool,
    /// Swap detector labels 1 and 3 (for tables recorded with the opposite numbering)
    #[arg(long, env = "KCBS_RELABEL")]
    relabel: bool,
    /// Compare beta against this bound instead of -3
    #[arg(long, env = "KCBS_BOUND")]
    bound: Option<f64>,
    /// Output file (default stdout)
    #[arg(long, env = "KCBS_OUT", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixtureArgs {
    /// Partner state mixed with the single photon (default coherent:0)
    #[arg(long, env = "KCBS_PARTNER")]
    partner: Option<String>,
    /// Comma-separated mixing weights in [0,1]
    #[arg(long, env = "KCBS_LAMBDAS", value_name = "LIST")]
    lambdas: Option<String>,
    /// Uniform grid size on [0,1] when --lambdas is absent (default 21)
    #[arg(long, env = "KCBS_POINTS")]
    points: Option<usize>,
    /// Detection efficiency (default 1)
    #[arg(long, env = "KCBS_ETA")]
    eta: Option<f64>,
    /// Output file (default stdout)
    #[arg(long, env = "KCBS_OUT", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Bound to reach (default -3)
    #[arg(long, env = "KCBS_BOUND", allow_hyphen_values = true)]
    bound: Option<f64>,
    /// Output file (default stdout)
    #[arg(long, env = "KCBS_OUT", value_name = "PATH")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<kcbs::Error> for Failure {
    fn from(e: kcbs::Error) -> Failure {
        match e {
            kcbs::Error::Numeric { .. } | kcbs::Error::Truncation { .. } => {
                Failure::Numeric(e.to_string())
            }
            other => Failure::Data(other.to_string()),
        }
    }
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<Config, Failure> {
    match path {
        None => Ok(Config::empty()),
        Some(p) => Config::load(p, allowed).map_err(Failure::Data),
    }
}

/// CLI/env value if present, else the config value run through `parse`.
fn resolved<T>(
    cli: Option<T>,
    cfg: &Config,
    key: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, Failure> {
    if cli.is_some() {
        return Ok(cli);
    }
    match cfg.get(key) {
        Some(raw) => parse(raw)
            .map(Some)
            .map_err(|e| Failure::Data(format!("config key `{key}`: {e}"))),
        None => Ok(None),
    }
}

fn resolved_flag(cli: bool, cfg: &Config, key: &str) -> Result<bool, Failure> {
    if cli {
        return Ok(true);
    }
    Ok(resolved(None, cfg, key, |s| parse::parse_bool(s, key))?.unwrap_or(false))
}

fn require<T>(value: Option<T>, what: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("missing required value: {what}")))
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Failure::Data(format!("write {}: {e}", p.display()))),
    }
}

fn cmd_sweep(args: SweepArgs, cfg_path: &Option<PathBuf>) -> Result<i32, Failure> {
    let cfg = load_config(cfg_path, &["nbar", "event", "eta", "out"])?;
    let nbar_raw = require(
        resolved(args.nbar, &cfg, "nbar", |s| Ok(s.to_string()))?,
        "--nbar",
    )?;
    let nbars = parse::parse_f64_list(&nbar_raw, "nbar").map_err(Failure::Usage)?;
    let events = parse::parse_event_list(
        &resolved(args.event, &cfg, "event", |s| Ok(s.to_string()))?
            .unwrap_or_else(|| "e1,e2,e3".to_string()),
    )
    .map_err(Failure::Usage)?;
    let eta = resolved(args.eta, &cfg, "eta", |s| parse::parse_f64(s, "eta"))?.unwrap_or(1.0);
    let out = resolved(args.out, &cfg, "out", |s| Ok(PathBuf::from(s)))?;

    if !(0.0..=1.0).contains(&eta) {
        return Err(Failure::Data(format!("eta {eta} outside [0, 1]")));
    }
    let mut csv = String::from("nbar,event,beta,p_event\n");
    for &nbar in &nbars {
        for &ev in &events {
            let (beta, p_event) = coherent_beta_closed_form(eta * nbar, ev.definition())?;
            csv.push_str(&format!(
                "{},{},{},{}\n",
                format_sig9(nbar),
                ev.label().to_ascii_lowercase(),
                format_sig9(beta),
                format_sig9(p_event)
            ));
        }
    }
    emit(&out, &csv)?;
    eprintln!(
        "sweep: {} intensities x {} events at eta = {}",
        nbars.len(),
        events.len(),
        eta
    );
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs, cfg_path: &Option<PathBuf>) -> Result<i32, Failure> {
    let cfg = load_config(
        cfg_path,
        &[
            "state",
            "eta",
            "seed",
            "series",
            "triggers",
            "force_number_basis",
            "contexts",
            "out",
        ],
    )?;
    let state = resolved(args.state, &cfg, "state", |s| Ok(s.to_string()))?
        .unwrap_or_else(|| "fock:1".to_string());
    let state = parse::parse_state(&state).map_err(Failure::Data)?;
    let eta = resolved(args.eta, &cfg, "eta", |s| parse::parse_f64(s, "eta"))?.unwrap_or(1.0);
    let seed = resolved(args.seed, &cfg, "seed", |s| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| format!("seed `{s}` is not an integer"))
    })?
    .unwrap_or(1);
    let series = resolved(args.series, &cfg, "series", |s| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| format!("series `{s}` is not an integer"))
    })?
    .unwrap_or(1);
    let triggers = resolved(args.triggers, &cfg, "triggers", |s| {
        s.trim()
            .parse::<u64>()
            .map_err(|_| format!("triggers `{s}` is not an integer"))
    })?
    .unwrap_or(DEFAULT_TRIGGERS);
    let force_number_basis = resolved_flag(args.force_number_basis, &cfg, "force_number_basis")?;
    let contexts = match resolved(args.contexts, &cfg, "contexts", |s| Ok(s.to_string()))? {
        Some(list) => parse::parse_context_list(&list).map_err(Failure::Data)?,
        None => all_contexts().to_vec(),
    };
    let out = resolved(args.out, &cfg, "out", |s| Ok(PathBuf::from(s)))?;

    let config = TrialConfig {
        state,
        eta,
        contexts,
        triggers_per_series: triggers,
        series,
        seed,
        force_number_basis,
    };
    let rows = simulate_counts(&config)?;
    emit(&out, &counts_csv_string(&rows))?;
    eprintln!(
        "simulate: {} at eta = {}: {} contexts x {} series x {} triggers, seed {}",
        config.state.describe(),
        eta,
        config.contexts.len(),
        series,
        triggers,
        seed
    );
    Ok(0)
}

fn cmd_analyze(args: AnalyzeArgs, cfg_path: &Option<PathBuf>) -> Result<i32, Failure> {
    let cfg = load_config(
        cfg_path,
        &["input", "event", "fair_sampling", "relabel", "bound", "out"],
    )?;
    let input = require(
        resolved(args.input, &cfg, "input", |s| Ok(PathBuf::from(s)))?,
        "counts CSV path",
    )?;
    let event = parse::parse_event(&require(
        resolved(args.event, &cfg, "event", |s| Ok(s.to_string()))?,
        "--event",
    )?)
    .map_err(Failure::Usage)?;
    let fair_sampling = resolved_flag(args.fair_sampling, &cfg, "fair_sampling")?;
    let relabel = resolved_flag(args.relabel, &cfg, "relabel")?;
    let bound = resolved(args.bound, &cfg, "bound", |s| parse::parse_f64(s, "bound"))?;
    let out = resolved(args.out, &cfg, "out", |s| Ok(PathBuf::from(s)))?;

    let mut rows = parse_counts_csv(&input)?;
    if relabel {
        rows = swap_detectors_1_3(&rows);
    }
    let mut report = analyze(&rows, event, fair_sampling)?;
    if let Some(b) = bound {
        report = report.with_corrected_bound(b);
    }
    emit(&out, &report_csv(&report))?;

    let spread = report.uncertainty.as_ref().map_or(String::new(), |u| {
        format!(" +/- {} ({} series)", format_sig9(u.beta_stderr), u.series)
    });
    let verdict = if report.violates_bound() {
        "violated"
    } else {
        "not violated"
    };
    eprintln!(
        "analyze: event {}, fair sampling {}: beta = {}{}, bound {} {}",
        event.label(),
        if fair_sampling { "on" } else { "off" },
        format_sig9(report.beta),
        spread,
        format_sig9(report.effective_bound()),
        verdict
    );
    Ok(if report.violates_bound() { 0 } else { 4 })
}

fn cmd_mixture(args: MixtureArgs, cfg_path: &Option<PathBuf>) -> Result<i32, Failure> {
    let cfg = load_config(cfg_path, &["partner", "lambdas", "points", "eta", "out"])?;
    let partner = resolved(args.partner, &cfg, "partner", |s| Ok(s.to_string()))?
        .unwrap_or_else(|| "coherent:0".to_string());
    let partner = parse::parse_state(&partner).map_err(Failure::Data)?;
    let eta = resolved(args.eta, &cfg, "eta", |s| parse::parse_f64(s, "eta"))?.unwrap_or(1.0);
    let lambdas = resolved(args.lambdas, &cfg, "lambdas", |s| Ok(s.to_string()))?;
    let points = resolved(args.points, &cfg, "points", |s| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("points `{s}` is not an integer"))
    })?
    .unwrap_or(21);
    let out = resolved(args.out, &cfg, "out", |s| Ok(PathBuf::from(s)))?;

    let grid = match lambdas {
        Some(list) => parse::parse_f64_list(&list, "lambda").map_err(Failure::Usage)?,
        None => {
            if points < 2 {
                return Err(Failure::Usage("need at least 2 grid points".into()));
            }
            (0..points)
                .map(|k| k as f64 / (points - 1) as f64)
                .collect()
        }
    };
    let curve = mixture_beta_curves(&grid, &partner, eta)?;
    let mut csv = String::from("lambda,beta,witnessed\n");
    for p in &curve.points {
        let witnessed =
            nonclassicality_witness(p.beta_e3, BETA_CLASSICAL_BOUND) == Verdict::Witnessed;
        csv.push_str(&format!(
            "{},{},{}\n",
            format_sig9(p.lambda),
            format_sig9(p.beta_e3),
            witnessed
        ));
    }
    emit(&out, &csv)?;
    match curve.lambda_star {
        Some(ls) => eprintln!(
            "mixture: beta crosses {} at lambda* = {}",
            format_sig9(BETA_CLASSICAL_BOUND),
            format_sig9(ls)
        ),
        None => eprintln!("mixture: no crossing of the classical bound on [0, 1]"),
    }
    Ok(0)
}

fn cmd_threshold(args: ThresholdArgs, cfg_path: &Option<PathBuf>) -> Result<i32, Failure> {
    let cfg = load_config(cfg_path, &["bound", "out"])?;
    let bound = resolved(args.bound, &cfg, "bound", |s| parse::parse_f64(s, "bound"))?
        .unwrap_or(BETA_CLASSICAL_BOUND);
    let out = resolved(args.out, &cfg, "out", |s| Ok(PathBuf::from(s)))?;
    let eta_h = eta_h_threshold(bound);
    if !(-1e-12..=1.0 + 1e-12).contains(&eta_h) {
        return Err(Failure::Data(format!(
            "bound {bound} needs heralding efficiency {eta_h}, outside [0, 1]"
        )));
    }
    emit(&out, &format!("{}\n", format_sig9(eta_h)))?;
    eprintln!(
        "threshold: 5 - 4*sqrt(5)*eta_H = {} at eta_H = {}",
        bound,
        format_sig9(eta_h)
    );
    Ok(0)
}

fn run(cli: Cli) -> Result<i32, Failure> {
    match cli.command {
        Command::Sweep(args) => cmd_sweep(args, &cli.config),
        Command::Simulate(args) => cmd_simulate(args, &cli.config),
        Command::Analyze(args) => cmd_analyze(args, &cli.config),
        Command::Mixture(args) => cmd_mixture(args, &cli.config),
        Command::Threshold(args) => cmd_threshold(args, &cli.config),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            std::process::exit(failure.code());
        }
    }
}
