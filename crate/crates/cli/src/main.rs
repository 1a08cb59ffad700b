//! `lmpsh` — landmark PSH dynamic prediction for competing risks:
//! simulate benchmark data, fit models, predict conditional cumulative
//! incidences, evaluate predictive performance, and reproduce the simulation
//! studies at desk scale.

mod commands;
mod manifest;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{evaluate, fit, predict, reproduce, simulate};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags/config (exit 2).
    Config(String),
    /// Everything surfaced by the library (exit 3 or 4 by kind).
    Core(lmpsh::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<lmpsh::Error> for CliError {
    fn from(e: lmpsh::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn exit_code(e: &CliError) -> u8 {
    use lmpsh::Error as E;
    match e {
        CliError::Config(_) => 2,
        CliError::Core(core) => match core {
            E::InvalidParameter(_)
            | E::BasisNotIdentifiable { .. }
            | E::WindowMismatch { .. }
            | E::LandmarkOutOfRange { .. }
            | E::LandmarkMismatch { .. }
            | E::UnknownCovariate(_) => 2,
            E::Io(_)
            | E::Csv(_)
            | E::Json(_)
            | E::MissingColumn(_)
            | E::BadCell { .. }
            | E::NonPositiveTime(_)
            | E::StatusCauseMismatch(_)
            | E::BadCovariateIntervals(_)
            | E::DuplicateId(_)
            | E::UnknownCause(_)
            | E::EmptyDataset
            | E::EmptyRiskSet(_)
            | E::TooFewForJackknife(_)
            | E::PredictionMismatch(_)
            | E::CovariateMismatch(_)
            | E::BadFold(_) => 3,
            E::NoMainEvents
            | E::RankDeficient(_)
            | E::SingularInformation
            | E::DivergentLinearPredictor
            | E::InvalidCensoringSurvival
            | E::UnsortedStepTimes
            | E::DegenerateAuc
            | E::ZeroExpectedCount => 4,
        },
    }
}

#[derive(Parser)]
#[command(
    name = "lmpsh",
    version,
    about = "Landmark proportional subdistribution hazards models for dynamic prediction"
)]
struct Cli {
    /// Worker threads for replications and folds.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML config file with one table per subcommand; flags win over file
    /// values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark competing-risks data from the built-in generators.
    Simulate(simulate::SimulateArgs),
    /// Fit a PSH model, a landmark PSH model, or a landmark supermodel.
    Fit(fit::FitArgs),
    /// Predict conditional cumulative incidences from a fitted model.
    Predict(predict::PredictArgs),
    /// Cross-validated Brier / O-E / AUC for a model specification.
    Evaluate(evaluate::EvaluateArgs),
    /// Re-run a simulation study at desk scale and report its checks.
    Reproduce(reproduce::ReproduceArgs),
}

/// Overlay CLI flags (non-null wins) onto the matching config-file table.
pub fn merge_config<T: serde::Serialize + serde::de::DeserializeOwned>(
    args: T,
    config: Option<&toml::Table>,
    section: &str,
) -> CliResult<T> {
    let Some(table) = config.and_then(|t| t.get(section)) else {
        return Ok(args);
    };
    let base = serde_json::to_value(table.clone())
        .map_err(|e| CliError::Config(format!("bad config section [{section}]: {e}")))?;
    let over = serde_json::to_value(&args).expect("args serialize");
    let merged = overlay(base, over);
    serde_json::from_value(merged)
        .map_err(|e| CliError::Config(format!("bad config section [{section}]: {e}")))
}

fn overlay(base: serde_json::Value, over: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match (base, over) {
        (Value::Object(b), Value::Object(mut o)) => {
            let mut out = serde_json::Map::new();
            for (k, bv) in b {
                let ov = o.remove(&k);
                match ov {
                    Some(Value::Null) | None => {
                        out.insert(k, bv);
                    }
                    Some(other) => {
                        out.insert(k, overlay(bv, other));
                    }
                }
            }
            out.extend(o);
            Value::Object(out)
        }
        (b, Value::Null) => b,
        (_, o) => o,
    }
}

fn load_config(path: Option<&PathBuf>) -> CliResult<Option<toml::Table>> {
    let Some(path) = path else { return Ok(None) };
    let raw = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    raw.parse::<toml::Table>()
        .map(Some)
        .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))
}

/// Parse `start:step:stop` into an inclusive grid.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "grid must be start:step:stop, got `{spec}`"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad grid number `{p}`")))
        })
        .collect::<CliResult<_>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || stop < start {
        return Err(CliError::Config(format!("degenerate grid `{spec}`")));
    }
    let count = ((stop - start) / step).round() as usize;
    Ok((0..=count).map(|i| start + step * i as f64).collect())
}

/// Landmarks given either as a comma list or as grid syntax.
pub fn parse_landmarks(spec: &str) -> CliResult<Vec<f64>> {
    if spec.contains(':') {
        return parse_grid(spec);
    }
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad landmark `{p}`")))
        })
        .collect()
}

pub fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Config(format!("--{flag} is required")))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure --jobs: {e}")))?;
    }
    let config = load_config(cli.config.as_ref())?;
    match cli.command {
        Command::Simulate(args) => simulate::run(merge_config(args, config.as_ref(), "simulate")?),
        Command::Fit(args) => fit::run(merge_config(args, config.as_ref(), "fit")?),
        Command::Predict(args) => predict::run(merge_config(args, config.as_ref(), "predict")?),
        Command::Evaluate(args) => evaluate::run(merge_config(args, config.as_ref(), "evaluate")?),
        Command::Reproduce(args) => {
            reproduce::run(merge_config(args, config.as_ref(), "reproduce")?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
