//! `lmpsh simulate` — write benchmark datasets plus a generator manifest.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use lmpsh::simulate::{
    sim_setting1, sim_setting2, sim_tdcov, Censoring, Setting1Params, Setting2Params, TdCovParams,
};

use crate::manifest::{ensure_dir, RunManifest};
use crate::{require, CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Generator: 1, 2, or td.
    #[arg(long)]
    pub setting: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Total cause-1 mass parameter p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Weibull shape (α₁ or α₂ depending on the setting).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weibull rate (λ₁ or λ₂ depending on the setting).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta21: Option<f64>,
    #[arg(long)]
    pub beta22: Option<f64>,
    #[arg(long)]
    pub beta_c: Option<f64>,
    /// Uniform censoring upper bound.
    #[arg(long)]
    pub censor_bound: Option<f64>,
    /// Target censored fraction (bound solved internally).
    #[arg(long)]
    pub censor_frac: Option<f64>,
    #[arg(long)]
    pub onset_rate: Option<f64>,
    #[arg(long)]
    pub beta_td: Option<f64>,
    #[arg(long)]
    pub beta_td_competing: Option<f64>,
    #[arg(long)]
    pub competing_rate: Option<f64>,
}

#[derive(Serialize)]
struct GeneratorManifest<'a, P: Serialize> {
    setting: &'a str,
    params: P,
    seed: u64,
    n: usize,
}

fn censoring(args: &SimulateArgs) -> CliResult<Censoring> {
    match (args.censor_bound, args.censor_frac) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "--censor-bound and --censor-frac are mutually exclusive".into(),
        )),
        (Some(b), None) => Ok(Censoring::UniformBound(b)),
        (None, Some(q)) => Ok(Censoring::TargetFraction(q)),
        (None, None) => Ok(Censoring::None),
    }
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let setting = require(args.setting.clone(), "setting")?;
    let n = args.n.unwrap_or(1000);
    let seed = args.seed.unwrap_or(0);
    let out = require(args.out.clone(), "out")?;
    ensure_dir(&out)?;
    let mut manifest = RunManifest::new(&args, Some(seed));
    let data_path = manifest.output(&out.join("data.csv"));

    match setting.as_str() {
        "1" => {
            let mut params = Setting1Params::default();
            if let Some(v) = args.p {
                params.p = v;
            }
            if let Some(v) = args.alpha {
                params.alpha1 = v;
            }
            if let Some(v) = args.lambda {
                params.lambda1 = v;
            }
            if let Some(v) = args.beta1 {
                params.beta1 = v;
            }
            if let Some(v) = args.beta_c {
                params.beta_c = v;
            }
            params.censoring = censoring(&args)?;
            let ds = sim_setting1(n, &params, seed)?;
            ds.write_csv(&data_path)?;
            write_generator(&out, &mut manifest, "1", &params, seed, n)?;
        }
        "2" => {
            let mut params = Setting2Params::default();
            if let Some(v) = args.p {
                params.p = v;
            }
            if let Some(v) = args.alpha {
                params.alpha2 = v;
            }
            if let Some(v) = args.lambda {
                params.lambda2 = v;
            }
            if let Some(v) = args.beta21 {
                params.beta21 = v;
            }
            if let Some(v) = args.beta22 {
                params.beta22 = v;
            }
            if let Some(v) = args.beta_c {
                params.beta_c = v;
            }
            params.censoring = censoring(&args)?;
            let ds = sim_setting2(n, &params, seed)?;
            ds.write_csv(&data_path)?;
            write_generator(&out, &mut manifest, "2", &params, seed, n)?;
        }
        "td" => {
            let mut params = TdCovParams::default();
            if let Some(v) = args.p {
                params.base.p = v;
            }
            if let Some(v) = args.alpha {
                params.base.alpha2 = v;
            }
            if let Some(v) = args.lambda {
                params.base.lambda2 = v;
            }
            if let Some(v) = args.beta21 {
                params.base.beta21 = v;
            }
            if let Some(v) = args.beta22 {
                params.base.beta22 = v;
            }
            if let Some(v) = args.beta_c {
                params.base.beta_c = v;
            }
            if let Some(v) = args.onset_rate {
                params.onset_rate = v;
            }
            if let Some(v) = args.beta_td {
                params.beta_td = v;
            }
            if let Some(v) = args.beta_td_competing {
                params.beta_td_competing = v;
            }
            if let Some(v) = args.competing_rate {
                params.competing_rate = v;
            }
            params.base.censoring = censoring(&args)?;
            let ds = sim_tdcov(n, &params, seed)?;
            ds.write_csv(&data_path)?;
            let long_path = manifest.output(&out.join("data_long.csv"));
            ds.write_long_csv(&long_path)?;
            write_generator(&out, &mut manifest, "td", &params, seed, n)?;
        }
        other => {
            return Err(CliError::Config(format!(
                "--setting must be 1, 2, or td, got `{other}`"
            )))
        }
    }
    manifest.write(&out)?;
    println!("wrote {}", data_path.display());
    Ok(())
}

fn write_generator<P: Serialize>(
    out: &std::path::Path,
    manifest: &mut RunManifest,
    setting: &str,
    params: &P,
    seed: u64,
    n: usize,
) -> CliResult<()> {
    let path = manifest.output(&out.join("generator.json"));
    let file = std::fs::File::create(&path).map_err(lmpsh::Error::from)?;
    serde_json::to_writer_pretty(
        std::io::BufWriter::new(file),
        &GeneratorManifest {
            setting,
            params,
            seed,
            n,
        },
    )
    .map_err(lmpsh::Error::from)?;
    Ok(())
}
