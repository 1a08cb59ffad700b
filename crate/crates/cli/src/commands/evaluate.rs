//! `lmpsh evaluate` — k-fold cross-validated Brier / O-E / AUC for a model
//! specification on a dataset.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use lmpsh::dynpred::DynamicModelSpec;
use lmpsh::metrics::{cross_validate, write_metric_csv};

use crate::commands::fit::{load_dataset, parse_basis, parse_variant};
use crate::manifest::{ensure_dir, RunManifest};
use crate::{parse_grid, parse_landmarks, require, CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub tdcov: Option<PathBuf>,
    /// np | psh | landmark-psh | supermodel.
    #[arg(long)]
    pub model: Option<String>,
    /// Number of folds.
    #[arg(long)]
    pub k: Option<usize>,
    /// Landmarks to score at (comma list or start:step:stop).
    #[arg(long)]
    pub landmarks: Option<String>,
    #[arg(long)]
    pub w: Option<f64>,
    /// Supermodel grid start:step:stop.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let data = require(args.data.clone(), "data")?;
    let model = require(args.model.clone(), "model")?;
    let landmarks = parse_landmarks(&require(args.landmarks.clone(), "landmarks")?)?;
    let w = require(args.w, "w")?;
    let k = args.k.unwrap_or(3);
    let seed = args.seed.unwrap_or(0);
    let out = require(args.out.clone(), "out")?;
    ensure_dir(&out)?;

    let ds = load_dataset(&data, args.tdcov.as_ref())?;
    let spec = match model.as_str() {
        "np" => DynamicModelSpec::NonParametric,
        "psh" => DynamicModelSpec::StandardPsh,
        "landmark-psh" => DynamicModelSpec::LandmarkPsh,
        "supermodel" => {
            let grid = parse_grid(&require(args.grid.clone(), "grid")?)?;
            DynamicModelSpec::Supermodel {
                basis: parse_basis(args.basis.as_deref(), grid[0])?,
                grid,
                variant: parse_variant(args.variant.as_deref())?,
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "--model must be np, psh, landmark-psh, or supermodel, got `{other}`"
            )))
        }
    };

    let rows = cross_validate(&ds, &spec, k, &landmarks, w, seed)?;

    let mut manifest = RunManifest::new(&args, Some(seed));
    manifest.input(&data);
    let csv_path = manifest.output(&out.join("metrics.csv"));
    write_metric_csv(&rows, &csv_path)?;
    manifest.write(&out)?;

    println!("{k}-fold cross-validated metrics (entries ×100):");
    println!("{:>8} {:>12} {:>12} {:>12}", "landmark", "O/E", "Brier", "AUC");
    for &s in &landmarks {
        let get = |metric: &str| {
            rows.iter()
                .find(|r| r.landmark == s && r.metric == metric)
                .map(|r| r.estimate * 100.0)
                .unwrap_or(f64::NAN)
        };
        println!(
            "{s:>8} {:>12.3} {:>12.3} {:>12.3}",
            get("oe_ratio"),
            get("brier"),
            get("auc")
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}
