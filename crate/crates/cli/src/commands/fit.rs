//! `lmpsh fit` — fit a model and write the exchange JSON plus a readable
//! coefficient report.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use lmpsh::artifact::ModelArtifact;
use lmpsh::censoring::km_censoring;
use lmpsh::dataset::{load_csv, to_counting_process, CsvSchema, SurvivalDataset};
use lmpsh::fine_gray::{fit as fg_fit, FitOptions, PSHFit};
use lmpsh::landmark::{fit_landmark_psh, LandmarkSpec};
use lmpsh::supermodel::{
    build_stacked, fit_supermodel_with, BasisSpec, SupermodelFit, Variant,
};

use crate::manifest::{ensure_dir, RunManifest};
use crate::{parse_grid, require, CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    /// Wide-format dataset `id,time,status,cause,<covariates...>`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Long-format time-dependent covariates `id,tstart,tstop,<covariates...>`.
    #[arg(long)]
    pub tdcov: Option<PathBuf>,
    /// psh | landmark-psh | supermodel.
    #[arg(long)]
    pub model: Option<String>,
    /// Landmark time (landmark-psh).
    #[arg(long)]
    pub s: Option<f64>,
    /// Prediction-window width.
    #[arg(long)]
    pub w: Option<f64>,
    /// Landmark grid start:step:stop (supermodel).
    #[arg(long)]
    pub grid: Option<String>,
    /// Basis: quad | lin | const (supermodel).
    #[arg(long)]
    pub basis: Option<String>,
    /// psh | cox (supermodel).
    #[arg(long)]
    pub variant: Option<String>,
    /// Stratify the supermodel baseline on the landmark.
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    pub stratified: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn load_dataset(data: &Path, tdcov: Option<&PathBuf>) -> CliResult<SurvivalDataset> {
    let schema = CsvSchema {
        long_covariates: tdcov.cloned(),
        ..CsvSchema::default()
    };
    Ok(load_csv(data, &schema)?)
}

pub fn parse_basis(name: Option<&str>, s0: f64) -> CliResult<BasisSpec> {
    match name.unwrap_or("quad") {
        "quad" => Ok(BasisSpec::quadratic(s0)),
        "lin" => Ok(BasisSpec::linear(s0)),
        "const" => Ok(BasisSpec {
            s0,
            ..BasisSpec::constant()
        }),
        other => Err(CliError::Config(format!(
            "--basis must be quad, lin, or const, got `{other}`"
        ))),
    }
}

pub fn parse_variant(name: Option<&str>) -> CliResult<Variant> {
    match name.unwrap_or("psh") {
        "psh" => Ok(Variant::Psh),
        "cox" => Ok(Variant::Cox),
        other => Err(CliError::Config(format!(
            "--variant must be psh or cox, got `{other}`"
        ))),
    }
}

pub fn run(args: FitArgs) -> CliResult<()> {
    let data = require(args.data.clone(), "data")?;
    let model = require(args.model.clone(), "model")?;
    let out = require(args.out.clone(), "out")?;
    ensure_dir(&out)?;
    let ds = load_dataset(&data, args.tdcov.as_ref())?;

    let mut manifest = RunManifest::new(&args, None);
    manifest.input(&data);
    if let Some(td) = &args.tdcov {
        manifest.input(td);
    }
    let model_path = manifest.output(&out.join("model.json"));
    let report_path = manifest.output(&out.join("fit_report.txt"));

    let artifact = match model.as_str() {
        "psh" => {
            let g = km_censoring(&ds);
            let cp = to_counting_process(&ds, &g)?;
            ModelArtifact::Psh(fg_fit(&cp, &FitOptions::default())?)
        }
        "landmark-psh" => {
            let s = require(args.s, "s")?;
            let w = require(args.w, "w")?;
            ModelArtifact::Psh(fit_landmark_psh(&ds, LandmarkSpec::new(s, w)?)?)
        }
        "supermodel" => {
            let grid = parse_grid(&require(args.grid.clone(), "grid")?)?;
            let w = require(args.w, "w")?;
            let basis = parse_basis(args.basis.as_deref(), grid[0])?;
            let variant = parse_variant(args.variant.as_deref())?;
            let stacked = build_stacked(&ds, &grid, w, &basis, variant)?;
            ModelArtifact::Supermodel(fit_supermodel_with(
                &stacked,
                &FitOptions::default(),
                args.stratified,
            )?)
        }
        other => {
            return Err(CliError::Config(format!(
                "--model must be psh, landmark-psh, or supermodel, got `{other}`"
            )))
        }
    };

    artifact.write_json(&model_path)?;
    let mut report = std::fs::File::create(&report_path).map_err(lmpsh::Error::from)?;
    match &artifact {
        ModelArtifact::Psh(f) => write_psh_report(&mut report, f)?,
        ModelArtifact::Supermodel(f) => write_supermodel_report(&mut report, f)?,
    }
    manifest.write(&out)?;
    println!("wrote {}", model_path.display());
    Ok(())
}

fn write_psh_report(out: &mut impl Write, fit: &PSHFit) -> CliResult<()> {
    let se = fit.robust_se();
    writeln!(out, "Proportional subdistribution hazards fit").map_err(lmpsh::Error::from)?;
    if let Some(lm) = fit.landmark {
        writeln!(out, "landmark s = {}, window w = {}", lm.s, lm.w)
            .map_err(lmpsh::Error::from)?;
    }
    writeln!(
        out,
        "subjects = {}, cause-1 events = {}, log-likelihood = {:.4}, converged = {} ({} iterations)",
        fit.n_subjects, fit.n_events, fit.loglik, fit.converged, fit.iterations
    )
    .map_err(lmpsh::Error::from)?;
    writeln!(out, "\n{:<24} {:>10} {:>10}", "covariate", "coef", "robust se")
        .map_err(lmpsh::Error::from)?;
    for (j, name) in fit.covariate_names.iter().enumerate() {
        writeln!(out, "{name:<24} {:>10.4} {:>10.4}", fit.beta[j], se[j])
            .map_err(lmpsh::Error::from)?;
    }
    Ok(())
}

fn write_supermodel_report(out: &mut impl Write, sup: &SupermodelFit) -> CliResult<()> {
    let fit = &sup.fit;
    let se = fit.robust_se();
    writeln!(
        out,
        "Landmark {} supermodel — grid [{}, {}] ({} points), window w = {}",
        match sup.variant {
            Variant::Psh => "PSH",
            Variant::Cox => "Cox",
        },
        sup.grid[0],
        sup.grid[sup.grid.len() - 1],
        sup.grid.len(),
        sup.w
    )
    .map_err(lmpsh::Error::from)?;
    writeln!(
        out,
        "subjects = {}, stacked cause-1 events = {}, converged = {} ({} iterations)",
        fit.n_subjects, fit.n_events, fit.converged, fit.iterations
    )
    .map_err(lmpsh::Error::from)?;

    writeln!(out, "\n{:<20} {:<10} {:>10} {:>10}", "covariate", "term", "coef", "robust se")
        .map_err(lmpsh::Error::from)?;
    let m = sup.m_f();
    for (c, name) in sup.covariate_names.iter().enumerate() {
        for (j, term) in sup.basis.f_terms.iter().enumerate() {
            let ix = c * m + j;
            writeln!(
                out,
                "{:<20} {:<10} {:>10.4} {:>10.4}",
                if j == 0 { name } else { "" },
                term.label(),
                fit.beta[ix],
                se[ix]
            )
            .map_err(lmpsh::Error::from)?;
        }
    }
    if !sup.basis.g_terms.is_empty() {
        writeln!(out, "{:<20}", "baseline parameters").map_err(lmpsh::Error::from)?;
        let offset = sup.covariate_names.len() * m;
        for (j, term) in sup.basis.g_terms.iter().enumerate() {
            writeln!(
                out,
                "{:<20} {:<10} {:>10.4} {:>10.4}",
                format!("  eta_{}", j + 1),
                term.label(),
                fit.beta[offset + j],
                se[offset + j]
            )
            .map_err(lmpsh::Error::from)?;
        }
    }

    if m > 1 {
        writeln!(out, "\nWald tests of the landmark-covariate interactions (robust covariance):")
            .map_err(lmpsh::Error::from)?;
        let terms: Vec<usize> = (1..m).collect();
        for name in &sup.covariate_names {
            match sup.wald_test(name, &terms) {
                Ok(test) => writeln!(
                    out,
                    "  {name:<18} chi2 = {:>8.3} (dof {}), p = {:.4}",
                    test.statistic, test.dof, test.p_value
                )
                .map_err(lmpsh::Error::from)?,
                Err(e) => writeln!(out, "  {name:<18} unavailable: {e}")
                    .map_err(lmpsh::Error::from)?,
            }
        }
    }
    Ok(())
}
