//! `lmpsh predict` — conditional-CIF predictions for covariate profiles over
//! a set of landmark times, with an optional bootstrap band and SVG curve.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use lmpsh::artifact::ModelArtifact;
use lmpsh::censoring::km_censoring;
use lmpsh::dataset::{to_counting_process, SubjectRecord, SurvivalDataset};
use lmpsh::fine_gray::{fit as fg_fit, predict_cif, FitOptions};
use lmpsh::landmark::{fit_landmark_psh, predict_conditional_cif};
use lmpsh::supermodel::fit_supermodel_on;

use crate::commands::fit::load_dataset;
use crate::manifest::{ensure_dir, RunManifest};
use crate::svg::{line_chart, Series};
use crate::{parse_landmarks, require, CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    /// Fitted model JSON from `lmpsh fit`.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Covariate profiles CSV; columns must match the model's covariates, an
    /// optional `profile` column names each row.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Landmark times: comma list or start:step:stop. For a plain PSH model
    /// these are horizon times.
    #[arg(long)]
    pub landmarks: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also draw the prediction curves.
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    pub svg: bool,
    /// Bootstrap replications for percentile confidence bands (needs --data).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Training data for the bootstrap refits.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub tdcov: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

struct Profile {
    name: String,
    values: Vec<f64>,
}

fn read_profiles(path: &PathBuf, covariates: &[String]) -> CliResult<Vec<Profile>> {
    let mut rdr = csv::Reader::from_path(path).map_err(lmpsh::Error::from)?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(lmpsh::Error::from)?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let name_ix = headers.iter().position(|h| h == "profile");
    let cov_ix: Vec<usize> = covariates
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| lmpsh::Error::MissingColumn(c.clone()).into())
        })
        .collect::<CliResult<_>>()?;
    let mut profiles = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(lmpsh::Error::from)?;
        let name = name_ix
            .and_then(|ix| record.get(ix))
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("p{}", i + 1));
        let values = cov_ix
            .iter()
            .map(|&ix| {
                record
                    .get(ix)
                    .unwrap_or("")
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| {
                        CliError::Core(lmpsh::Error::BadCell {
                            row: i + 1,
                            column: headers[ix].clone(),
                            value: record.get(ix).unwrap_or("").to_string(),
                        })
                    })
            })
            .collect::<CliResult<_>>()?;
        profiles.push(Profile { name, values });
    }
    if profiles.is_empty() {
        return Err(CliError::Core(lmpsh::Error::EmptyDataset));
    }
    Ok(profiles)
}

fn predict_one(artifact: &ModelArtifact, z: &[f64], s: f64) -> CliResult<f64> {
    match artifact {
        ModelArtifact::Psh(fit) => match fit.landmark {
            Some(spec) => {
                if (spec.s - s).abs() > 1e-9 {
                    return Err(CliError::Core(lmpsh::Error::LandmarkOutOfRange {
                        s,
                        lo: spec.s,
                        hi: spec.s,
                    }));
                }
                Ok(predict_conditional_cif(fit, z, spec)?)
            }
            None => Ok(predict_cif(fit, z, s)),
        },
        ModelArtifact::Supermodel(sup) => Ok(sup.predict(z, s, sup.w)?),
    }
}

fn refit_on(artifact: &ModelArtifact, ds: &SurvivalDataset) -> CliResult<ModelArtifact> {
    match artifact {
        ModelArtifact::Psh(fit) => match fit.landmark {
            Some(spec) => Ok(ModelArtifact::Psh(fit_landmark_psh(ds, spec)?)),
            None => {
                let g = km_censoring(ds);
                let cp = to_counting_process(ds, &g)?;
                Ok(ModelArtifact::Psh(fg_fit(&cp, &FitOptions::default())?))
            }
        },
        ModelArtifact::Supermodel(sup) => Ok(ModelArtifact::Supermodel(fit_supermodel_on(
            ds,
            &sup.grid,
            sup.w,
            &sup.basis,
            sup.variant,
        )?)),
    }
}

fn resample(ds: &SurvivalDataset, rng: &mut impl Rng) -> CliResult<SurvivalDataset> {
    let n = ds.n();
    let rows: Vec<SubjectRecord> = (0..n)
        .map(|i| {
            let mut r = ds.rows()[rng.gen_range(0..n)].clone();
            r.id = format!("b{i:06}");
            r
        })
        .collect();
    Ok(SurvivalDataset::new(rows, ds.covariate_names().to_vec())?)
}

pub fn run(args: PredictArgs) -> CliResult<()> {
    let model_path = require(args.model.clone(), "model")?;
    let profiles_path = require(args.profiles.clone(), "profiles")?;
    let landmarks = parse_landmarks(&require(args.landmarks.clone(), "landmarks")?)?;
    let out = require(args.out.clone(), "out")?;
    ensure_dir(&out)?;

    let artifact = ModelArtifact::read_json(&model_path)?;
    let profiles = read_profiles(&profiles_path, artifact.covariate_names())?;

    let mut manifest = RunManifest::new(&args, args.seed);
    manifest.input(&model_path);
    manifest.input(&profiles_path);

    // Point predictions.
    let mut estimates = vec![vec![0.0f64; landmarks.len()]; profiles.len()];
    for (pi, profile) in profiles.iter().enumerate() {
        for (si, &s) in landmarks.iter().enumerate() {
            estimates[pi][si] = predict_one(&artifact, &profile.values, s)?;
        }
    }

    // Optional percentile bootstrap band.
    let mut bands: Option<Vec<Vec<(f64, f64)>>> = None;
    if let Some(b) = args.bootstrap {
        let data = args.data.clone().ok_or_else(|| {
            CliError::Config("--bootstrap needs --data for the refits".into())
        })?;
        let ds = load_dataset(&data, args.tdcov.as_ref())?;
        manifest.input(&data);
        let mut rng = ChaCha12Rng::seed_from_u64(args.seed.unwrap_or(0));
        let mut draws = vec![vec![Vec::with_capacity(b); landmarks.len()]; profiles.len()];
        let mut failures = 0usize;
        for _ in 0..b {
            let sample = resample(&ds, &mut rng)?;
            match refit_on(&artifact, &sample) {
                Ok(refit) => {
                    for (pi, profile) in profiles.iter().enumerate() {
                        for (si, &s) in landmarks.iter().enumerate() {
                            if let Ok(v) = predict_one(&refit, &profile.values, s) {
                                draws[pi][si].push(v);
                            }
                        }
                    }
                }
                Err(_) => failures += 1,
            }
        }
        if failures > 0 {
            log::warn!("{failures} of {b} bootstrap refits failed and were dropped");
        }
        bands = Some(
            draws
                .into_iter()
                .map(|per_profile| {
                    per_profile
                        .into_iter()
                        .map(|mut v| {
                            if v.is_empty() {
                                return (f64::NAN, f64::NAN);
                            }
                            v.sort_by(f64::total_cmp);
                            let q = |p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
                            (q(0.025), q(0.975))
                        })
                        .collect()
                })
                .collect(),
        );
    }

    let csv_path = manifest.output(&out.join("predictions.csv"));
    let mut outf = std::io::BufWriter::new(
        std::fs::File::create(&csv_path).map_err(lmpsh::Error::from)?,
    );
    if bands.is_some() {
        writeln!(outf, "profile,s,estimate,lower,upper").map_err(lmpsh::Error::from)?;
    } else {
        writeln!(outf, "profile,s,estimate").map_err(lmpsh::Error::from)?;
    }
    for (pi, profile) in profiles.iter().enumerate() {
        for (si, &s) in landmarks.iter().enumerate() {
            match &bands {
                Some(bs) => writeln!(
                    outf,
                    "{},{s},{},{},{}",
                    profile.name, estimates[pi][si], bs[pi][si].0, bs[pi][si].1
                )
                .map_err(lmpsh::Error::from)?,
                None => writeln!(outf, "{},{s},{}", profile.name, estimates[pi][si])
                    .map_err(lmpsh::Error::from)?,
            }
        }
    }
    drop(outf);

    if args.svg {
        let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
        let series: Vec<Series> = profiles
            .iter()
            .enumerate()
            .map(|(pi, profile)| Series {
                label: profile.name.clone(),
                points: landmarks
                    .iter()
                    .enumerate()
                    .map(|(si, &s)| (s, estimates[pi][si]))
                    .collect(),
                color: palette[pi % palette.len()].to_string(),
                dashed: false,
            })
            .collect();
        let svg_path = manifest.output(&out.join("predictions.svg"));
        line_chart(
            &svg_path,
            "Predicted conditional cumulative incidence",
            "landmark s",
            "F(s+w | s)",
            &series,
        )?;
    }
    manifest.write(&out)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}
