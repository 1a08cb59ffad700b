//! `lmpsh reproduce` — desk-scale re-runs of the simulation studies with
//! truth overlays, CSV + SVG outputs, and the corresponding acceptance checks
//! evaluated and reported.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use lmpsh::aalen_johansen::conditional_cif_np;
use lmpsh::censoring::km_censoring;
use lmpsh::dataset::{to_counting_process, SurvivalDataset};
use lmpsh::dynpred::DynamicModelSpec;
use lmpsh::fine_gray::{fit as fg_fit, FitOptions};
use lmpsh::landmark::{fit_landmark_psh, predict_conditional_cif, LandmarkSpec};
use lmpsh::metrics::{auc, brier, cross_validated_predictions, oe_ratio};
use lmpsh::simulate::{
    sim_setting1, sim_setting2, sim_tdcov, true_conditional_cif, Censoring, Setting1Params,
    Setting2Params, SettingParams, TdCovParams,
};
use lmpsh::supermodel::{fit_supermodel_on, BasisSpec, Variant};

use crate::manifest::{ensure_dir, RunManifest};
use crate::svg::{line_chart, Series};
use crate::{require, CliError, CliResult};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReproduceArgs {
    /// fig1 | fig2 | table1.
    pub target: Option<String>,
    /// Simulation replications.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Subjects per replication.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

const MAX_REPS: usize = 2000;
const MAX_N: usize = 200_000;

struct Accum {
    sum: f64,
    sum_sq: f64,
    n: usize,
}

impl Accum {
    fn new() -> Self {
        Accum {
            sum: 0.0,
            sum_sq: 0.0,
            n: 0,
        }
    }

    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sum_sq += x * x;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        self.sum / self.n.max(1) as f64
    }

    fn sd(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let m = self.mean();
        ((self.sum_sq - self.n as f64 * m * m) / (self.n as f64 - 1.0)).max(0.0).sqrt()
    }
}

struct Check {
    label: String,
    pass: bool,
}

fn write_checks(path: &Path, checks: &[Check]) -> CliResult<()> {
    let mut out = std::fs::File::create(path).map_err(lmpsh::Error::from)?;
    for c in checks {
        let line = format!("{}: {}", if c.pass { "PASS" } else { "FAIL" }, c.label);
        println!("{line}");
        writeln!(out, "{line}").map_err(lmpsh::Error::from)?;
    }
    Ok(())
}

pub fn run(args: ReproduceArgs) -> CliResult<()> {
    let target = require(args.target.clone(), "target (fig1 | fig2 | table1)")?;
    let out = require(args.out.clone(), "out")?;
    ensure_dir(&out)?;
    let seed = args.seed.unwrap_or(1);
    let reps = args.reps.unwrap_or(match target.as_str() {
        "fig1" => 200,
        _ => 100,
    });
    let n = args.n.unwrap_or(match target.as_str() {
        "table1" => 5000,
        _ => 1000,
    });
    if reps == 0 || reps > MAX_REPS || n == 0 || n > MAX_N {
        return Err(CliError::Config(format!(
            "budget out of range: reps must be in [1, {MAX_REPS}], n in [1, {MAX_N}]"
        )));
    }

    let mut manifest = RunManifest::new(&args, Some(seed));
    match target.as_str() {
        "fig1" => fig1(&out, &mut manifest, reps, n, seed)?,
        "fig2" => fig2(&out, &mut manifest, reps, n, seed)?,
        "table1" => table1(&out, &mut manifest, reps, n, seed)?,
        other => {
            return Err(CliError::Config(format!(
                "target must be fig1, fig2, or table1, got `{other}`"
            )))
        }
    }
    manifest.write(&out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Figure 1: predicted conditional CIF curves vs truth
// ---------------------------------------------------------------------------

const METHODS: [&str; 5] = ["np", "psh", "lm-psh", "lm-psh-super", "lm-cox-super"];

#[allow(clippy::too_many_arguments)]
fn fig1_one_setting(
    out: &Path,
    manifest: &mut RunManifest,
    label: &str,
    setting: &SettingParams,
    sim: &dyn Fn(u64) -> SurvivalDataset,
    plot: &[f64],
    fine_grid: &[f64],
    w: f64,
    reps: usize,
    seed0: u64,
    checks: &mut Vec<Check>,
) -> CliResult<()> {
    let arms = [0.0, 1.0];
    let cells = plot.len() * arms.len();
    let mut acc: Vec<Vec<Accum>> = (0..METHODS.len())
        .map(|_| (0..cells).map(|_| Accum::new()).collect())
        .collect();
    let basis = BasisSpec::quadratic(fine_grid[0]);

    for rep in 0..reps {
        let ds = sim(seed0 + rep as u64);
        // Nonparametric reference and the standard PSH model.
        let g = km_censoring(&ds);
        let psh_fit = to_counting_process(&ds, &g)
            .ok()
            .and_then(|cp| fg_fit(&cp, &FitOptions::default()).ok());
        for (si, &s) in plot.iter().enumerate() {
            for (ai, &z) in arms.iter().enumerate() {
                let cell = si * 2 + ai;
                let arm = ds.filter(|r| r.covariates.at(s)[0] == z);
                if let Ok(arm) = arm {
                    if let Ok(v) = conditional_cif_np(&arm, s, w, 1) {
                        acc[0][cell].push(v);
                    }
                }
                if let Some(f) = &psh_fit {
                    let lp = f.beta[0] * z;
                    let mass = f.baseline.increment(s, s + w).max(0.0);
                    acc[1][cell].push((1.0 - (-(lp.exp() * mass)).exp()).clamp(0.0, 1.0));
                }
            }
        }
        // Landmark PSH models.
        for (si, &s) in plot.iter().enumerate() {
            if let Ok(spec) = LandmarkSpec::new(s, w) {
                if let Ok(f) = fit_landmark_psh(&ds, spec) {
                    if f.converged {
                        for (ai, &z) in arms.iter().enumerate() {
                            if let Ok(v) = predict_conditional_cif(&f, &[z], spec) {
                                acc[2][si * 2 + ai].push(v);
                            }
                        }
                    }
                }
            }
        }
        // Supermodels.
        for (mi, variant) in [(3usize, Variant::Psh), (4usize, Variant::Cox)] {
            if let Ok(sup) = fit_supermodel_on(&ds, fine_grid, w, &basis, variant) {
                if sup.fit.converged {
                    for (si, &s) in plot.iter().enumerate() {
                        for (ai, &z) in arms.iter().enumerate() {
                            if let Ok(v) = sup.predict(&[z], s, w) {
                                acc[mi][si * 2 + ai].push(v);
                            }
                        }
                    }
                }
            }
        }
    }

    // CSV with truth overlay.
    let csv_path = manifest.output(&out.join(format!("fig1_{label}.csv")));
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(&csv_path).map_err(lmpsh::Error::from)?,
    );
    writeln!(f, "method,z,s,mean,sd,reps_used,truth").map_err(lmpsh::Error::from)?;
    for (mi, method) in METHODS.iter().enumerate() {
        for (si, &s) in plot.iter().enumerate() {
            for (ai, &z) in arms.iter().enumerate() {
                let a = &acc[mi][si * 2 + ai];
                let truth = true_conditional_cif(setting, z, s, w);
                writeln!(
                    f,
                    "{method},{z},{s},{},{},{},{truth}",
                    a.mean(),
                    a.sd(),
                    a.n
                )
                .map_err(lmpsh::Error::from)?;
            }
        }
    }
    drop(f);

    // One SVG per arm, paper-style.
    for (ai, &z) in arms.iter().enumerate() {
        let mut series = vec![Series {
            label: "true".into(),
            points: plot
                .iter()
                .map(|&s| (s, true_conditional_cif(setting, z, s, w)))
                .collect(),
            color: "#000000".into(),
            dashed: false,
        }];
        let colors = ["#7f7f7f", "#d62728", "#1f77b4", "#2ca02c", "#ff7f0e"];
        for (mi, method) in METHODS.iter().enumerate() {
            series.push(Series {
                label: method.to_string(),
                points: plot
                    .iter()
                    .enumerate()
                    .map(|(si, &s)| (s, acc[mi][si * 2 + ai].mean()))
                    .collect(),
                color: colors[mi].into(),
                dashed: mi == 1 || mi == 4,
            });
        }
        let svg_path = manifest.output(&out.join(format!("fig1_{label}_z{}.svg", ai)));
        line_chart(
            &svg_path,
            &format!("Conditional CIF over w = {w} ({label}, Z = {z})"),
            "landmark s",
            "F(s+w | s)",
            &series,
        )?;
    }

    // Acceptance-style checks.
    let mut worst_lm: f64 = 0.0;
    let mut worst_super: f64 = 0.0;
    let mut cox_over = 0usize;
    for (si, &s) in plot.iter().enumerate() {
        let mut landmark_over = false;
        for (ai, &z) in arms.iter().enumerate() {
            let truth = true_conditional_cif(setting, z, s, w);
            let cell = si * 2 + ai;
            worst_lm = worst_lm.max((acc[2][cell].mean() - truth).abs());
            worst_super = worst_super.max((acc[3][cell].mean() - truth).abs());
            landmark_over |= acc[4][cell].mean() - truth > 0.02;
        }
        cox_over += usize::from(landmark_over);
    }
    checks.push(Check {
        label: format!(
            "{label}: mean LM-PSH curve within 0.02 of truth (worst {worst_lm:.4})"
        ),
        pass: worst_lm < 0.02,
    });
    checks.push(Check {
        label: format!(
            "{label}: mean LM-PSH-Super curve within 0.02 of truth (worst {worst_super:.4})"
        ),
        pass: worst_super < 0.02,
    });
    let _ = cells;
    checks.push(Check {
        label: format!(
            "{label}: Cox-variant supermodel overestimates by > 0.02 at {cox_over}/{} landmarks",
            plot.len()
        ),
        pass: 2 * cox_over >= plot.len(),
    });
    Ok(())
}

fn fig1(
    out: &Path,
    manifest: &mut RunManifest,
    reps: usize,
    n: usize,
    seed: u64,
) -> CliResult<()> {
    let mut checks = Vec::new();
    let p1 = Setting1Params {
        censoring: Censoring::UniformBound(12.0),
        ..Setting1Params::default()
    };
    fig1_one_setting(
        out,
        manifest,
        "setting1",
        &SettingParams::One(p1),
        &|s| sim_setting1(n, &p1, s).expect("valid params"),
        &(0..=9).map(|i| 0.5 * i as f64).collect::<Vec<_>>(),
        &(0..=50).map(|i| 0.1 * i as f64).collect::<Vec<_>>(),
        3.0,
        reps,
        seed * 1_000_003,
        &mut checks,
    )?;
    let p2 = Setting2Params {
        censoring: Censoring::UniformBound(10.0),
        ..Setting2Params::default()
    };
    fig1_one_setting(
        out,
        manifest,
        "setting2",
        &SettingParams::Two(p2),
        &|s| sim_setting2(n, &p2, s).expect("valid params"),
        &(0..=6).map(|i| 0.5 * i as f64).collect::<Vec<_>>(),
        &(0..=40).map(|i| 0.1 * i as f64).collect::<Vec<_>>(),
        3.0,
        reps,
        seed * 2_000_003,
        &mut checks,
    )?;
    let checks_path = manifest.output(&out.join("checks.txt"));
    write_checks(&checks_path, &checks)
}

// ---------------------------------------------------------------------------
// Figure 2: cross-validated relative prediction-error increments
// ---------------------------------------------------------------------------

fn fig2(
    out: &Path,
    manifest: &mut RunManifest,
    reps: usize,
    n: usize,
    seed: u64,
) -> CliResult<()> {
    let params = Setting2Params {
        censoring: Censoring::UniformBound(10.0),
        ..Setting2Params::default()
    };
    let landmarks: Vec<f64> = (0..=6).map(|i| 0.5 * i as f64).collect();
    let w = 2.0;
    let specs: Vec<(&str, DynamicModelSpec)> = vec![
        ("lm-psh", DynamicModelSpec::LandmarkPsh),
        ("psh", DynamicModelSpec::StandardPsh),
        (
            "lm-psh-super",
            DynamicModelSpec::Supermodel {
                grid: (0..=30).map(|i| 0.1 * i as f64).collect(),
                basis: BasisSpec::quadratic(0.0),
                variant: Variant::Psh,
            },
        ),
    ];

    let mut incr: Vec<Vec<Accum>> = (0..specs.len())
        .map(|_| (0..landmarks.len()).map(|_| Accum::new()).collect())
        .collect();
    let mut used = 0usize;
    for rep in 0..reps {
        let ds = sim_setting2(n, &params, seed * 3_000_017 + rep as u64).unwrap();
        let cv_seed = 555 + rep as u64;
        let np = match cross_validated_predictions(
            &ds,
            &DynamicModelSpec::NonParametric,
            3,
            &landmarks,
            w,
            cv_seed,
        ) {
            Ok(preds) => preds
                .iter()
                .map(|ps| brier(&ds, ps))
                .collect::<Result<Vec<_>, _>>(),
            Err(e) => Err(e),
        };
        let Ok(np) = np else { continue };
        let mut rep_incr = Vec::new();
        let mut ok = true;
        for (_, spec) in &specs {
            match cross_validated_predictions(&ds, spec, 3, &landmarks, w, cv_seed) {
                Ok(preds) => {
                    let bs: Result<Vec<f64>, _> =
                        preds.iter().map(|ps| brier(&ds, ps)).collect();
                    match bs {
                        Ok(bs) => rep_incr.push(
                            bs.iter()
                                .zip(&np)
                                .map(|(b, r)| (b - r) / r)
                                .collect::<Vec<f64>>(),
                        ),
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        used += 1;
        for (mi, per_landmark) in rep_incr.into_iter().enumerate() {
            for (li, v) in per_landmark.into_iter().enumerate() {
                incr[mi][li].push(v);
            }
        }
    }

    let csv_path = manifest.output(&out.join("fig2.csv"));
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(&csv_path).map_err(lmpsh::Error::from)?,
    );
    writeln!(f, "method,s,mean_relative_increment,sd,reps_used").map_err(lmpsh::Error::from)?;
    for (mi, (name, _)) in specs.iter().enumerate() {
        for (li, &s) in landmarks.iter().enumerate() {
            let a = &incr[mi][li];
            writeln!(f, "{name},{s},{},{},{}", a.mean(), a.sd(), a.n)
                .map_err(lmpsh::Error::from)?;
        }
    }
    drop(f);

    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    let series: Vec<Series> = specs
        .iter()
        .enumerate()
        .map(|(mi, (name, _))| Series {
            label: name.to_string(),
            points: landmarks
                .iter()
                .enumerate()
                .map(|(li, &s)| (s, incr[mi][li].mean()))
                .collect(),
            color: colors[mi].into(),
            dashed: *name == "psh",
        })
        .collect();
    let svg_path = manifest.output(&out.join("fig2.svg"));
    line_chart(
        &svg_path,
        "Relative increment of CV prediction error vs nonparametric reference",
        "landmark s",
        "relative Brier increment",
        &series,
    )?;

    let worst_lm = (0..landmarks.len())
        .map(|li| incr[0][li].mean().abs())
        .fold(0.0f64, f64::max);
    let late = landmarks.len() - 2..landmarks.len();
    let late_ok = late
        .clone()
        .all(|li| incr[1][li].mean() > 0.0 && incr[1][li].mean() > incr[0][li].mean());
    let checks = vec![
        Check {
            label: format!("LM-PSH relative increment within ±0.05 (worst {worst_lm:.4})"),
            pass: worst_lm <= 0.05,
        },
        Check {
            label: "standard-PSH increment positive and above LM-PSH at late landmarks".into(),
            pass: late_ok,
        },
        Check {
            label: format!("{used}/{reps} replications usable"),
            pass: used * 10 >= reps * 9,
        },
    ];
    let checks_path = manifest.output(&out.join("checks.txt"));
    write_checks(&checks_path, &checks)
}

// ---------------------------------------------------------------------------
// Table 1: O/E, Brier, AUC for the supermodels under the substitute generator
// ---------------------------------------------------------------------------

fn table1(
    out: &Path,
    manifest: &mut RunManifest,
    reps: usize,
    n: usize,
    seed: u64,
) -> CliResult<()> {
    let mut params = TdCovParams::default();
    params.base.censoring = Censoring::UniformBound(8.0);
    let landmarks: Vec<f64> = (0..7).map(|i| 2.4 + 0.2 * i as f64).collect();
    let fine_grid: Vec<f64> = (0..=40).map(|i| 0.1 * i as f64).collect();
    let w = 0.4;
    let basis = BasisSpec::quadratic(0.0);
    let variants = [("lm-psh-super", Variant::Psh), ("lm-cox-super", Variant::Cox)];

    // [variant][landmark][metric: oe, brier, auc]
    let mut acc: Vec<Vec<[Accum; 3]>> = (0..2)
        .map(|_| {
            (0..landmarks.len())
                .map(|_| [Accum::new(), Accum::new(), Accum::new()])
                .collect()
        })
        .collect();
    let mut used = 0usize;
    for rep in 0..reps {
        let ds = sim_tdcov(n, &params, seed * 5_000_011 + rep as u64).unwrap();
        let g = km_censoring(&ds);
        let mut rep_vals = Vec::new();
        let mut ok = true;
        for (vi, (_, variant)) in variants.iter().enumerate() {
            let spec = DynamicModelSpec::Supermodel {
                grid: fine_grid.clone(),
                basis: basis.clone(),
                variant: *variant,
            };
            match cross_validated_predictions(&ds, &spec, 3, &landmarks, w, 77 + rep as u64) {
                Ok(preds) => {
                    for (li, ps) in preds.iter().enumerate() {
                        let vals = (
                            oe_ratio(&ds, ps),
                            brier(&ds, ps),
                            auc(&ds, ps, &g),
                        );
                        match vals {
                            (Ok(a), Ok(b), Ok(c)) => rep_vals.push((vi, li, a, b, c)),
                            _ => {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                Err(_) => ok = false,
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue;
        }
        used += 1;
        for (vi, li, a, b, c) in rep_vals {
            acc[vi][li][0].push(a);
            acc[vi][li][1].push(b);
            acc[vi][li][2].push(c);
        }
    }

    let csv_path = manifest.output(&out.join("table1.csv"));
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(&csv_path).map_err(lmpsh::Error::from)?,
    );
    writeln!(f, "model,landmark,metric,mean,replication_sd,reps_used")
        .map_err(lmpsh::Error::from)?;
    for (vi, (name, _)) in variants.iter().enumerate() {
        for (li, &s) in landmarks.iter().enumerate() {
            for (mi, metric) in ["oe_ratio", "brier", "auc"].iter().enumerate() {
                let a = &acc[vi][li][mi];
                writeln!(f, "{name},{s},{metric},{},{},{}", a.mean(), a.sd(), a.n)
                    .map_err(lmpsh::Error::from)?;
            }
        }
    }
    drop(f);

    // Rendered table, entries ×100 like the paper's layout.
    let txt_path = manifest.output(&out.join("table1.txt"));
    let mut t = std::fs::File::create(&txt_path).map_err(lmpsh::Error::from)?;
    for (vi, (name, _)) in variants.iter().enumerate() {
        writeln!(t, "{name} (entries ×100, replication SD in parentheses)")
            .map_err(lmpsh::Error::from)?;
        writeln!(
            t,
            "{:>9} {:>18} {:>18} {:>18}",
            "landmark", "O/E (sd)", "Brier (sd)", "AUC (sd)"
        )
        .map_err(lmpsh::Error::from)?;
        for (li, &s) in landmarks.iter().enumerate() {
            let cell = |mi: usize| {
                format!(
                    "{:.3} ({:.3})",
                    acc[vi][li][mi].mean() * 100.0,
                    acc[vi][li][mi].sd() * 100.0
                )
            };
            writeln!(t, "{s:>9} {:>18} {:>18} {:>18}", cell(0), cell(1), cell(2))
                .map_err(lmpsh::Error::from)?;
        }
        writeln!(t).map_err(lmpsh::Error::from)?;
    }
    drop(t);

    let mut checks = Vec::new();
    let mut calibrated = true;
    let mut discriminates = true;
    let mut dominates = true;
    for li in 0..landmarks.len() {
        let oe_psh = acc[0][li][0].mean();
        let oe_cox = acc[1][li][0].mean();
        calibrated &= (0.85..=1.15).contains(&oe_psh);
        discriminates &= acc[0][li][2].mean() > 0.6;
        dominates &= (oe_psh - 1.0).abs() < (oe_cox - 1.0).abs();
    }
    checks.push(Check {
        label: "LM-PSH-Super mean O/E within [0.85, 1.15] at every landmark".into(),
        pass: calibrated,
    });
    checks.push(Check {
        label: "LM-PSH-Super mean AUC > 0.6 at every landmark".into(),
        pass: discriminates,
    });
    checks.push(Check {
        label: "LM-PSH-Super strictly dominates the Cox variant on O/E calibration".into(),
        pass: dominates,
    });
    checks.push(Check {
        label: format!("{used}/{reps} replications usable"),
        pass: used * 10 >= reps * 9,
    });
    let checks_path = manifest.output(&out.join("checks.txt"));
    write_checks(&checks_path, &checks)
}
