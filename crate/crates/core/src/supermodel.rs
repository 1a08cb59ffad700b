//! The landmark PSH supermodel: landmark subsets over a grid stacked into one
//! counting-process dataset, coefficients and baseline varying smoothly in the
//! landmark time through basis functions, fitted by a single weighted
//! Fine-Gray call with a subject-clustered sandwich variance.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::censoring::km_censoring;
use crate::dataset::{
    to_counting_process_from, CountingProcessTable, CpRow, RiskSetStyle, SurvivalDataset,
};
use crate::error::{Error, Result};
use crate::fine_gray::{fit_stratified, FitOptions, PSHFit};
use crate::landmark::{landmark_subset, LandmarkSpec};
use crate::linalg;
use crate::step::StepFunction;

/// One shifted-power basis term `(s - shift)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub shift: f64,
    pub exponent: u32,
}

impl PolyTerm {
    pub fn eval(&self, s: f64) -> f64 {
        (s - self.shift).powi(self.exponent as i32)
    }

    pub fn label(&self) -> String {
        let base = if self.shift == 0.0 {
            "s".to_string()
        } else {
            format!("(s-{})", self.shift)
        };
        match self.exponent {
            0 => "1".to_string(),
            1 => base,
            e => format!("{base}^{e}"),
        }
    }
}

/// Basis functions for the landmark-varying coefficients `β_LM(s) = Σ θ_j f_j(s)`
/// and baseline inflation `γ(s) = Σ η_j g_j(s)`; every g term must vanish at
/// the grid origin `s0` so the baseline stays identifiable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub f_terms: Vec<PolyTerm>,
    pub g_terms: Vec<PolyTerm>,
    pub s0: f64,
}

impl BasisSpec {
    /// The default quadratic basis: f = {1, s, s²}, g = {(s−s0), (s−s0)²}.
    pub fn quadratic(s0: f64) -> Self {
        BasisSpec {
            f_terms: vec![
                PolyTerm { shift: 0.0, exponent: 0 },
                PolyTerm { shift: 0.0, exponent: 1 },
                PolyTerm { shift: 0.0, exponent: 2 },
            ],
            g_terms: vec![
                PolyTerm { shift: s0, exponent: 1 },
                PolyTerm { shift: s0, exponent: 2 },
            ],
            s0,
        }
    }

    /// Linear variant: f = {1, s}, g = {(s−s0)}.
    pub fn linear(s0: f64) -> Self {
        BasisSpec {
            f_terms: vec![
                PolyTerm { shift: 0.0, exponent: 0 },
                PolyTerm { shift: 0.0, exponent: 1 },
            ],
            g_terms: vec![PolyTerm { shift: s0, exponent: 1 }],
            s0,
        }
    }

    /// Constant-coefficient, single-landmark degenerate basis: f = {1}, g = {}.
    pub fn constant() -> Self {
        BasisSpec {
            f_terms: vec![PolyTerm { shift: 0.0, exponent: 0 }],
            g_terms: Vec::new(),
            s0: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_terms.is_empty() {
            return Err(Error::InvalidParameter(
                "basis needs at least one f term".into(),
            ));
        }
        for (index, g) in self.g_terms.iter().enumerate() {
            let value = g.eval(self.s0);
            if value.abs() > 1e-12 {
                return Err(Error::BasisNotIdentifiable {
                    index,
                    s0: self.s0,
                    value,
                });
            }
        }
        Ok(())
    }

    pub fn eval_f(&self, s: f64) -> Vec<f64> {
        self.f_terms.iter().map(|t| t.eval(s)).collect()
    }

    pub fn eval_g(&self, s: f64) -> Vec<f64> {
        self.g_terms.iter().map(|t| t.eval(s)).collect()
    }
}

/// PSH keeps competing-event subjects in the risk sets with IPCW weights; the
/// Cox comparator treats competing events as random censoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    Psh,
    Cox,
}

impl Variant {
    fn style(self) -> RiskSetStyle {
        match self {
            Variant::Psh => RiskSetStyle::FineGray,
            Variant::Cox => RiskSetStyle::CauseSpecific,
        }
    }
}

/// Stacked counting-process dataset over a landmark grid, with interaction
/// columns `z_c · f_j(s)` and baseline columns `g_j(s)` materialized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StackedDataset {
    pub table: CountingProcessTable,
    pub grid: Vec<f64>,
    pub w: f64,
    pub basis: BasisSpec,
    pub variant: Variant,
    /// Names of the subject-level covariates the interactions expand.
    pub base_covariate_names: Vec<String>,
    /// Grid points dropped because nobody was at risk there.
    pub dropped_grid_points: Vec<f64>,
}

/// Build the stacked dataset: one landmark subset per grid point, converted to
/// weighted counting-process form with delayed entry at its landmark, tagged,
/// and concatenated. The risk-set style follows the variant, so it is fixed
/// here rather than at fitting time.
pub fn build_stacked(
    ds: &SurvivalDataset,
    grid: &[f64],
    w: f64,
    basis: &BasisSpec,
    variant: Variant,
) -> Result<StackedDataset> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty landmark grid".into()));
    }
    if grid.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidParameter(
            "landmark grid must be strictly increasing".into(),
        ));
    }
    basis.validate()?;
    if (basis.s0 - grid[0]).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "basis origin s0 = {} must equal the first grid point {}",
            basis.s0, grid[0]
        )));
    }
    if grid[grid.len() - 1] + w > ds.max_time() {
        log::warn!(
            "window at the last landmark ({} + {w}) exceeds observed follow-up {}",
            grid[grid.len() - 1],
            ds.max_time()
        );
    }

    let p = ds.p();
    let m_f = basis.f_terms.len();
    let mut names = Vec::with_capacity(p * m_f + basis.g_terms.len());
    for cov in ds.covariate_names() {
        for f in &basis.f_terms {
            names.push(format!("{cov}*{}", f.label()));
        }
    }
    for g in &basis.g_terms {
        names.push(format!("baseline*{}", g.label()));
    }

    let mut rows: Vec<CpRow> = Vec::new();
    let mut dropped = Vec::new();
    let mut truncated_subjects = 0usize;
    for &s in grid {
        let spec = LandmarkSpec::new(s, w)?;
        let subset = match landmark_subset(ds, spec) {
            Ok(sub) => sub,
            Err(Error::EmptyRiskSet(_)) => {
                log::warn!("dropping landmark {s}: no subjects at risk");
                dropped.push(s);
                continue;
            }
            Err(e) => return Err(e),
        };
        let g_hat = km_censoring(&subset);
        let cp = to_counting_process_from(&subset, &g_hat, s, variant.style())?;
        truncated_subjects += cp.truncated_subjects;
        let f_s = basis.eval_f(s);
        let g_s = basis.eval_g(s);
        for mut row in cp.rows {
            let mut design = Vec::with_capacity(names.len());
            for &z in &row.covariates {
                for &f in &f_s {
                    design.push(z * f);
                }
            }
            design.extend_from_slice(&g_s);
            row.covariates = design;
            row.landmark = Some(s);
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyRiskSet(grid[0]));
    }
    Ok(StackedDataset {
        table: CountingProcessTable {
            rows,
            covariate_names: names,
            truncated_subjects,
        },
        grid: grid.iter().copied().filter(|s| !dropped.contains(s)).collect(),
        w,
        basis: basis.clone(),
        variant,
        base_covariate_names: ds.covariate_names().to_vec(),
        dropped_grid_points: dropped,
    })
}

/// A fitted landmark PSH supermodel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupermodelFit {
    /// Underlying fit on the stacked design; coefficients are ordered as all
    /// f terms per covariate, then the g terms.
    pub fit: PSHFit,
    pub basis: BasisSpec,
    pub grid: Vec<f64>,
    pub w: f64,
    pub variant: Variant,
    pub covariate_names: Vec<String>,
    /// Per-landmark baselines when fitted with stratification on s.
    pub strata_baselines: Vec<(f64, StepFunction)>,
}

/// Result of a robust Wald test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaldTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Fit the supermodel on a stacked dataset: one Fine-Gray call with the
/// sandwich clustered on subject id across landmark replicates.
pub fn fit_supermodel(stacked: &StackedDataset) -> Result<SupermodelFit> {
    fit_supermodel_with(stacked, &FitOptions::default(), false)
}

pub fn fit_supermodel_with(
    stacked: &StackedDataset,
    options: &FitOptions,
    stratify_baseline: bool,
) -> Result<SupermodelFit> {
    let (fit, strata_baselines) =
        fit_stratified(&stacked.table, options, stratify_baseline)?;
    Ok(SupermodelFit {
        fit,
        basis: stacked.basis.clone(),
        grid: stacked.grid.clone(),
        w: stacked.w,
        variant: stacked.variant,
        covariate_names: stacked.base_covariate_names.clone(),
        strata_baselines,
    })
}

/// Convenience: build the stacked dataset and fit in one call.
pub fn fit_supermodel_on(
    ds: &SurvivalDataset,
    grid: &[f64],
    w: f64,
    basis: &BasisSpec,
    variant: Variant,
) -> Result<SupermodelFit> {
    let stacked = build_stacked(ds, grid, w, basis, variant)?;
    fit_supermodel(&stacked)
}

impl SupermodelFit {
    fn check_range(&self, s: f64) -> Result<()> {
        let lo = self.grid[0];
        let hi = self.grid[self.grid.len() - 1];
        if s < lo - 1e-12 || s > hi + 1e-12 {
            return Err(Error::LandmarkOutOfRange { s, lo, hi });
        }
        Ok(())
    }

    pub fn m_f(&self) -> usize {
        self.basis.f_terms.len()
    }

    /// θ coefficients for one covariate, in f-term order.
    pub fn theta(&self, covariate: usize) -> &[f64] {
        let m = self.m_f();
        &self.fit.beta[covariate * m..(covariate + 1) * m]
    }

    /// η coefficients, in g-term order.
    pub fn eta(&self) -> &[f64] {
        &self.fit.beta[self.covariate_names.len() * self.m_f()..]
    }

    /// `β_LM(s) = Σ_j θ_j f_j(s)` per covariate.
    pub fn beta_lm_at(&self, s: f64) -> Result<Vec<f64>> {
        self.check_range(s)?;
        let f_s = self.basis.eval_f(s);
        Ok((0..self.covariate_names.len())
            .map(|c| {
                self.theta(c)
                    .iter()
                    .zip(&f_s)
                    .map(|(t, f)| t * f)
                    .sum::<f64>()
            })
            .collect())
    }

    /// `γ(s) = Σ_j η_j g_j(s)`; zero at the grid origin by construction.
    pub fn gamma_at(&self, s: f64) -> Result<f64> {
        self.check_range(s)?;
        let g_s = self.basis.eval_g(s);
        Ok(self.eta().iter().zip(&g_s).map(|(e, g)| e * g).sum())
    }

    /// Dynamic prediction: `1 − exp[−e^{z'β̂_LM(s)+γ̂(s)} {Λ̂₁₀(s+w) − Λ̂₁₀(s−)}]`.
    pub fn predict(&self, z_s: &[f64], s: f64, w: f64) -> Result<f64> {
        self.check_range(s)?;
        if (w - self.w).abs() > 1e-9 * (1.0 + self.w.abs()) {
            return Err(Error::WindowMismatch {
                requested: w,
                fitted: self.w,
            });
        }
        if z_s.len() != self.covariate_names.len() {
            return Err(Error::CovariateMismatch(format!(
                "profile has {} covariates, model has {}",
                z_s.len(),
                self.covariate_names.len()
            )));
        }
        let beta_s = self.beta_lm_at(s)?;
        let lp: f64 = z_s.iter().zip(&beta_s).map(|(z, b)| z * b).sum();
        if self.strata_baselines.is_empty() {
            let gamma = self.gamma_at(s)?;
            let mass = self.fit.baseline.increment(s, s + w).max(0.0);
            Ok((1.0 - (-((lp + gamma).exp() * mass)).exp()).clamp(0.0, 1.0))
        } else {
            // Stratified baselines carry no γ(s); s must sit on the grid.
            let baseline = self
                .strata_baselines
                .iter()
                .find(|(g, _)| (g - s).abs() < 1e-9)
                .map(|(_, b)| b)
                .ok_or(Error::LandmarkOutOfRange {
                    s,
                    lo: self.grid[0],
                    hi: self.grid[self.grid.len() - 1],
                })?;
            let mass = baseline.increment(s, s + w).max(0.0);
            Ok((1.0 - (-(lp.exp() * mass)).exp()).clamp(0.0, 1.0))
        }
    }

    /// Robust Wald test of the selected f-term coefficients of one covariate
    /// against zero: `θ' V⁻¹ θ ~ χ²(|terms|)`.
    pub fn wald_test(&self, covariate: &str, terms: &[usize]) -> Result<WaldTest> {
        let c = self
            .covariate_names
            .iter()
            .position(|n| n == covariate)
            .ok_or_else(|| Error::UnknownCovariate(covariate.to_string()))?;
        let m = self.m_f();
        for &t in terms {
            if t >= m {
                return Err(Error::InvalidParameter(format!(
                    "f-term index {t} out of range (m = {m})"
                )));
            }
        }
        let idx: Vec<usize> = terms.iter().map(|&t| c * m + t).collect();
        let k = idx.len();
        if k == 0 {
            return Err(Error::InvalidParameter("no terms to test".into()));
        }
        let theta: Vec<f64> = idx.iter().map(|&i| self.fit.beta[i]).collect();
        let mut sub = vec![0.0f64; k * k];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                sub[a * k + b] = self.fit.cov_robust[i][j];
            }
        }
        let inv = linalg::spd_inverse(&sub, k).ok_or(Error::SingularInformation)?;
        let statistic = linalg::quad_form(&inv, &theta, k).max(0.0);
        let p_value = if statistic == 0.0 {
            1.0
        } else {
            gamma_ur(k as f64 / 2.0, statistic / 2.0)
        };
        Ok(WaldTest {
            statistic,
            dof: k,
            p_value,
        })
    }
}
