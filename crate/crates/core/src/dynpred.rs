//! Trainable dynamic-prediction models behind one interface, so
//! cross-validation and the simulation studies can swap estimators freely:
//! the nonparametric reference, the standard PSH model, per-landmark PSH
//! models, and the landmark supermodels.

use serde::{Deserialize, Serialize};

use crate::aalen_johansen::conditional_cif_np;
use crate::censoring::km_censoring;
use crate::dataset::{to_counting_process, SurvivalDataset};
use crate::error::{Error, Result};
use crate::fine_gray::{fit, FitOptions, PSHFit};
use crate::landmark::{fit_landmark_psh, predict_conditional_cif, LandmarkSpec};
use crate::supermodel::{fit_supermodel_on, BasisSpec, SupermodelFit, Variant};

/// Which dynamic-prediction model to train.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DynamicModelSpec {
    /// Arm-wise Aalen-Johansen conditional CIF; usable when covariates are
    /// categorical so profiles repeat exactly.
    NonParametric,
    /// One Fine-Gray fit at baseline; conditional predictions read the window
    /// mass off the single global baseline.
    StandardPsh,
    /// A separate Fine-Gray fit per landmark (administratively censored at
    /// the horizon).
    LandmarkPsh,
    /// The landmark supermodel over a grid, PSH or Cox variant.
    Supermodel {
        grid: Vec<f64>,
        basis: BasisSpec,
        variant: Variant,
    },
}

/// A trained model ready to produce conditional CIF predictions at `(s, w)`.
pub enum TrainedModel {
    NonParametric { train: SurvivalDataset, w: f64 },
    StandardPsh { fit: PSHFit, w: f64 },
    LandmarkPsh { fits: Vec<(f64, PSHFit)>, w: f64 },
    Supermodel { fit: SupermodelFit },
}

impl DynamicModelSpec {
    /// Train on `ds` so predictions are available at every landmark in
    /// `landmarks` with window `w`.
    pub fn train(
        &self,
        ds: &SurvivalDataset,
        landmarks: &[f64],
        w: f64,
    ) -> Result<TrainedModel> {
        match self {
            DynamicModelSpec::NonParametric => Ok(TrainedModel::NonParametric {
                train: ds.clone(),
                w,
            }),
            DynamicModelSpec::StandardPsh => {
                let g = km_censoring(ds);
                let cp = to_counting_process(ds, &g)?;
                Ok(TrainedModel::StandardPsh {
                    fit: fit(&cp, &FitOptions::default())?,
                    w,
                })
            }
            DynamicModelSpec::LandmarkPsh => {
                let fits = landmarks
                    .iter()
                    .map(|&s| Ok((s, fit_landmark_psh(ds, LandmarkSpec::new(s, w)?)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrainedModel::LandmarkPsh { fits, w })
            }
            DynamicModelSpec::Supermodel {
                grid,
                basis,
                variant,
            } => Ok(TrainedModel::Supermodel {
                fit: fit_supermodel_on(ds, grid, w, basis, *variant)?,
            }),
        }
    }
}

impl TrainedModel {
    /// Conditional CIF prediction for the covariate profile `z_s` in force at
    /// landmark `s`.
    pub fn predict(&self, z_s: &[f64], s: f64) -> Result<f64> {
        match self {
            TrainedModel::NonParametric { train, w } => {
                let arm = train.filter(|r| r.covariates.at(s) == z_s).map_err(|e| {
                    match e {
                        Error::EmptyDataset => Error::CovariateMismatch(format!(
                            "no training subjects share the profile {z_s:?}"
                        )),
                        other => other,
                    }
                })?;
                conditional_cif_np(&arm, s, *w, 1)
            }
            TrainedModel::StandardPsh { fit, w } => {
                let lp: f64 = z_s.iter().zip(&fit.beta).map(|(a, b)| a * b).sum();
                let mass = fit.baseline.increment(s, s + w).max(0.0);
                Ok((1.0 - (-(lp.exp() * mass)).exp()).clamp(0.0, 1.0))
            }
            TrainedModel::LandmarkPsh { fits, w } => {
                let (_, fit) = fits
                    .iter()
                    .find(|(ls, _)| (ls - s).abs() < 1e-9)
                    .ok_or(Error::LandmarkOutOfRange {
                        s,
                        lo: fits.first().map_or(f64::NAN, |(l, _)| *l),
                        hi: fits.last().map_or(f64::NAN, |(l, _)| *l),
                    })?;
                predict_conditional_cif(fit, z_s, fit.landmark.unwrap_or(LandmarkSpec {
                    s,
                    w: *w,
                }))
            }
            TrainedModel::Supermodel { fit } => fit.predict(z_s, s, fit.w),
        }
    }
}
