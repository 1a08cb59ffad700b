//! Landmark proportional subdistribution hazards (PSH) models for dynamic
//! prediction of cause-specific cumulative incidence under competing risks.
//!
//! The crate covers the full pipeline: competing-risks data handling and the
//! IPCW counting-process transformation, weighted Fine-Gray estimation with a
//! cluster-robust sandwich variance, per-landmark PSH models, the landmark
//! PSH supermodel (and its Cox comparator), nonparametric Aalen-Johansen
//! references with jackknife pseudovalues, time-dependent performance metrics
//! with cross-validation, and the simulation generators used to benchmark
//! everything against closed-form truths.

pub mod aalen_johansen;
pub mod artifact;
pub mod censoring;
pub mod dataset;
pub mod dynpred;
pub mod error;
pub mod fine_gray;
mod linalg;
pub mod landmark;
pub mod metrics;
pub mod simulate;
pub mod step;
pub mod supermodel;

pub use error::{Error, Result};
