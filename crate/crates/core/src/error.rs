//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric value `{value}` in column `{column}` at row {row}")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("nonpositive time at row {0}")]
    NonPositiveTime(usize),
    #[error("status/cause inconsistency at row {0}: cause must be positive iff status is 1")]
    StatusCauseMismatch(usize),
    #[error("time-dependent covariate intervals overlap or leave gaps for id `{0}`")]
    BadCovariateIntervals(String),
    #[error("duplicate subject id `{0}`")]
    DuplicateId(String),
    #[error("unknown cause label {0}")]
    UnknownCause(u32),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("no subjects at risk past landmark s = {0}")]
    EmptyRiskSet(f64),
    #[error("risk set at landmark s = {0} has fewer than two subjects")]
    TooFewForJackknife(f64),
    #[error("no cause-1 events in the fitting window")]
    NoMainEvents,
    #[error("covariate `{0}` is constant; design matrix is rank deficient")]
    RankDeficient(String),
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("linear predictor overflowed; coefficients diverged")]
    DivergentLinearPredictor,
    #[error("censoring survival function must start at 1 and be nonincreasing in [0, 1]")]
    InvalidCensoringSurvival,
    #[error("step function jump times must be strictly increasing and finite")]
    UnsortedStepTimes,
    #[error("landmark s = {s} outside fitted range [{lo}, {hi}]")]
    LandmarkOutOfRange { s: f64, lo: f64, hi: f64 },
    #[error("prediction window {requested} does not match fitted window {fitted}")]
    WindowMismatch { requested: f64, fitted: f64 },
    #[error("fit was produced for landmark (s = {fitted_s}, w = {fitted_w}), not (s = {s}, w = {w})")]
    LandmarkMismatch {
        fitted_s: f64,
        fitted_w: f64,
        s: f64,
        w: f64,
    },
    #[error("basis term g_{index} evaluates to {value} at the grid origin s0 = {s0}; g terms must vanish there for the baseline to be identifiable")]
    BasisNotIdentifiable { index: usize, s0: f64, value: f64 },
    #[error("unknown covariate `{0}`")]
    UnknownCovariate(String),
    #[error("prediction set does not match the landmark risk set: {0}")]
    PredictionMismatch(String),
    #[error("no usable cases or controls for the AUC at this landmark")]
    DegenerateAuc,
    #[error("expected event count is zero")]
    ZeroExpectedCount,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cross-validation fold unusable: {0}")]
    BadFold(String),
    #[error("covariate profile mismatch: {0}")]
    CovariateMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
