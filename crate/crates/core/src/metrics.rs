//! Time-dependent predictive-performance metrics — pseudovalue Brier score,
//! O/E calibration ratio, IPCW AUC — and k-fold cross-validation.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::aalen_johansen::pseudovalues;
use crate::censoring::km_censoring;
use crate::dataset::{SubjectRecord, SurvivalDataset};
use crate::dynpred::DynamicModelSpec;
use crate::error::{Error, Result};
use crate::step::StepFunction;

/// Predicted conditional CIFs `π_i` for every subject at risk at `s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionSet {
    pub s: f64,
    pub w: f64,
    pub entries: Vec<(String, f64)>,
}

fn pseudo_by_id(ds: &SurvivalDataset, s: f64, w: f64) -> Result<HashMap<String, f64>> {
    Ok(pseudovalues(ds, s, w)?.entries.into_iter().collect())
}

fn check_alignment(
    preds: &PredictionSet,
    pseudo: &HashMap<String, f64>,
) -> Result<Vec<(f64, f64)>> {
    if preds.entries.len() != pseudo.len() {
        return Err(Error::PredictionMismatch(format!(
            "{} predictions for {} subjects at risk",
            preds.entries.len(),
            pseudo.len()
        )));
    }
    preds
        .entries
        .iter()
        .map(|(id, pi)| {
            pseudo
                .get(id)
                .map(|q| (*q, *pi))
                .ok_or_else(|| Error::PredictionMismatch(format!("subject `{id}` not at risk")))
        })
        .collect()
}

/// Pseudovalue Brier score
/// `ñ⁻¹ Σ_{i∈R̃_s} { Q̂_i (1 − 2π_i) + π_i² }`.
pub fn brier(ds: &SurvivalDataset, preds: &PredictionSet) -> Result<f64> {
    let pairs = check_alignment(preds, &pseudo_by_id(ds, preds.s, preds.w)?)?;
    let n = pairs.len() as f64;
    Ok(pairs
        .iter()
        .map(|(q, pi)| q * (1.0 - 2.0 * pi) + pi * pi)
        .sum::<f64>()
        / n)
}

/// Observed-to-expected ratio `Σ Q̂_i / Σ π_i`.
pub fn oe_ratio(ds: &SurvivalDataset, preds: &PredictionSet) -> Result<f64> {
    let pairs = check_alignment(preds, &pseudo_by_id(ds, preds.s, preds.w)?)?;
    let expected: f64 = pairs.iter().map(|(_, pi)| pi).sum();
    if expected <= 0.0 {
        return Err(Error::ZeroExpectedCount);
    }
    let observed: f64 = pairs.iter().map(|(q, _)| q).sum();
    Ok(observed / expected)
}

/// IPCW time-dependent AUC.
///
/// Cases are observed cause-1 events in `(s, s+w]`, weighted `1/Ĝ(T−|s)`;
/// controls are subjects event-free past the horizon (weight `1/Ĝ(s+w|s)`)
/// together with observed competing events in the window (weight `1/Ĝ(T−|s)`);
/// ties in the predictions count one half.
pub fn auc(ds: &SurvivalDataset, preds: &PredictionSet, g: &StepFunction) -> Result<f64> {
    let (s, w) = (preds.s, preds.w);
    let horizon = s + w;
    let g_s = g.eval(s);
    let by_id: HashMap<&str, &SubjectRecord> =
        ds.rows().iter().map(|r| (r.id.as_str(), r)).collect();

    let mut cases: Vec<(f64, f64)> = Vec::new();
    let mut controls: Vec<(f64, f64)> = Vec::new();
    for (id, pi) in &preds.entries {
        let r = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::PredictionMismatch(format!("unknown subject `{id}`")))?;
        debug_assert!(r.time > s);
        let in_window = r.time <= horizon;
        if in_window && r.cause == 1 {
            let denom = g.at_minus(r.time);
            if denom > 0.0 {
                cases.push((*pi, g_s / denom));
            }
        } else if in_window && r.cause > 1 {
            let denom = g.at_minus(r.time);
            if denom > 0.0 {
                controls.push((*pi, g_s / denom));
            }
        } else if r.time > horizon || (r.time == horizon && r.status == 0) {
            let denom = g.eval(horizon);
            if denom > 0.0 {
                controls.push((*pi, g_s / denom));
            }
        }
        // Censored strictly inside the window: event status unknown, skipped.
    }
    if cases.is_empty() || controls.is_empty() {
        return Err(Error::DegenerateAuc);
    }

    controls.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ctrl_pi: Vec<f64> = controls.iter().map(|c| c.0).collect();
    let mut ctrl_cum = Vec::with_capacity(controls.len() + 1);
    ctrl_cum.push(0.0f64);
    for c in &controls {
        ctrl_cum.push(ctrl_cum.last().unwrap() + c.1);
    }
    let total_control: f64 = *ctrl_cum.last().unwrap();

    let mut num = 0.0f64;
    let mut total_case = 0.0f64;
    for (pi, wi) in &cases {
        let lo = ctrl_pi.partition_point(|x| x < pi);
        let hi = ctrl_pi.partition_point(|x| x <= pi);
        let below = ctrl_cum[lo];
        let tied = ctrl_cum[hi] - ctrl_cum[lo];
        // Per-case concordance fraction: exactly 0.5 under constant π.
        num += wi * ((below + 0.5 * tied) / total_control);
        total_case += wi;
    }
    Ok(num / total_case)
}

/// Squared calibration bias `(mean π − reference)²` against a fixed reference
/// event proportion (generator truth, or the pseudovalue-based observed mean).
pub fn squared_bias(preds: &PredictionSet, reference: f64) -> f64 {
    if preds.entries.is_empty() {
        return 0.0;
    }
    let mean: f64 =
        preds.entries.iter().map(|(_, pi)| pi).sum::<f64>() / preds.entries.len() as f64;
    (mean - reference) * (mean - reference)
}

/// One evaluated metric at one landmark.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub landmark: f64,
    pub metric: String,
    pub estimate: f64,
    pub se: Option<f64>,
}

/// Write metric rows as `(landmark, metric, estimate, se)`. Estimates are
/// stored unscaled; any ×100 presentation happens at display time only.
pub fn write_metric_csv(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "landmark,metric,estimate,se")?;
    for r in rows {
        match r.se {
            Some(se) => writeln!(out, "{},{},{},{se}", r.landmark, r.metric, r.estimate)?,
            None => writeln!(out, "{},{},{},", r.landmark, r.metric, r.estimate)?,
        }
    }
    Ok(())
}

/// Deterministic stratified fold assignment: subjects grouped by cause and by
/// whether their time falls inside the evaluated prediction windows, shuffled
/// within stratum, dealt round-robin.
pub fn assign_folds(
    ds: &SurvivalDataset,
    k: usize,
    landmarks: &[f64],
    w: f64,
    seed: u64,
) -> Vec<usize> {
    let lo = landmarks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = landmarks.iter().copied().fold(0.0f64, f64::max) + w;
    let mut strata: HashMap<(u32, bool), Vec<usize>> = HashMap::new();
    for (i, r) in ds.rows().iter().enumerate() {
        let in_window = r.time > lo && r.time <= hi;
        strata.entry((r.cause, in_window)).or_default().push(i);
    }
    let mut keys: Vec<(u32, bool)> = strata.keys().copied().collect();
    keys.sort();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut fold = vec![0usize; ds.n()];
    let mut next = 0usize;
    for key in keys {
        let mut members = strata.remove(&key).unwrap();
        members.shuffle(&mut rng);
        for m in members {
            fold[m] = next % k;
            next += 1;
        }
    }
    fold
}

/// K-fold cross-validated metrics: each fold is scored by a model trained on
/// the rest; held-out predictions are pooled per landmark before computing
/// Brier, O/E, and AUC.
pub fn cross_validate(
    ds: &SurvivalDataset,
    spec: &DynamicModelSpec,
    k: usize,
    landmarks: &[f64],
    w: f64,
    seed: u64,
) -> Result<Vec<MetricRow>> {
    let preds = cross_validated_predictions(ds, spec, k, landmarks, w, seed)?;
    let g = km_censoring(ds);
    let mut rows = Vec::new();
    for ps in &preds {
        rows.push(MetricRow {
            landmark: ps.s,
            metric: "brier".into(),
            estimate: brier(ds, ps)?,
            se: None,
        });
        rows.push(MetricRow {
            landmark: ps.s,
            metric: "oe_ratio".into(),
            estimate: oe_ratio(ds, ps)?,
            se: None,
        });
        rows.push(MetricRow {
            landmark: ps.s,
            metric: "auc".into(),
            estimate: auc(ds, ps, &g)?,
            se: None,
        });
    }
    Ok(rows)
}

/// The pooled held-out prediction sets behind [`cross_validate`], one per
/// landmark, for callers that need the raw predictions.
pub fn cross_validated_predictions(
    ds: &SurvivalDataset,
    spec: &DynamicModelSpec,
    k: usize,
    landmarks: &[f64],
    w: f64,
    seed: u64,
) -> Result<Vec<PredictionSet>> {
    if k < 2 || k > ds.n() {
        return Err(Error::InvalidParameter(format!(
            "fold count must be in [2, n], got {k}"
        )));
    }
    let fold = assign_folds(ds, k, landmarks, w, seed);
    let mut pooled: Vec<PredictionSet> = landmarks
        .iter()
        .map(|&s| PredictionSet {
            s,
            w,
            entries: Vec::new(),
        })
        .collect();

    for f in 0..k {
        let train_rows: Vec<SubjectRecord> = ds
            .rows()
            .iter()
            .enumerate()
            .filter(|(i, _)| fold[*i] != f)
            .map(|(_, r)| r.clone())
            .collect();
        if train_rows.is_empty() {
            return Err(Error::BadFold(format!("fold {f} holds every subject")));
        }
        let train = SurvivalDataset::new(train_rows, ds.covariate_names().to_vec())?;
        let model = spec.train(&train, landmarks, w).map_err(|e| match e {
            Error::NoMainEvents => Error::BadFold(format!(
                "training folds complementary to fold {f} have no cause-1 events"
            )),
            other => other,
        })?;
        for (ps, &s) in pooled.iter_mut().zip(landmarks) {
            for (i, r) in ds.rows().iter().enumerate() {
                if fold[i] != f || r.time <= s {
                    continue;
                }
                let pi = model.predict(r.covariates.at(s), s)?;
                ps.entries.push((r.id.clone(), pi));
            }
        }
    }
    // Pooled entries in dataset order, independent of fold layout.
    let index: HashMap<&str, usize> = ds
        .rows()
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    for ps in pooled.iter_mut() {
        ps.entries.sort_by_key(|(id, _)| index[id.as_str()]);
    }
    Ok(pooled)
}
