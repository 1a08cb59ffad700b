//! Nonparametric estimation: Aalen-Johansen cumulative incidence, all-cause
//! Kaplan-Meier survival, conditional CIFs at landmarks, and exact jackknife
//! pseudovalues.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SurvivalDataset;
use crate::error::{Error, Result};
use crate::step::StepFunction;

/// Aalen-Johansen estimate of one cause's cumulative incidence function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CIFEstimate {
    pub cause: u32,
    pub f: StepFunction,
}

/// Per-subject jackknife pseudovalues of the conditional cumulative incidence
/// over `(s, s+w]` among subjects still at risk at `s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PseudovalueVector {
    pub s: f64,
    pub w: f64,
    /// `(subject id, Q̂)` for every subject with `X > s`, in dataset order.
    pub entries: Vec<(String, f64)>,
}

impl PseudovalueVector {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "id,s,w,q")?;
        for (id, q) in &self.entries {
            writeln!(out, "{id},{},{},{q}", self.s, self.w)?;
        }
        Ok(())
    }
}

/// Which increment the pseudovalues target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PseudoTarget {
    /// Cause-1 cumulative incidence (the default throughout).
    Cause1,
    /// All-cause failure probability 1 − S.
    AllCause,
}

/// Grouped event table over the distinct observed times of a dataset.
struct EventTable {
    times: Vec<f64>,
    /// Number at risk (X >= t) at each distinct time.
    at_risk: Vec<f64>,
    /// All-cause event count at each distinct time.
    d_any: Vec<f64>,
    /// Target-cause event count at each distinct time.
    d_target: Vec<f64>,
    /// For each subject (dataset order): index into `times`, had any event,
    /// had target event.
    subject_pos: Vec<(usize, bool, bool)>,
}

fn build_table(ds: &SurvivalDataset, target: impl Fn(u32) -> bool) -> EventTable {
    let n = ds.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ds.rows()[a].time.total_cmp(&ds.rows()[b].time));

    let mut times = Vec::new();
    let mut at_risk = Vec::new();
    let mut d_any = Vec::new();
    let mut d_target = Vec::new();
    let mut subject_pos = vec![(0usize, false, false); n];

    let mut i = 0;
    while i < n {
        let t = ds.rows()[order[i]].time;
        let k = times.len();
        times.push(t);
        at_risk.push((n - i) as f64);
        let mut any = 0.0;
        let mut tgt = 0.0;
        let mut j = i;
        while j < n && ds.rows()[order[j]].time == t {
            let r = &ds.rows()[order[j]];
            let is_event = r.status == 1;
            let is_target = is_event && target(r.cause);
            any += f64::from(is_event as u8);
            tgt += f64::from(is_target as u8);
            subject_pos[order[j]] = (k, is_event, is_target);
            j += 1;
        }
        d_any.push(any);
        d_target.push(tgt);
        i = j;
    }
    EventTable {
        times,
        at_risk,
        d_any,
        d_target,
        subject_pos,
    }
}

impl EventTable {
    /// Aalen-Johansen target-cause CIF evaluated through all times.
    fn cif_jumps(&self) -> Vec<(f64, f64)> {
        let mut jumps = Vec::new();
        let mut surv = 1.0f64;
        let mut cif = 0.0f64;
        for k in 0..self.times.len() {
            if self.d_any[k] > 0.0 {
                cif += surv * self.d_target[k] / self.at_risk[k];
                surv *= 1.0 - self.d_any[k] / self.at_risk[k];
                if self.d_target[k] > 0.0 {
                    jumps.push((self.times[k], cif));
                }
            }
        }
        jumps
    }

    fn cif_at(&self, horizon: f64) -> f64 {
        let mut surv = 1.0f64;
        let mut cif = 0.0f64;
        for k in 0..self.times.len() {
            if self.times[k] > horizon {
                break;
            }
            cif += surv * self.d_target[k] / self.at_risk[k];
            surv *= 1.0 - self.d_any[k] / self.at_risk[k];
        }
        cif
    }

    /// All leave-one-out CIF values at `horizon` in one O(K) pass per array.
    ///
    /// Removing a subject observed at distinct-time index m lowers the risk
    /// counts at every time up to m, adjusts the event counts at m, and leaves
    /// everything after m untouched; prefix and suffix recursions cover the
    /// three pieces without refitting.
    fn loo_cif_at(&self, horizon: f64) -> Vec<f64> {
        let kk = self.times.len();
        // Prefix under "one extra subject removed from every risk set".
        let mut prefix_surv = vec![1.0f64; kk + 1];
        let mut prefix_cif = vec![0.0f64; kk + 1];
        for k in 0..kk {
            let denom = self.at_risk[k] - 1.0;
            let (s_prev, c_prev) = (prefix_surv[k], prefix_cif[k]);
            if denom <= 0.0 {
                // Only possible at the last distinct time; never consumed.
                prefix_surv[k + 1] = 0.0;
                prefix_cif[k + 1] = c_prev;
                continue;
            }
            prefix_cif[k + 1] = c_prev
                + if self.times[k] <= horizon {
                    s_prev * self.d_target[k] / denom
                } else {
                    0.0
                };
            prefix_surv[k + 1] = s_prev * (1.0 - self.d_any[k] / denom);
        }
        // Suffix on the untouched tail: conditional CIF accrued strictly after
        // each index, under the original risk sets.
        let mut tail = vec![0.0f64; kk + 1];
        for k in (0..kk).rev() {
            tail[k] = if self.times[k] <= horizon {
                self.d_target[k] / self.at_risk[k]
                    + (1.0 - self.d_any[k] / self.at_risk[k]) * tail[k + 1]
            } else {
                0.0
            };
        }

        self.subject_pos
            .iter()
            .map(|&(m, any, tgt)| {
                let n_m = self.at_risk[m] - 1.0;
                if n_m <= 0.0 {
                    return prefix_cif[m];
                }
                let d_any_m = self.d_any[m] - f64::from(any as u8);
                let d_tgt_m = self.d_target[m] - f64::from(tgt as u8);
                let own = if self.times[m] <= horizon {
                    prefix_surv[m] * d_tgt_m / n_m
                } else {
                    0.0
                };
                prefix_cif[m] + own + prefix_surv[m] * (1.0 - d_any_m / n_m) * tail[m + 1]
            })
            .collect()
    }
}

/// Aalen-Johansen CIF for one cause: `F̂_j(t) = Σ_{t_i ≤ t} Ŝ(t_i−) d_{j,i}/n_i`
/// with Ŝ the all-cause Kaplan-Meier.
pub fn aj_cif(ds: &SurvivalDataset, cause: u32) -> Result<CIFEstimate> {
    if cause == 0 || !ds.cause_labels().contains(&cause) {
        return Err(Error::UnknownCause(cause));
    }
    let table = build_table(ds, |c| c == cause);
    Ok(CIFEstimate {
        cause,
        f: StepFunction::new(0.0, table.cif_jumps())?,
    })
}

/// All-cause Kaplan-Meier overall survival.
pub fn overall_survival(ds: &SurvivalDataset) -> StepFunction {
    let table = build_table(ds, |_| true);
    let mut jumps = Vec::new();
    let mut surv = 1.0f64;
    for k in 0..table.times.len() {
        if table.d_any[k] > 0.0 {
            surv *= 1.0 - table.d_any[k] / table.at_risk[k];
            jumps.push((table.times[k], surv));
        }
    }
    StepFunction::new(1.0, jumps).expect("sorted distinct times")
}

fn landmark_risk_set(ds: &SurvivalDataset, s: f64) -> Result<SurvivalDataset> {
    ds.filter(|r| r.time > s).map_err(|e| match e {
        Error::EmptyDataset => Error::EmptyRiskSet(s),
        other => other,
    })
}

/// Nonparametric conditional CIF `Pr(T ≤ s+w, ε = cause | T > s)`: the
/// Aalen-Johansen estimate on the landmark subset `{X > s}`, which equals the
/// ratio form `(F̂(s+w) − F̂(s)) / Ŝ(s)` on the full data.
pub fn conditional_cif_np(ds: &SurvivalDataset, s: f64, w: f64, cause: u32) -> Result<f64> {
    if cause == 0 {
        return Err(Error::UnknownCause(cause));
    }
    let subset = landmark_risk_set(ds, s)?;
    let table = build_table(&subset, |c| c == cause);
    Ok(table.cif_at(s + w))
}

/// Jackknife pseudovalues of the cause-1 conditional cumulative incidence:
/// `Q̂_i = ñ_s F̂(s+w|s) − (ñ_s − 1) F̂^{(i)}(s+w|s)` with exact leave-one-out
/// recomputation.
pub fn pseudovalues(ds: &SurvivalDataset, s: f64, w: f64) -> Result<PseudovalueVector> {
    pseudovalues_target(ds, s, w, PseudoTarget::Cause1)
}

/// Pseudovalues with a selectable target increment; the all-cause variant
/// exists as an unvalidated alternative reading of the marginal incidence.
pub fn pseudovalues_target(
    ds: &SurvivalDataset,
    s: f64,
    w: f64,
    target: PseudoTarget,
) -> Result<PseudovalueVector> {
    let subset = landmark_risk_set(ds, s)?;
    let n_tilde = subset.n();
    if n_tilde < 2 {
        return Err(Error::TooFewForJackknife(s));
    }
    let table = match target {
        PseudoTarget::Cause1 => build_table(&subset, |c| c == 1),
        PseudoTarget::AllCause => build_table(&subset, |_| true),
    };
    let horizon = s + w;
    let full = table.cif_at(horizon);
    let loo = table.loo_cif_at(horizon);
    let nf = n_tilde as f64;
    let entries = subset
        .rows()
        .iter()
        .zip(loo)
        .map(|(r, f_i)| (r.id.clone(), nf * full - (nf - 1.0) * f_i))
        .collect();
    Ok(PseudovalueVector { s, w, entries })
}
