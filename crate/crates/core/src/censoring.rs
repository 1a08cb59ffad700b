//! Kaplan-Meier estimation of the censoring survival function Ĝ(t) = P(C > t),
//! the ingredient of every IPCW weight in the crate.
//!
//! Roles are reversed relative to the usual KM: censorings are the "events",
//! failures from any cause leave the risk set as "censorings". Ties between a
//! failure and a censoring at the same instant keep the failing subject in the
//! risk set (event precedes censoring).

use crate::dataset::SurvivalDataset;
use crate::step::StepFunction;

/// Censoring-survival KM. Administrative censorings (deterministic horizon
/// cuts) contribute risk time but are not treated as censoring events.
pub fn km_censoring(ds: &SurvivalDataset) -> StepFunction {
    // (time, is_random_censoring)
    let mut obs: Vec<(f64, bool)> = ds
        .rows()
        .iter()
        .map(|r| (r.time, r.status == 0 && !r.admin_censored))
        .collect();
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let n = obs.len();
    let mut jumps = Vec::new();
    let mut surv = 1.0f64;
    let mut i = 0;
    while i < n {
        let t = obs[i].0;
        let at_risk = (n - i) as f64;
        let mut censored_here = 0usize;
        let mut j = i;
        while j < n && obs[j].0 == t {
            censored_here += usize::from(obs[j].1);
            j += 1;
        }
        if censored_here > 0 {
            surv *= 1.0 - censored_here as f64 / at_risk;
            jumps.push((t, surv));
        }
        i = j;
    }
    StepFunction::new(1.0, jumps).expect("jump times are sorted distinct observation times")
}
