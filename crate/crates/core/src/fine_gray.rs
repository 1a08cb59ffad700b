//! Weighted Fine-Gray partial-likelihood estimation on counting-process data:
//! Newton-Raphson with step-halving, Breslow baseline cumulative
//! subdistribution hazard, model-based and cluster-robust covariance, and CIF
//! prediction.
//!
//! The same engine fits plain Fine-Gray models, per-landmark models, and the
//! stacked supermodel: risk sets honor delayed entry, events with tied times
//! share one Breslow denominator, and the sandwich variance clusters score
//! residuals by subject id so replicated rows of one subject are handled
//! correctly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::CountingProcessTable;
use crate::error::{Error, Result};
use crate::landmark::LandmarkSpec;
use crate::linalg;
use crate::step::StepFunction;

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Sup-norm tolerance on the score vector at exit.
    pub tol: f64,
    /// Center covariates internally before optimizing; estimates are reported
    /// on the original scale either way.
    pub center: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 50,
            tol: 1e-8,
            center: true,
        }
    }
}

/// A fitted proportional subdistribution hazards model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PSHFit {
    pub beta: Vec<f64>,
    pub covariate_names: Vec<String>,
    /// Breslow cumulative subdistribution hazard Λ̂₁₀, on the original
    /// covariate scale, jumping only at observed cause-1 event times.
    pub baseline: StepFunction,
    pub cov_model: Vec<Vec<f64>>,
    pub cov_robust: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub loglik: f64,
    pub n_subjects: usize,
    pub n_events: usize,
    /// Landmark this fit was produced for, when it came from a landmark
    /// subset.
    pub landmark: Option<LandmarkSpec>,
}

impl PSHFit {
    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn robust_se(&self) -> Vec<f64> {
        (0..self.p())
            .map(|j| self.cov_robust[j][j].max(0.0).sqrt())
            .collect()
    }
}

/// `F̂₁(t | z) = 1 − exp[−exp(z'β̂) Λ̂₁₀(t)]` for a time-fixed profile `z`.
pub fn predict_cif(fit: &PSHFit, z: &[f64], t: f64) -> f64 {
    debug_assert_eq!(z.len(), fit.beta.len());
    let lp: f64 = z.iter().zip(&fit.beta).map(|(a, b)| a * b).sum();
    let cum = fit.baseline.eval(t).max(0.0);
    (1.0 - (-(lp.exp() * cum)).exp()).clamp(0.0, 1.0)
}

/// Weighted Breslow-ties partial log-likelihood with analytic gradient and
/// Hessian, evaluated on the table as given (no centering).
pub fn partial_loglik(
    cp: &CountingProcessTable,
    beta: &[f64],
) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let engine = Engine::new(cp, false, false)?;
    let (ll, grad, hess, _) = engine.sweep(beta, false)?;
    let p = engine.p;
    Ok((ll, grad, linalg::to_nested(&hess, p)))
}

/// Breslow estimator `Λ̂₁₀(t) = Σ_{events ≤ t} w_e / Σ_{risk} w_r exp(η_r)`.
pub fn breslow_baseline(cp: &CountingProcessTable, beta: &[f64]) -> Result<StepFunction> {
    let engine = Engine::new(cp, false, false)?;
    let (_, _, _, detail) = engine.sweep(beta, true)?;
    let detail = detail.expect("detail requested");
    Ok(baseline_from_detail(&detail[0])?)
}

/// Cluster-robust sandwich `I⁻¹ (Σ_g U_g U_g') I⁻¹` with `U_g` the summed
/// score residual of all rows sharing one subject id.
pub fn robust_variance(cp: &CountingProcessTable, beta: &[f64]) -> Result<Vec<Vec<f64>>> {
    let engine = Engine::new(cp, false, false)?;
    let p = engine.p;
    let (_, _, hess, detail) = engine.sweep(beta, true)?;
    let info: Vec<f64> = hess.iter().map(|h| -h).collect();
    let inv_info = linalg::spd_inverse(&info, p).ok_or(Error::SingularInformation)?;
    let meat = engine.cluster_meat(beta, detail.as_deref().unwrap())?;
    let cov = linalg::mat_mul(&linalg::mat_mul(&inv_info, &meat, p), &inv_info, p);
    Ok(linalg::to_nested(&cov, p))
}

/// Newton-Raphson maximum of the weighted partial likelihood, with Breslow
/// baseline and both covariance estimates.
pub fn fit(cp: &CountingProcessTable, options: &FitOptions) -> Result<PSHFit> {
    let (fit, _) = fit_stratified(cp, options, false)?;
    Ok(fit)
}

/// As [`fit`], optionally stratifying the baseline (and risk sets) on the
/// rows' landmark tags. Returns the per-stratum baselines alongside; for an
/// unstratified fit the list holds nothing.
pub fn fit_stratified(
    cp: &CountingProcessTable,
    options: &FitOptions,
    stratify_by_landmark: bool,
) -> Result<(PSHFit, Vec<(f64, StepFunction)>)> {
    let engine = Engine::new(cp, options.center, stratify_by_landmark)?;
    let p = engine.p;
    if engine.n_events == 0 {
        return Err(Error::NoMainEvents);
    }
    if p > 0 {
        for (j, name) in cp.covariate_names.iter().enumerate() {
            if engine.col_spread[j] < 1e-12 {
                return Err(Error::RankDeficient(name.clone()));
            }
        }
    }

    let mut beta = vec![0.0f64; p];
    let (mut ll, mut grad, mut hess, _) = engine.sweep(&beta, false)?;
    let mut iterations = 0usize;
    let mut converged = p == 0;

    while p > 0 {
        let sup = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if sup < options.tol {
            converged = true;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let info: Vec<f64> = hess.iter().map(|h| -h).collect();
        let l = linalg::cholesky(&info, p).ok_or(Error::SingularInformation)?;
        let direction = linalg::chol_solve(&l, p, &grad);

        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<f64> = beta
                .iter()
                .zip(&direction)
                .map(|(b, d)| b + step * d)
                .collect();
            match engine.sweep(&cand, false) {
                Ok((l2, g2, h2, _)) if l2.is_finite() && l2 >= ll - 1e-9 * (1.0 + ll.abs()) => {
                    beta = cand;
                    ll = l2;
                    grad = g2;
                    hess = h2;
                    accepted = true;
                    break;
                }
                _ => step *= 0.5,
            }
        }
        if !accepted {
            break;
        }
    }

    // A sup-norm this large means a monotone (separated) partial likelihood:
    // the maximizer sits at infinity and the plateau gradient can dip under
    // the tolerance, so flag the fit rather than trust it.
    if beta.iter().any(|b| b.abs() > 30.0) {
        converged = false;
    }

    let (_, _, _, detail) = engine.sweep(&beta, true)?;
    let detail = detail.expect("detail requested");

    let (cov_model, cov_robust) = if p == 0 {
        (Vec::new(), Vec::new())
    } else {
        let info: Vec<f64> = hess.iter().map(|h| -h).collect();
        let inv_info = linalg::spd_inverse(&info, p).ok_or(Error::SingularInformation)?;
        let meat = engine.cluster_meat(&beta, &detail)?;
        let robust = linalg::mat_mul(&linalg::mat_mul(&inv_info, &meat, p), &inv_info, p);
        (linalg::to_nested(&inv_info, p), linalg::to_nested(&robust, p))
    };

    // De-center the baseline: exp(mean'β) multiplies every risk score, so the
    // original-scale baseline is the centered one shrunk by that factor.
    let recenter: f64 = engine
        .col_means
        .iter()
        .zip(&beta)
        .map(|(m, b)| m * b)
        .sum::<f64>();
    let shrink = (-recenter).exp();

    let mut strata_baselines = Vec::new();
    for (key, det) in engine.stratum_values.iter().zip(&detail) {
        strata_baselines.push((*key, baseline_from_detail(det)?.scale(shrink)));
    }
    let baseline = if stratify_by_landmark {
        StepFunction::constant(0.0)
    } else {
        strata_baselines[0].1.clone()
    };
    if !stratify_by_landmark {
        strata_baselines.clear();
    }

    Ok((
        PSHFit {
            beta,
            covariate_names: cp.covariate_names.clone(),
            baseline,
            cov_model,
            cov_robust,
            iterations,
            converged,
            loglik: ll,
            n_subjects: engine.n_clusters,
            n_events: engine.n_events,
            landmark: None,
        },
        strata_baselines,
    ))
}

fn baseline_from_detail(detail: &StratumDetail) -> Result<StepFunction> {
    let mut jumps = Vec::with_capacity(detail.times.len());
    let mut cum = 0.0f64;
    for (t, d) in detail.times.iter().zip(&detail.dlam) {
        cum += d;
        jumps.push((*t, cum));
    }
    StepFunction::new(0.0, jumps)
}

/// Per-stratum record of the fitted event sweep, in ascending time order.
struct StratumDetail {
    times: Vec<f64>,
    /// Breslow increment at each distinct event time: Σ w_e / S0.
    dlam: Vec<f64>,
    /// Risk-set weighted covariate mean at each event time, k×p row-major.
    zbar: Vec<f64>,
}

struct EventGroup {
    time: f64,
    rows: Vec<usize>,
}

struct StratumPlan {
    by_stop_desc: Vec<usize>,
    by_start_desc: Vec<usize>,
    /// Distinct event times, descending (sweep order).
    groups: Vec<EventGroup>,
}

struct Engine {
    p: usize,
    n_rows: usize,
    z: Vec<f64>,
    start: Vec<f64>,
    stop: Vec<f64>,
    weight: Vec<f64>,
    status1: Vec<bool>,
    strata: Vec<StratumPlan>,
    stratum_values: Vec<f64>,
    row_stratum: Vec<usize>,
    /// Index of the row's own event group within its stratum (ascending
    /// numbering), for event rows.
    own_group: Vec<Option<usize>>,
    cluster_of_row: Vec<usize>,
    n_clusters: usize,
    /// Rows in (cluster, canonical) order so cluster sums are reproducible
    /// bit-exactly under any input permutation.
    residual_order: Vec<usize>,
    col_means: Vec<f64>,
    col_spread: Vec<f64>,
    n_events: usize,
}

impl Engine {
    fn new(cp: &CountingProcessTable, center: bool, stratified: bool) -> Result<Self> {
        let n_rows = cp.rows.len();
        if n_rows == 0 {
            return Err(Error::EmptyDataset);
        }
        let p = cp.covariate_names.len();

        let mut z = Vec::with_capacity(n_rows * p);
        let mut start = Vec::with_capacity(n_rows);
        let mut stop = Vec::with_capacity(n_rows);
        let mut weight = Vec::with_capacity(n_rows);
        let mut status1 = Vec::with_capacity(n_rows);
        for (i, r) in cp.rows.iter().enumerate() {
            if !(r.start < r.stop) {
                return Err(Error::InvalidParameter(format!(
                    "risk interval must satisfy start < stop at row {}",
                    i + 1
                )));
            }
            if !(r.weight > 0.0 && r.weight.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "weight must be in (0, 1] at row {}",
                    i + 1
                )));
            }
            if r.covariates.len() != p {
                return Err(Error::CovariateMismatch(format!(
                    "row {} has {} covariates, expected {p}",
                    i + 1,
                    r.covariates.len()
                )));
            }
            z.extend_from_slice(&r.covariates);
            start.push(r.start);
            stop.push(r.stop);
            weight.push(r.weight);
            status1.push(r.status1);
        }

        let mut col_means = vec![0.0f64; p];
        for i in 0..n_rows {
            for j in 0..p {
                col_means[j] += z[i * p + j];
            }
        }
        for m in col_means.iter_mut() {
            *m /= n_rows as f64;
        }
        let mut col_spread = vec![0.0f64; p];
        for i in 0..n_rows {
            for j in 0..p {
                col_spread[j] = col_spread[j].max((z[i * p + j] - col_means[j]).abs());
            }
        }
        if center {
            for i in 0..n_rows {
                for j in 0..p {
                    z[i * p + j] -= col_means[j];
                }
            }
        } else {
            // Nothing to undo at exit when the data were left as given.
            col_means = vec![0.0; p];
        }

        // Stratum keys: distinct landmark tags when stratifying, else one
        // pooled stratum keyed 0.
        let (stratum_values, row_stratum) = if stratified {
            let mut keys: Vec<f64> = cp
                .rows
                .iter()
                .map(|r| r.landmark.unwrap_or(0.0))
                .collect();
            let mut distinct = keys.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let assignment: Vec<usize> = keys
                .drain(..)
                .map(|k| distinct.partition_point(|&d| d < k))
                .collect();
            (distinct, assignment)
        } else {
            (vec![0.0], vec![0usize; n_rows])
        };

        let row_cmp = |a: usize, b: usize| -> Ordering {
            cp.rows[a]
                .subject
                .cmp(&cp.rows[b].subject)
                .then(start[a].total_cmp(&start[b]))
                .then(stop[a].total_cmp(&stop[b]))
                .then(status1[a].cmp(&status1[b]))
                .then(weight[a].total_cmp(&weight[b]))
                .then_with(|| {
                    for j in 0..p {
                        let c = z[a * p + j].total_cmp(&z[b * p + j]);
                        if c != Ordering::Equal {
                            return c;
                        }
                    }
                    Ordering::Equal
                })
        };

        let mut strata = Vec::with_capacity(stratum_values.len());
        let mut own_group = vec![None; n_rows];
        let mut n_events = 0usize;
        for st in 0..stratum_values.len() {
            let rows: Vec<usize> = (0..n_rows).filter(|&i| row_stratum[i] == st).collect();
            let mut by_stop_desc = rows.clone();
            by_stop_desc
                .sort_by(|&a, &b| stop[b].total_cmp(&stop[a]).then_with(|| row_cmp(a, b)));
            let mut by_start_desc = rows.clone();
            by_start_desc
                .sort_by(|&a, &b| start[b].total_cmp(&start[a]).then_with(|| row_cmp(a, b)));

            let mut event_rows: Vec<usize> =
                rows.iter().copied().filter(|&i| status1[i]).collect();
            event_rows.sort_by(|&a, &b| stop[a].total_cmp(&stop[b]).then_with(|| row_cmp(a, b)));
            n_events += event_rows.len();
            let mut groups: Vec<EventGroup> = Vec::new();
            for i in event_rows {
                match groups.last_mut() {
                    Some(g) if g.time == stop[i] => g.rows.push(i),
                    _ => groups.push(EventGroup {
                        time: stop[i],
                        rows: vec![i],
                    }),
                }
            }
            for (gi, g) in groups.iter().enumerate() {
                for &i in &g.rows {
                    own_group[i] = Some(gi);
                }
            }
            groups.reverse(); // sweep runs through descending time
            strata.push(StratumPlan {
                by_stop_desc,
                by_start_desc,
                groups,
            });
        }

        // Cluster index per subject id, in sorted-id order.
        let mut cluster_ids: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &cp.rows {
            let next = cluster_ids.len();
            cluster_ids.entry(r.subject.as_str()).or_insert(next);
        }
        // BTreeMap iteration order re-numbers clusters by sorted id.
        let renumber: BTreeMap<&str, usize> = cluster_ids
            .keys()
            .enumerate()
            .map(|(i, &k)| (k, i))
            .collect();
        let cluster_of_row: Vec<usize> = cp
            .rows
            .iter()
            .map(|r| renumber[r.subject.as_str()])
            .collect();
        let n_clusters = renumber.len();
        let mut residual_order: Vec<usize> = (0..n_rows).collect();
        residual_order.sort_by(|&a, &b| {
            cluster_of_row[a]
                .cmp(&cluster_of_row[b])
                .then_with(|| row_cmp(a, b))
        });

        Ok(Engine {
            p,
            n_rows,
            z,
            start,
            stop,
            weight,
            status1,
            strata,
            stratum_values,
            row_stratum,
            own_group,
            cluster_of_row,
            n_clusters,
            residual_order,
            col_means,
            col_spread,
            n_events,
        })
    }

    fn risk_scores(&self, beta: &[f64]) -> Result<Vec<f64>> {
        let p = self.p;
        let mut r = Vec::with_capacity(self.n_rows);
        for i in 0..self.n_rows {
            let eta: f64 = self.z[i * p..(i + 1) * p]
                .iter()
                .zip(beta)
                .map(|(a, b)| a * b)
                .sum();
            let score = self.weight[i] * eta.exp();
            if !score.is_finite() {
                return Err(Error::DivergentLinearPredictor);
            }
            r.push(score);
        }
        Ok(r)
    }

    /// One pass over every stratum's event times in descending order,
    /// maintaining the risk-set sums by adding rows as their stop times are
    /// reached and dropping rows once their entry times pass.
    #[allow(clippy::type_complexity)]
    fn sweep(
        &self,
        beta: &[f64],
        collect: bool,
    ) -> Result<(f64, Vec<f64>, Vec<f64>, Option<Vec<StratumDetail>>)> {
        let p = self.p;
        let scores = self.risk_scores(beta)?;
        let mut ll = 0.0f64;
        let mut grad = vec![0.0f64; p];
        let mut hess = vec![0.0f64; p * p];
        let mut details: Vec<StratumDetail> = Vec::new();

        for plan in &self.strata {
            let mut s0 = 0.0f64;
            let mut s1 = vec![0.0f64; p];
            let mut s2 = vec![0.0f64; p * p];
            let mut add_ptr = 0usize;
            let mut drop_ptr = 0usize;
            let mut det = StratumDetail {
                times: Vec::with_capacity(plan.groups.len()),
                dlam: Vec::with_capacity(plan.groups.len()),
                zbar: Vec::with_capacity(plan.groups.len() * p),
            };

            for group in &plan.groups {
                let t = group.time;
                while add_ptr < plan.by_stop_desc.len() {
                    let i = plan.by_stop_desc[add_ptr];
                    if self.stop[i] < t {
                        break;
                    }
                    let r = scores[i];
                    s0 += r;
                    for j in 0..p {
                        s1[j] += r * self.z[i * p + j];
                    }
                    for j in 0..p {
                        let rz = r * self.z[i * p + j];
                        for k in 0..p {
                            s2[j * p + k] += rz * self.z[i * p + k];
                        }
                    }
                    add_ptr += 1;
                }
                while drop_ptr < plan.by_start_desc.len() {
                    let i = plan.by_start_desc[drop_ptr];
                    if self.start[i] < t {
                        break;
                    }
                    let r = scores[i];
                    s0 -= r;
                    for j in 0..p {
                        s1[j] -= r * self.z[i * p + j];
                    }
                    for j in 0..p {
                        let rz = r * self.z[i * p + j];
                        for k in 0..p {
                            s2[j * p + k] -= rz * self.z[i * p + k];
                        }
                    }
                    drop_ptr += 1;
                }

                debug_assert!(s0 > 0.0, "event row belongs to its own risk set");
                let log_s0 = s0.ln();
                let mut group_w = 0.0f64;
                for &e in &group.rows {
                    let w_e = self.weight[e];
                    group_w += w_e;
                    let eta_e: f64 = self.z[e * p..(e + 1) * p]
                        .iter()
                        .zip(beta)
                        .map(|(a, b)| a * b)
                        .sum();
                    ll += w_e * (eta_e - log_s0);
                    for j in 0..p {
                        grad[j] += w_e * (self.z[e * p + j] - s1[j] / s0);
                    }
                    for j in 0..p {
                        for k in 0..p {
                            hess[j * p + k] -=
                                w_e * (s2[j * p + k] / s0 - (s1[j] / s0) * (s1[k] / s0));
                        }
                    }
                }
                if collect {
                    det.times.push(t);
                    det.dlam.push(group_w / s0);
                    for j in 0..p {
                        det.zbar.push(s1[j] / s0);
                    }
                }
            }
            if collect {
                det.times.reverse();
                det.dlam.reverse();
                let k = det.times.len();
                let mut zbar = vec![0.0f64; k * p];
                for (rev_idx, chunk) in det.zbar.chunks(p).enumerate() {
                    let fwd = k - 1 - rev_idx;
                    zbar[fwd * p..(fwd + 1) * p].copy_from_slice(chunk);
                }
                det.zbar = zbar;
                details.push(det);
            }
        }
        if !ll.is_finite() {
            return Err(Error::DivergentLinearPredictor);
        }
        Ok((ll, grad, hess, collect.then_some(details)))
    }

    /// `Σ_g U_g U_g'` over subject clusters, where a row's score residual is
    /// its event part minus the IPCW-weighted compensator over the events its
    /// interval covers.
    fn cluster_meat(&self, beta: &[f64], details: &[StratumDetail]) -> Result<Vec<f64>> {
        let p = self.p;
        let scores = self.risk_scores(beta)?;

        // Prefix sums per stratum over ascending event times.
        let mut cum_lam: Vec<Vec<f64>> = Vec::with_capacity(details.len());
        let mut cum_h: Vec<Vec<f64>> = Vec::with_capacity(details.len());
        for det in details {
            let k = det.times.len();
            let mut lam = vec![0.0f64; k];
            let mut h = vec![0.0f64; k * p];
            let mut acc = 0.0f64;
            let mut acc_h = vec![0.0f64; p];
            for idx in 0..k {
                acc += det.dlam[idx];
                lam[idx] = acc;
                for j in 0..p {
                    acc_h[j] += det.dlam[idx] * det.zbar[idx * p + j];
                    h[idx * p + j] = acc_h[j];
                }
            }
            cum_lam.push(lam);
            cum_h.push(h);
        }

        let mut cluster_u = vec![0.0f64; self.n_clusters * p];
        for &i in &self.residual_order {
            let st = self.row_stratum[i];
            let det = &details[st];
            let times = &det.times;
            let lo = times.partition_point(|&t| t <= self.start[i]);
            let hi = times.partition_point(|&t| t <= self.stop[i]);
            let mut u = vec![0.0f64; p];
            if self.status1[i] {
                let gi = self.own_group[i].expect("event row has a group");
                for j in 0..p {
                    u[j] += self.weight[i] * (self.z[i * p + j] - det.zbar[gi * p + j]);
                }
            }
            if hi > lo {
                let lam_inc = cum_lam[st][hi - 1] - if lo > 0 { cum_lam[st][lo - 1] } else { 0.0 };
                for j in 0..p {
                    let h_inc = cum_h[st][(hi - 1) * p + j]
                        - if lo > 0 {
                            cum_h[st][(lo - 1) * p + j]
                        } else {
                            0.0
                        };
                    u[j] -= scores[i] * (self.z[i * p + j] * lam_inc - h_inc);
                }
            }
            let c = self.cluster_of_row[i];
            for j in 0..p {
                cluster_u[c * p + j] += u[j];
            }
        }

        let mut meat = vec![0.0f64; p * p];
        for c in 0..self.n_clusters {
            let u = &cluster_u[c * p..(c + 1) * p];
            for j in 0..p {
                for k in 0..p {
                    meat[j * p + k] += u[j] * u[k];
                }
            }
        }
        Ok(meat)
    }
}
