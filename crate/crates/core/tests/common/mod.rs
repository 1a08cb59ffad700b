//! Shared helpers for the integration suites: brute-force oracles, random
//! data generators, and quadrature for the closed-form truth checks.
#![allow(dead_code)] // each test target uses its own subset

use lmpsh::dataset::{CountingProcessTable, CpRow};
use lmpsh::simulate::SettingParams;
use rand::Rng;

/// Brute-force weighted Breslow partial log-likelihood: risk sets enumerated
/// explicitly per event, independent of the sweep implementation.
pub fn brute_force_loglik(
    cp: &CountingProcessTable,
    beta: &[f64],
) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let p = beta.len();
    let mut ll = 0.0;
    let mut grad = vec![0.0; p];
    let mut hess = vec![vec![0.0; p]; p];
    for e in cp.rows.iter().filter(|r| r.status1) {
        let t = e.stop;
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![vec![0.0; p]; p];
        for r in cp.rows.iter().filter(|r| r.start < t && t <= r.stop) {
            let eta: f64 = r.covariates.iter().zip(beta).map(|(a, b)| a * b).sum();
            let score = r.weight * eta.exp();
            s0 += score;
            for j in 0..p {
                s1[j] += score * r.covariates[j];
                for k in 0..p {
                    s2[j][k] += score * r.covariates[j] * r.covariates[k];
                }
            }
        }
        let eta_e: f64 = e.covariates.iter().zip(beta).map(|(a, b)| a * b).sum();
        ll += e.weight * (eta_e - s0.ln());
        for j in 0..p {
            grad[j] += e.weight * (e.covariates[j] - s1[j] / s0);
            for k in 0..p {
                hess[j][k] -= e.weight * (s2[j][k] / s0 - s1[j] * s1[k] / (s0 * s0));
            }
        }
    }
    (ll, grad, hess)
}

/// Random counting-process table: up to `max_subjects` subjects with one to
/// three contiguous risk intervals, weights in (0, 1], occasional ties, and
/// at least one cause-1 event.
pub fn random_cp(rng: &mut impl Rng, max_subjects: usize, p: usize) -> CountingProcessTable {
    loop {
        let n = rng.gen_range(2..=max_subjects.max(2));
        let mut rows = Vec::new();
        let mut any_event = false;
        for i in 0..n {
            let pieces = rng.gen_range(1..=3);
            let mut start = 0.0f64;
            // Half-integer stops make exact ties across subjects common.
            for piece in 0..pieces {
                let stop = start + 0.5 * f64::from(rng.gen_range(1..=4u32));
                let last = piece == pieces - 1;
                let status1 = last && rng.gen_bool(0.45);
                any_event |= status1;
                rows.push(CpRow {
                    subject: format!("s{i:02}"),
                    start,
                    stop,
                    status1,
                    weight: if rng.gen_bool(0.5) {
                        1.0
                    } else {
                        rng.gen_range(0.05..=1.0)
                    },
                    covariates: (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    landmark: None,
                });
                start = stop;
            }
        }
        if any_event {
            return CountingProcessTable {
                rows,
                covariate_names: (0..p).map(|j| format!("z{j}")).collect(),
                truncated_subjects: 0,
            };
        }
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_step(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Cause-1 subdensity of a generator, from the analytic closed forms.
pub fn density1(setting: &SettingParams, t: f64, z: f64) -> f64 {
    match setting {
        SettingParams::One(p) => {
            let rate = p.lambda1 * (z * p.beta1).exp();
            let x = (rate * t).powf(p.alpha1);
            p.p * p.alpha1 * rate.powf(p.alpha1) * t.powf(p.alpha1 - 1.0) * (-x).exp()
        }
        SettingParams::Two(p) => {
            let a = 1.0 - p.p * (1.0 - (-(p.lambda2 * t).powf(p.alpha2)).exp());
            let b = (z * p.beta21 + z * p.beta22 * (t + 1.0).ln()).exp();
            let a_prime = -p.p
                * p.alpha2
                * p.lambda2.powf(p.alpha2)
                * t.powf(p.alpha2 - 1.0)
                * (-(p.lambda2 * t).powf(p.alpha2)).exp();
            let b_prime = if z * p.beta22 == 0.0 {
                0.0
            } else {
                (z * p.beta21).exp() * z * p.beta22 * (t + 1.0).powf(z * p.beta22 - 1.0)
            };
            -a.powf(b) * (b_prime * a.ln() + b * a_prime / a)
        }
    }
}

/// Conditional CIF by numerical integration of the conditional
/// subdistribution hazard — the second, independent route to the truth.
pub fn conditional_cif_by_quadrature(setting: &SettingParams, z: f64, s: f64, w: f64) -> f64 {
    let f1_s = setting.cif1(s, z);
    let denom_at_s = 1.0 - f1_s - setting.cif2(s, z);
    let hazard =
        move |t: f64| density1(setting, t, z) / (denom_at_s - (setting.cif1(t, z) - f1_s));
    let integral = integrate(hazard, s, s + w, 1e-12);
    1.0 - (-integral).exp()
}

/// Sample mean and standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}
