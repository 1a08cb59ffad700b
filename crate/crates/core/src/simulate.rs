//! Synthetic competing-risks data generators with non-proportional
//! subdistribution hazards, their closed-form cumulative incidence functions
//! (the truth oracles for every calibration check), and a substitute
//! time-dependent-covariate generator.
//!
//! Cause assignment follows the standard two-step recipe: draw the cause with
//! probability equal to the total cause-1 mass `F₁(∞; z)`, then draw the event
//! time from the normalized subdistribution by inverse transform. Type-2
//! times are exponential with rate `exp(z β_c)`; censoring is uniform and
//! independent of everything else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{CovariatePath, CovariateSegment, SubjectRecord, SurvivalDataset};
use crate::error::{Error, Result};

/// Right-censoring regime applied on top of the latent event times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Censoring {
    None,
    /// `C ~ Uniform(0, bound)`.
    UniformBound(f64),
    /// Uniform censoring with the bound solved so the expected censored
    /// fraction hits the target.
    TargetFraction(f64),
}

impl Censoring {
    fn validate(&self) -> Result<()> {
        match *self {
            Censoring::None => Ok(()),
            Censoring::UniformBound(b) if b > 0.0 && b.is_finite() => Ok(()),
            Censoring::UniformBound(b) => Err(Error::InvalidParameter(format!(
                "censoring bound must be positive, got {b}"
            ))),
            Censoring::TargetFraction(q) if (0.0..1.0).contains(&q) && q > 0.0 => Ok(()),
            Censoring::TargetFraction(q) => Err(Error::InvalidParameter(format!(
                "target censoring fraction must be in (0, 1), got {q}"
            ))),
        }
    }
}

/// First generator: Weibull-mixture subdistribution whose rate parameter
/// depends on the covariate, `F₁(t; z) = p(1 − exp[−{λ₁ e^{zβ₁} t}^{α₁}])`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Setting1Params {
    pub p: f64,
    pub alpha1: f64,
    pub lambda1: f64,
    pub beta1: f64,
    pub beta_c: f64,
    pub censoring: Censoring,
}

impl Default for Setting1Params {
    fn default() -> Self {
        Setting1Params {
            p: 0.3,
            alpha1: 3.2,
            lambda1: 0.18,
            beta1: -0.81,
            beta_c: 0.5,
            censoring: Censoring::None,
        }
    }
}

impl Setting1Params {
    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must be in (0, 1), got {}",
                self.p
            )));
        }
        if self.alpha1 <= 0.0 || self.lambda1 <= 0.0 {
            return Err(Error::InvalidParameter(
                "alpha1 and lambda1 must be positive".into(),
            ));
        }
        self.censoring.validate()
    }

    pub fn cif1(&self, t: f64, z: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let rate = self.lambda1 * (z * self.beta1).exp();
        self.p * (1.0 - (-(rate * t).powf(self.alpha1)).exp())
    }

    pub fn cause1_mass(&self, _z: f64) -> f64 {
        self.p
    }

    pub fn cif2(&self, t: f64, z: f64) -> f64 {
        cif2_exponential(1.0 - self.cause1_mass(z), self.beta_c, t, z)
    }

    fn invert_cause1(&self, u: f64, z: f64) -> f64 {
        let rate = self.lambda1 * (z * self.beta1).exp();
        (-(1.0 - u).ln()).powf(1.0 / self.alpha1) / rate
    }
}

/// Second generator: time-varying covariate effect through the exponent,
/// `F₁(t; z) = 1 − (1 − p[1 − exp{−(λ₂t)^{α₂}}])^{exp(zβ₂₁ + zβ₂₂ ln(t+1))}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Setting2Params {
    pub p: f64,
    pub alpha2: f64,
    pub lambda2: f64,
    pub beta21: f64,
    pub beta22: f64,
    pub beta_c: f64,
    pub censoring: Censoring,
}

impl Default for Setting2Params {
    fn default() -> Self {
        Setting2Params {
            p: 0.3,
            alpha2: 3.2,
            lambda2: 0.12,
            beta21: 0.8,
            beta22: 0.3,
            beta_c: 0.5,
            censoring: Censoring::None,
        }
    }
}

impl Setting2Params {
    fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must be in (0, 1), got {}",
                self.p
            )));
        }
        if self.alpha2 <= 0.0 || self.lambda2 <= 0.0 {
            return Err(Error::InvalidParameter(
                "alpha2 and lambda2 must be positive".into(),
            ));
        }
        if self.beta22 < 0.0 {
            return Err(Error::InvalidParameter(
                "beta22 must be nonnegative for the subdistribution to stay monotone".into(),
            ));
        }
        self.censoring.validate()
    }

    fn base(&self, t: f64) -> f64 {
        1.0 - self.p * (1.0 - (-(self.lambda2 * t).powf(self.alpha2)).exp())
    }

    fn exponent(&self, t: f64, z: f64) -> f64 {
        (z * self.beta21 + z * self.beta22 * (t + 1.0).ln()).exp()
    }

    pub fn cif1(&self, t: f64, z: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        1.0 - self.base(t).powf(self.exponent(t, z))
    }

    /// Cumulative subdistribution hazard `−ln(1 − F₁)`, written to avoid the
    /// catastrophic cancellation of `1 − F₁` deep in the tail.
    pub fn cumhaz1(&self, t: f64, z: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        -self.exponent(t, z) * self.base(t).ln()
    }

    pub fn cause1_mass(&self, z: f64) -> f64 {
        if z * self.beta22 > 0.0 {
            1.0
        } else {
            1.0 - (1.0 - self.p).powf((z * self.beta21).exp())
        }
    }

    pub fn cif2(&self, t: f64, z: f64) -> f64 {
        cif2_exponential(1.0 - self.cause1_mass(z), self.beta_c, t, z)
    }

    fn invert_cause1(&self, u: f64, z: f64) -> f64 {
        let target = u * self.cause1_mass(z);
        bisect_increasing(|t| self.cif1(t, z), target)
    }
}

fn cif2_exponential(mass2: f64, beta_c: f64, t: f64, z: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    mass2 * (1.0 - (-(z * beta_c).exp() * t).exp())
}

/// Solve `f(t) = target` for increasing `f` with `f(0) = 0` by bracketed
/// bisection to absolute tolerance 1e-10.
fn bisect_increasing(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0f64;
    let mut grow = 0;
    while f(hi) < target && grow < 200 {
        hi *= 2.0;
        grow += 1;
    }
    let mut lo = 0.0f64;
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Uniform bound making the expected censored fraction of the latent times
/// equal `q`: solves `mean_i min(T_i / b, 1) = q` by bisection.
pub fn censoring_bound_for_fraction(times: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target fraction must be in (0, 1), got {q}"
        )));
    }
    if times.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let frac = |b: f64| times.iter().map(|&t| (t / b).min(1.0)).sum::<f64>() / times.len() as f64;
    let mut lo = times.iter().copied().fold(f64::INFINITY, f64::min) * 1e-6;
    let mut hi = times.iter().copied().fold(0.0, f64::max).max(1.0);
    while frac(hi) > q {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frac(mid) > q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn subject_rng(seed: u64, index: usize) -> ChaCha12Rng {
    // Independent per-subject streams keyed off the master seed: generation
    // order (and parallel scheduling) cannot change the draws.
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

fn subject_id(index: usize, n: usize) -> String {
    let width = n.to_string().len().max(4);
    format!("s{:0width$}", index + 1)
}

struct Latent {
    z: f64,
    cause: u32,
    time: f64,
    censor_u: f64,
    onset: f64,
}

fn apply_censoring(
    mut latent: Vec<Latent>,
    censoring: Censoring,
) -> Result<(Vec<Latent>, Option<f64>)> {
    let bound = match censoring {
        Censoring::None => None,
        Censoring::UniformBound(b) => Some(b),
        Censoring::TargetFraction(q) => {
            let times: Vec<f64> = latent.iter().map(|l| l.time).collect();
            Some(censoring_bound_for_fraction(&times, q)?)
        }
    };
    if let Some(b) = bound {
        for l in latent.iter_mut() {
            let c = l.censor_u * b;
            if c < l.time {
                l.time = c;
                l.cause = 0;
            }
        }
    }
    Ok((latent, bound))
}

fn draw_common(rng: &mut ChaCha12Rng) -> (f64, f64, f64, f64, f64) {
    let z = f64::from(rng.gen::<f64>() < 0.5);
    let u_onset: f64 = rng.gen();
    let u_cause: f64 = rng.gen();
    let u_time: f64 = rng.gen();
    let censor_u: f64 = rng.gen();
    (z, u_onset, u_cause, u_time, censor_u)
}

/// First non-PSH setting.
pub fn sim_setting1(n: usize, params: &Setting1Params, seed: u64) -> Result<SurvivalDataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let latent: Vec<Latent> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = subject_rng(seed, i);
            let (z, _u_onset, u_cause, u_time, censor_u) = draw_common(&mut rng);
            let (cause, time) = if u_cause < params.cause1_mass(z) {
                (1, params.invert_cause1(u_time, z))
            } else {
                (2, -(1.0 - u_time).ln() / (z * params.beta_c).exp())
            };
            Latent {
                z,
                cause,
                time,
                censor_u,
                onset: f64::INFINITY,
            }
        })
        .collect();
    let (latent, _) = apply_censoring(latent, params.censoring)?;
    finish_fixed(latent, n)
}

/// Second non-PSH setting.
pub fn sim_setting2(n: usize, params: &Setting2Params, seed: u64) -> Result<SurvivalDataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let latent: Vec<Latent> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = subject_rng(seed, i);
            let (z, _u_onset, u_cause, u_time, censor_u) = draw_common(&mut rng);
            let (cause, time) = if u_cause < params.cause1_mass(z) {
                (1, params.invert_cause1(u_time, z))
            } else {
                (2, -(1.0 - u_time).ln() / (z * params.beta_c).exp())
            };
            Latent {
                z,
                cause,
                time,
                censor_u,
                onset: f64::INFINITY,
            }
        })
        .collect();
    let (latent, _) = apply_censoring(latent, params.censoring)?;
    finish_fixed(latent, n)
}

fn finish_fixed(latent: Vec<Latent>, n: usize) -> Result<SurvivalDataset> {
    let rows: Vec<SubjectRecord> = latent
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let mut time = l.time;
            if time <= 0.0 {
                time = f64::MIN_POSITIVE; // inverse transform can hit exact zero
            }
            SubjectRecord::new(subject_id(i, n), time, l.cause, vec![l.z])
        })
        .collect();
    SurvivalDataset::new(rows, vec!["z".into()])
}

/// Substitute generator with a time-dependent covariate: the second setting's
/// baseline covariate plus a binary covariate switching 0→1 at an exponential
/// onset time. From the switch on, the cause-1 subdistribution hazard is
/// multiplied by `exp(beta_td)` and the competing hazard by
/// `exp(beta_td_competing)` — an intermediate event that worsens both risks,
/// so treating competing events as plain censoring misprices the switched
/// subjects. Competing times run on a slowed exponential clock
/// (`competing_rate`) so competing events persist into late landmark windows.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TdCovParams {
    pub base: Setting2Params,
    pub onset_rate: f64,
    pub beta_td: f64,
    /// Effect of the switch on the competing hazard.
    pub beta_td_competing: f64,
    /// Scale on the type-2 exponential rate `competing_rate · exp(z β_c)`.
    pub competing_rate: f64,
}

impl Default for TdCovParams {
    fn default() -> Self {
        // beta22 = 0 keeps both covariate arms carrying competing mass and a
        // small p stops the switch effect from absorbing it, so the landmark
        // windows late in follow-up still see competing events; the
        // time-dependence comes entirely from the onset switch.
        TdCovParams {
            base: Setting2Params {
                p: 0.15,
                lambda2: 0.16,
                beta22: 0.0,
                ..Setting2Params::default()
            },
            onset_rate: 0.25,
            beta_td: 1.7,
            beta_td_competing: 1.0,
            competing_rate: 0.12,
        }
    }
}

impl TdCovParams {
    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.onset_rate > 0.0 && self.onset_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "onset rate must be positive, got {}",
                self.onset_rate
            )));
        }
        if !self.beta_td.is_finite() || !self.beta_td_competing.is_finite() {
            return Err(Error::InvalidParameter(
                "switch effects must be finite".into(),
            ));
        }
        if !(self.competing_rate > 0.0 && self.competing_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "competing rate must be positive, got {}",
                self.competing_rate
            )));
        }
        Ok(())
    }

    /// Cumulative competing hazard: an accelerating (shape-2 Weibull) clock
    /// `competing_rate · exp(z β_c) · t²`, multiplied by
    /// `exp(beta_td_competing)` from the switch on. The rising hazard keeps
    /// competing events present inside late landmark windows instead of
    /// burning out early.
    pub fn cumhaz2(&self, t: f64, z: f64, o: f64) -> f64 {
        let scale = self.competing_rate * (z * self.base.beta_c).exp();
        let base = |u: f64| scale * u * u;
        if t <= o {
            base(t)
        } else {
            base(o) + self.beta_td_competing.exp() * (base(t) - base(o))
        }
    }

    fn invert_cause2(&self, u: f64, z: f64, o: f64) -> f64 {
        let scale = self.competing_rate * (z * self.base.beta_c).exp();
        let target = -(1.0 - u).ln();
        let at_onset = scale * o * o;
        let base_target = if target <= at_onset {
            target
        } else {
            at_onset + (target - at_onset) / self.beta_td_competing.exp()
        };
        (base_target / scale).sqrt()
    }

    /// Piecewise cumulative subdistribution hazard given onset time `o`.
    pub fn cumhaz(&self, t: f64, z: f64, o: f64) -> f64 {
        let base = &self.base;
        if t <= o {
            base.cumhaz1(t, z)
        } else {
            base.cumhaz1(o, z) + self.beta_td.exp() * (base.cumhaz1(t, z) - base.cumhaz1(o, z))
        }
    }

    fn cause1_mass(&self, z: f64, o: f64) -> f64 {
        if z * self.base.beta22 > 0.0 {
            return 1.0; // cumulative hazard diverges
        }
        let total = -(1.0 - self.base.p).ln() * (z * self.base.beta21).exp();
        let switched = self.cumhaz_limit(total, z, o);
        1.0 - (-switched).exp()
    }

    fn cumhaz_limit(&self, total: f64, z: f64, o: f64) -> f64 {
        let at_onset = self.base.cumhaz1(o, z).min(total);
        at_onset + self.beta_td.exp() * (total - at_onset)
    }

    fn invert_cause1(&self, u: f64, z: f64, o: f64) -> f64 {
        let target = -(1.0 - u * self.cause1_mass(z, o)).ln();
        let at_onset = self.base.cumhaz1(o, z);
        let base_target = if target <= at_onset {
            target
        } else {
            at_onset + (target - at_onset) / self.beta_td.exp()
        };
        bisect_increasing(|t| self.base.cumhaz1(t, z), base_target)
    }
}

/// Generate the time-dependent-covariate setting; covariates are
/// `(z, v(t))` with `v` the onset switch, stored as step segments.
pub fn sim_tdcov(n: usize, params: &TdCovParams, seed: u64) -> Result<SurvivalDataset> {
    params.validate()?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let latent: Vec<Latent> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = subject_rng(seed, i);
            let (z, u_onset, u_cause, u_time, censor_u) = draw_common(&mut rng);
            let onset = -(1.0 - u_onset).ln() / params.onset_rate;
            let mass = params.cause1_mass(z, onset);
            let (cause, time) = if u_cause < mass {
                (1, params.invert_cause1(u_time, z, onset))
            } else {
                (2, params.invert_cause2(u_time, z, onset))
            };
            Latent {
                z,
                cause,
                time,
                censor_u,
                onset,
            }
        })
        .collect();
    let (latent, _) = apply_censoring(latent, params.base.censoring)?;
    let rows: Vec<SubjectRecord> = latent
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let time = if l.time <= 0.0 {
                f64::MIN_POSITIVE
            } else {
                l.time
            };
            let covariates = if l.onset < time {
                CovariatePath::Step(vec![
                    CovariateSegment {
                        start: 0.0,
                        stop: l.onset,
                        values: vec![l.z, 0.0],
                    },
                    CovariateSegment {
                        start: l.onset,
                        stop: time,
                        values: vec![l.z, 1.0],
                    },
                ])
            } else {
                CovariatePath::Fixed(vec![l.z, 0.0])
            };
            SubjectRecord {
                id: subject_id(i, n),
                time,
                status: u8::from(l.cause > 0),
                cause: l.cause,
                covariates,
                admin_censored: false,
            }
        })
        .collect();
    SurvivalDataset::new(rows, vec!["z".into(), "v".into()])
}

/// Generator choice for the closed-form truth oracle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum SettingParams {
    One(Setting1Params),
    Two(Setting2Params),
}

impl SettingParams {
    pub fn cif1(&self, t: f64, z: f64) -> f64 {
        match self {
            SettingParams::One(p) => p.cif1(t, z),
            SettingParams::Two(p) => p.cif1(t, z),
        }
    }

    pub fn cif2(&self, t: f64, z: f64) -> f64 {
        match self {
            SettingParams::One(p) => p.cif2(t, z),
            SettingParams::Two(p) => p.cif2(t, z),
        }
    }

    pub fn cause1_mass(&self, z: f64) -> f64 {
        match self {
            SettingParams::One(p) => p.cause1_mass(z),
            SettingParams::Two(p) => p.cause1_mass(z),
        }
    }
}

/// Closed-form conditional CIF
/// `{F₁(s+w; z) − F₁(s; z)} / {1 − F₁(s; z) − F₂(s; z)}`.
pub fn true_conditional_cif(setting: &SettingParams, z: f64, s: f64, w: f64) -> f64 {
    let num = setting.cif1(s + w, z) - setting.cif1(s, z);
    let denom = 1.0 - setting.cif1(s, z) - setting.cif2(s, z);
    (num / denom).clamp(0.0, 1.0)
}
