//! Right-continuous step functions on `[0, ∞)`.
//!
//! One representation serves the censoring survival Ĝ, Breslow cumulative
//! subdistribution hazards, and Aalen-Johansen cumulative incidence curves.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant, right-continuous function: `initial` on `[0, t_1)` and
/// `values[j]` on `[t_j, t_{j+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    initial: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Build from `(jump time, value from that time on)` pairs. Times must be
    /// strictly increasing, finite, and positive.
    pub fn new(initial: f64, jumps: Vec<(f64, f64)>) -> Result<Self> {
        let mut times = Vec::with_capacity(jumps.len());
        let mut values = Vec::with_capacity(jumps.len());
        for (t, v) in jumps {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::UnsortedStepTimes);
            }
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(Error::UnsortedStepTimes);
                }
            }
            times.push(t);
            values.push(v);
        }
        Ok(Self {
            initial,
            times,
            values,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            initial: value,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Right-continuous evaluation: value on the segment containing `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u <= t);
        if idx == 0 {
            self.initial
        } else {
            self.values[idx - 1]
        }
    }

    /// Left limit at `t`: the value held strictly before `t`.
    pub fn at_minus(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&u| u < t);
        if idx == 0 {
            self.initial
        } else {
            self.values[idx - 1]
        }
    }

    /// `eval(b) - at_minus(a)`: the mass a cumulative function accrues on `[a, b]`.
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        self.eval(b) - self.at_minus(a)
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Multiply every level (including the initial one) by `c`.
    pub fn scale(&self, c: f64) -> StepFunction {
        StepFunction {
            initial: self.initial * c,
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Valid as a censoring survival function: starts at 1, nonincreasing,
    /// stays in [0, 1].
    pub fn is_censoring_survival(&self) -> bool {
        if self.initial != 1.0 {
            return false;
        }
        let mut prev = self.initial;
        for &v in &self.values {
            if !(0.0..=1.0).contains(&v) || v > prev {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Write `(t, value)` rows, starting with the initial value at t = 0.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,value")?;
        writeln!(out, "0,{}", self.initial)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_is_right_continuous() {
        let f = StepFunction::new(1.0, vec![(1.0, 0.5), (2.0, 0.25)]).unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.at_minus(1.0), 1.0);
        assert_eq!(f.eval(1.5), 0.5);
        assert_eq!(f.eval(2.0), 0.25);
        assert_eq!(f.at_minus(2.0), 0.5);
        assert_eq!(f.eval(10.0), 0.25);
    }

    #[test]
    fn rejects_unsorted_times() {
        assert!(StepFunction::new(1.0, vec![(2.0, 0.5), (1.0, 0.2)]).is_err());
        assert!(StepFunction::new(1.0, vec![(1.0, 0.5), (1.0, 0.2)]).is_err());
        assert!(StepFunction::new(1.0, vec![(0.0, 0.5)]).is_err());
    }

    #[test]
    fn increment_uses_left_limit_at_lower_end() {
        let f = StepFunction::new(0.0, vec![(1.0, 0.2), (3.0, 0.7)]).unwrap();
        // Mass on [1, 3] includes both jumps.
        assert_eq!(f.increment(1.0, 3.0), 0.7);
        assert_eq!(f.increment(1.5, 2.5), 0.0);
        assert!((f.increment(3.0, 3.0) - 0.5).abs() < 1e-15);
    }
}
