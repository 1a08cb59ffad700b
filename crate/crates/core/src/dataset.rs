//! Data model, CSV ingestion, and the counting-process transformation shared
//! by every estimator in the crate.
//!
//! Competing-risks observations are `(X, Δ, Δε, Z(·))` quadruplets: follow-up
//! time, event indicator, cause label (0 when censored), and a covariate path
//! that is either fixed at baseline or piecewise constant in time.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step::StepFunction;

/// One piecewise-constant segment of a time-dependent covariate vector:
/// `values` hold on `[start, stop)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSegment {
    pub start: f64,
    pub stop: f64,
    pub values: Vec<f64>,
}

/// Covariate path of one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovariatePath {
    Fixed(Vec<f64>),
    /// Segments partition `[0, time]` with no gaps or overlaps.
    Step(Vec<CovariateSegment>),
}

impl CovariatePath {
    pub fn dim(&self) -> usize {
        match self {
            CovariatePath::Fixed(v) => v.len(),
            CovariatePath::Step(segs) => segs.first().map_or(0, |s| s.values.len()),
        }
    }

    /// Covariate vector in force at time `t` (right-continuous; the last
    /// segment's values extend past its stop).
    pub fn at(&self, t: f64) -> &[f64] {
        match self {
            CovariatePath::Fixed(v) => v,
            CovariatePath::Step(segs) => {
                let idx = segs.partition_point(|seg| seg.start <= t);
                if idx == 0 {
                    &segs[0].values
                } else {
                    &segs[idx - 1].values
                }
            }
        }
    }

    /// Times in `(lo, hi)` at which the vector changes value.
    pub fn change_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            CovariatePath::Fixed(_) => Vec::new(),
            CovariatePath::Step(segs) => segs
                .iter()
                .skip(1)
                .map(|seg| seg.start)
                .filter(|&t| t > lo && t < hi)
                .collect(),
        }
    }
}

/// A single subject: id, follow-up time `X = T ∧ C`, event indicator `Δ`,
/// cause `Δε` (0 iff censored), and the covariate path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRecord {
    pub id: String,
    pub time: f64,
    pub status: u8,
    pub cause: u32,
    pub covariates: CovariatePath,
    /// True when the censoring at `time` was imposed by a prediction horizon
    /// rather than observed; such records are excluded from censoring KM fits.
    pub admin_censored: bool,
}

impl SubjectRecord {
    pub fn new(id: impl Into<String>, time: f64, cause: u32, covariates: Vec<f64>) -> Self {
        SubjectRecord {
            id: id.into(),
            time,
            status: u8::from(cause > 0),
            cause,
            covariates: CovariatePath::Fixed(covariates),
            admin_censored: false,
        }
    }
}

/// Validated competing-risks dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    rows: Vec<SubjectRecord>,
    covariate_names: Vec<String>,
    cause_labels: BTreeSet<u32>,
}

impl SurvivalDataset {
    pub fn new(rows: Vec<SubjectRecord>, covariate_names: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let p = covariate_names.len();
        let mut cause_labels = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for (i, r) in rows.iter().enumerate() {
            let row_no = i + 1;
            if !r.time.is_finite() || r.time <= 0.0 {
                return Err(Error::NonPositiveTime(row_no));
            }
            let consistent = match r.status {
                0 => r.cause == 0,
                1 => r.cause > 0,
                _ => false,
            };
            if !consistent {
                return Err(Error::StatusCauseMismatch(row_no));
            }
            if r.cause > 0 {
                cause_labels.insert(r.cause);
            }
            if r.covariates.dim() != p {
                return Err(Error::CovariateMismatch(format!(
                    "row {row_no} has {} covariates, expected {p}",
                    r.covariates.dim()
                )));
            }
            if let CovariatePath::Step(segs) = &r.covariates {
                validate_segments(&r.id, segs, r.time)?;
            }
            if !seen.insert(r.id.clone()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self {
            rows,
            covariate_names,
            cause_labels,
        })
    }

    pub fn rows(&self) -> &[SubjectRecord] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn cause_labels(&self) -> &BTreeSet<u32> {
        &self.cause_labels
    }

    /// Largest observed event or censoring time.
    pub fn max_time(&self) -> f64 {
        self.rows.iter().map(|r| r.time).fold(0.0, f64::max)
    }

    /// New dataset keeping the rows that satisfy `keep`, in place.
    pub fn filter(&self, keep: impl Fn(&SubjectRecord) -> bool) -> Result<SurvivalDataset> {
        let rows: Vec<SubjectRecord> = self.rows.iter().filter(|r| keep(r)).cloned().collect();
        SurvivalDataset::new(rows, self.covariate_names.clone())
    }

    /// Wide-format export: `id,time,status,cause,<covariates...>`. Only valid
    /// when every covariate path is fixed; time-dependent paths go through
    /// [`SurvivalDataset::write_long_csv`].
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let all_fixed = self
            .rows
            .iter()
            .all(|r| matches!(r.covariates, CovariatePath::Fixed(_)));
        write!(out, "id,time,status,cause")?;
        if all_fixed {
            for name in &self.covariate_names {
                write!(out, ",{name}")?;
            }
        }
        writeln!(out)?;
        for r in &self.rows {
            write!(out, "{},{},{},{}", r.id, r.time, r.status, r.cause)?;
            if all_fixed {
                if let CovariatePath::Fixed(v) = &r.covariates {
                    for x in v {
                        write!(out, ",{x}")?;
                    }
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Long-format export of the covariate paths:
    /// `id,tstart,tstop,<covariates...>`, one row per segment.
    pub fn write_long_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "id,tstart,tstop")?;
        for name in &self.covariate_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            let segs: Vec<CovariateSegment> = match &r.covariates {
                CovariatePath::Fixed(v) => vec![CovariateSegment {
                    start: 0.0,
                    stop: r.time,
                    values: v.clone(),
                }],
                CovariatePath::Step(segs) => segs.clone(),
            };
            for seg in segs {
                write!(out, "{},{},{}", r.id, seg.start, seg.stop)?;
                for x in &seg.values {
                    write!(out, ",{x}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

fn validate_segments(id: &str, segs: &[CovariateSegment], time: f64) -> Result<()> {
    if segs.is_empty() || segs[0].start != 0.0 {
        return Err(Error::BadCovariateIntervals(id.to_string()));
    }
    let p = segs[0].values.len();
    for pair in segs.windows(2) {
        if pair[0].stop != pair[1].start {
            return Err(Error::BadCovariateIntervals(id.to_string()));
        }
    }
    for seg in segs {
        if !(seg.start < seg.stop) || seg.values.len() != p {
            return Err(Error::BadCovariateIntervals(id.to_string()));
        }
    }
    if segs.last().unwrap().stop < time {
        return Err(Error::BadCovariateIntervals(id.to_string()));
    }
    Ok(())
}

/// Column-name mapping for [`load_csv`]. `covariates = None` takes every
/// column that is not id/time/status/cause, in header order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub id: String,
    pub time: String,
    pub status: String,
    pub cause: String,
    pub covariates: Option<Vec<String>>,
    /// Optional long-format companion file `id,tstart,tstop,<covariates...>`
    /// holding time-dependent covariates, joined on id.
    pub long_covariates: Option<PathBuf>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            id: "id".into(),
            time: "time".into(),
            status: "status".into(),
            cause: "cause".into(),
            covariates: None,
            long_covariates: None,
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| Error::BadCell {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

/// Read a wide-format CSV (plus optional long-format companion) into a
/// validated dataset. Rows come back sorted by id so downstream output is
/// deterministic regardless of file order.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<SurvivalDataset> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id_ix = col(&schema.id)?;
    let time_ix = col(&schema.time)?;
    let status_ix = col(&schema.status)?;
    let cause_ix = col(&schema.cause)?;

    let fixed_names: Vec<String> = match &schema.covariates {
        Some(names) => {
            for n in names {
                col(n)?;
            }
            names.clone()
        }
        None => headers
            .iter()
            .filter(|h| {
                ![&schema.id, &schema.time, &schema.status, &schema.cause].contains(h)
            })
            .cloned()
            .collect(),
    };
    let fixed_ix: Vec<usize> = fixed_names.iter().map(|n| col(n)).collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        let get = |ix: usize, name: &str| -> Result<f64> {
            let raw = record.get(ix).unwrap_or("");
            parse_cell(raw, row_no, name)
        };
        let time = get(time_ix, &schema.time)?;
        if !time.is_finite() || time <= 0.0 {
            return Err(Error::NonPositiveTime(row_no));
        }
        let status = get(status_ix, &schema.status)?;
        let cause = get(cause_ix, &schema.cause)?;
        if !(status == 0.0 || status == 1.0) || cause < 0.0 || cause.fract() != 0.0 {
            return Err(Error::StatusCauseMismatch(row_no));
        }
        let mut covs = Vec::with_capacity(fixed_ix.len());
        for (ix, name) in fixed_ix.iter().zip(&fixed_names) {
            covs.push(get(*ix, name)?);
        }
        rows.push(SubjectRecord {
            id: record.get(id_ix).unwrap_or("").to_string(),
            time,
            status: status as u8,
            cause: cause as u32,
            covariates: CovariatePath::Fixed(covs),
            admin_censored: false,
        });
    }
    rows.sort_by(|a, b| a.id.cmp(&b.id));

    let mut names = fixed_names;
    if let Some(long_path) = &schema.long_covariates {
        let (long_names, segments) = load_long(long_path)?;
        rows = join_long(rows, &segments)?;
        names.extend(long_names);
    }
    SurvivalDataset::new(rows, names)
}

fn load_long(path: &Path) -> Result<(Vec<String>, BTreeMap<String, Vec<CovariateSegment>>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    for required in ["id", "tstart", "tstop"] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::MissingColumn(required.to_string()));
        }
    }
    let id_ix = headers.iter().position(|h| h == "id").unwrap();
    let start_ix = headers.iter().position(|h| h == "tstart").unwrap();
    let stop_ix = headers.iter().position(|h| h == "tstop").unwrap();
    let value_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !["id", "tstart", "tstop"].contains(&h.as_str()))
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let mut by_id: BTreeMap<String, Vec<CovariateSegment>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        let id = record.get(id_ix).unwrap_or("").to_string();
        let start = parse_cell(record.get(start_ix).unwrap_or(""), row_no, "tstart")?;
        let stop = parse_cell(record.get(stop_ix).unwrap_or(""), row_no, "tstop")?;
        let mut values = Vec::with_capacity(value_cols.len());
        for (ix, name) in &value_cols {
            values.push(parse_cell(record.get(*ix).unwrap_or(""), row_no, name)?);
        }
        by_id.entry(id).or_default().push(CovariateSegment {
            start,
            stop,
            values,
        });
    }
    for segs in by_id.values_mut() {
        segs.sort_by(|a, b| a.start.total_cmp(&b.start));
    }
    let names = value_cols.into_iter().map(|(_, n)| n).collect();
    Ok((names, by_id))
}

fn join_long(
    rows: Vec<SubjectRecord>,
    segments: &BTreeMap<String, Vec<CovariateSegment>>,
) -> Result<Vec<SubjectRecord>> {
    rows.into_iter()
        .map(|mut r| {
            let segs = segments
                .get(&r.id)
                .ok_or_else(|| Error::BadCovariateIntervals(r.id.clone()))?;
            validate_segments(&r.id, segs, r.time)?;
            let fixed = match &r.covariates {
                CovariatePath::Fixed(v) => v.clone(),
                CovariatePath::Step(_) => unreachable!("wide rows are fixed"),
            };
            let merged: Vec<CovariateSegment> = segs
                .iter()
                .map(|seg| {
                    let mut values = fixed.clone();
                    values.extend_from_slice(&seg.values);
                    CovariateSegment {
                        start: seg.start,
                        stop: seg.stop,
                        values,
                    }
                })
                .collect();
            r.covariates = CovariatePath::Step(merged);
            Ok(r)
        })
        .collect()
}

/// One delayed-entry risk interval `(start, stop]` with its IPCW weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpRow {
    pub subject: String,
    pub start: f64,
    pub stop: f64,
    /// Cause-1 event at `stop` of this row.
    pub status1: bool,
    pub weight: f64,
    pub covariates: Vec<f64>,
    /// Landmark tag of the replicate this row came from (stacked supermodel
    /// data); `None` for plain fits.
    pub landmark: Option<f64>,
}

/// Counting-process encoding of a dataset: disjoint, ordered risk intervals
/// per subject, with weight 1 on any interval ending at or before the
/// subject's own observed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountingProcessTable {
    pub rows: Vec<CpRow>,
    pub covariate_names: Vec<String>,
    /// Subjects whose carried risk intervals were cut short because Ĝ reached
    /// zero before the end of follow-up.
    pub truncated_subjects: usize,
}

/// Risk-set convention for subjects failing from competing causes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskSetStyle {
    /// Fine-Gray: competing-event subjects stay in the risk set to the end of
    /// follow-up, IPCW-weighted (Geskus construction).
    FineGray,
    /// Competing events treated as random censoring at their event time.
    CauseSpecific,
}

/// Fine-Gray counting-process transformation with entry at time 0.
///
/// Subjects censored or failing from cause 1 contribute `(0, X]` with weight
/// 1; competing-event subjects are carried to the largest observed time with
/// intervals split at censoring jump times, carrying `w(t) = Ĝ(t−)/Ĝ(T−)`.
pub fn to_counting_process(
    ds: &SurvivalDataset,
    censoring_survival: &StepFunction,
) -> Result<CountingProcessTable> {
    to_counting_process_from(ds, censoring_survival, 0.0, RiskSetStyle::FineGray)
}

/// Counting-process transformation with delayed entry at `entry` (every
/// subject must satisfy `time > entry`).
pub fn to_counting_process_from(
    ds: &SurvivalDataset,
    censoring_survival: &StepFunction,
    entry: f64,
    style: RiskSetStyle,
) -> Result<CountingProcessTable> {
    let g = censoring_survival;
    if !g.is_censoring_survival() {
        return Err(Error::InvalidCensoringSurvival);
    }
    let tau_max = ds.max_time();
    let mut rows = Vec::with_capacity(ds.n());
    let mut truncated_subjects = 0usize;

    for r in ds.rows() {
        debug_assert!(r.time > entry, "delayed entry must precede every time");
        let competing = r.cause > 1 && style == RiskSetStyle::FineGray;
        let own_end = r.time;
        let status1 = r.status == 1 && r.cause == 1;

        // Interval boundaries: covariate change points over the subject's own
        // follow-up, then (for carried subjects) censoring jump times up to
        // the end of follow-up. No forced split at the event time itself:
        // the weight only changes where Ĝ jumps.
        let mut cuts: Vec<f64> = r.covariates.change_points(entry, own_end);
        if competing && own_end < tau_max {
            cuts.extend(
                g.jump_times()
                    .iter()
                    .copied()
                    .filter(|&c| c >= own_end && c < tau_max),
            );
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let carry_end = if competing { tau_max } else { own_end };
        let mut bounds = Vec::with_capacity(cuts.len() + 2);
        bounds.push(entry);
        bounds.extend(cuts.into_iter().filter(|&c| c > entry && c < carry_end));
        bounds.push(carry_end);

        let denom = g.at_minus(own_end);
        let mut truncated = false;
        for pair in bounds.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let weight = if b <= own_end {
                1.0
            } else {
                if denom <= 0.0 {
                    truncated = true;
                    break;
                }
                let w = g.at_minus(b) / denom;
                if w <= 0.0 {
                    truncated = true;
                    break;
                }
                w
            };
            rows.push(CpRow {
                subject: r.id.clone(),
                start: a,
                stop: b,
                status1: status1 && b == own_end,
                weight,
                covariates: r.covariates.at(a).to_vec(),
                landmark: None,
            });
        }
        if truncated {
            truncated_subjects += 1;
        }
    }
    Ok(CountingProcessTable {
        rows,
        covariate_names: ds.covariate_names().to_vec(),
        truncated_subjects,
    })
}

impl CountingProcessTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.covariate_names.len()
    }

    /// Long CSV export: `id,start,stop,status1,weight,<covariates>`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "id,start,stop,status1,weight")?;
        for name in &self.covariate_names {
            write!(out, ",{name}")?;
        }
        writeln!(out)?;
        for r in &self.rows {
            write!(
                out,
                "{},{},{},{},{}",
                r.subject,
                r.start,
                r.stop,
                u8::from(r.status1),
                r.weight
            )?;
            for x in &r.covariates {
                write!(out, ",{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<CountingProcessTable> {
        let mut rdr = csv::Reader::from_path(path)?;
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
        for required in ["id", "start", "stop", "status1", "weight"] {
            if !headers.iter().any(|h| h == required) {
                return Err(Error::MissingColumn(required.to_string()));
            }
        }
        let covariate_names: Vec<String> = headers[5..].to_vec();
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row_no = i + 1;
            let cell = |ix: usize| -> Result<f64> {
                parse_cell(record.get(ix).unwrap_or(""), row_no, &headers[ix])
            };
            let mut covariates = Vec::with_capacity(covariate_names.len());
            for ix in 5..headers.len() {
                covariates.push(cell(ix)?);
            }
            rows.push(CpRow {
                subject: record.get(0).unwrap_or("").to_string(),
                start: cell(1)?,
                stop: cell(2)?,
                status1: cell(3)? != 0.0,
                weight: cell(4)?,
                covariates,
                landmark: None,
            });
        }
        Ok(CountingProcessTable {
            rows,
            covariate_names,
            truncated_subjects: 0,
        })
    }
}
