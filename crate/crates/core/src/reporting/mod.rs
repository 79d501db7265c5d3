//! Run summaries (best, mean and spread over the whole run and a trailing
//! window), polynomial trend fits, and cross-run comparison tables.

mod polyfit;
mod table;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{Strategy, TrialLog, TrialRecord};

pub use polyfit::{polyfit, polyfit_series, PolyFit};
pub use table::{compare, fits_json, Comparison};

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_DEGREE: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("log has no trials")]
    EmptyLog,
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("{xs} abscissae but {ys} ordinates")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("a degree-{degree} fit needs more than {degree} points, found {len}")]
    SeriesTooShort { len: usize, degree: usize },
    #[error("abscissae do not determine a degree-{degree} polynomial")]
    RankDeficient { degree: usize },
    #[error("no logs to compare")]
    NoLogs,
}

/// Statistics over a run of records. Failed trials count towards `count`
/// but are excluded from best/mean/sd; `sd` uses the population divisor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowStats {
    pub count: usize,
    pub failed: usize,
    pub best: Option<f64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl WindowStats {
    pub fn of(records: &[TrialRecord]) -> Self {
        let scores: Vec<f64> = records.iter().map(|r| r.score).filter(|s| s.is_finite()).collect();
        let failed = records.len() - scores.len();
        if scores.is_empty() {
            return Self {
                count: records.len(),
                failed,
                best: None,
                mean: None,
                sd: None,
            };
        }
        // shifted by the first score so that constant windows give exactly 0
        let n = scores.len() as f64;
        let shift = scores[0];
        let dm = scores.iter().map(|s| s - shift).sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - shift - dm).powi(2)).sum::<f64>() / n;
        let mean = shift + dm;
        Self {
            count: records.len(),
            failed,
            best: scores.iter().copied().reduce(f64::max),
            mean: Some(mean),
            sd: Some(var.sqrt()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub budget: u64,
    pub objective: String,
    /// Requested trailing-window length.
    pub window: usize,
    pub all: WindowStats,
    /// Over the last `min(window, records)` records.
    pub last: WindowStats,
    /// Iteration of the best trial (latest one on ties).
    pub best_iteration: Option<u64>,
    /// Trend of successful scores against iteration index.
    pub fit: Option<PolyFit<f64>>,
}

/// Summarizes a log. The fit is omitted when there are too few successful
/// trials for the requested degree.
pub fn summarize(log: &TrialLog, window: usize, degree: usize) -> Result<RunReport, ReportError> {
    if log.records.is_empty() {
        return Err(ReportError::EmptyLog);
    }
    if window == 0 {
        return Err(ReportError::ZeroWindow);
    }
    let records = &log.records;
    let tail = &records[records.len().saturating_sub(window)..];
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter(|r| r.score.is_finite())
        .map(|r| (r.iteration as f64, r.score))
        .unzip();
    let fit = match polyfit(&xs, &ys, degree) {
        Ok(f) => Some(f),
        Err(ReportError::SeriesTooShort { .. } | ReportError::RankDeficient { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(RunReport {
        strategy: log.header.strategy,
        seed: log.header.seed,
        budget: log.header.budget,
        objective: log.header.objective.clone(),
        window,
        all: WindowStats::of(records),
        last: WindowStats::of(tail),
        best_iteration: log.best().map(|b| b.iteration),
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{LogHeader, RunSettings, TrialStatus, LOG_FORMAT};
    use crate::space::{Candidate, Dimension, SearchSpace, Value};

    pub(crate) fn log_of(strategy: Strategy, seed: u64, scores: &[f64]) -> TrialLog {
        let space = SearchSpace::new(vec![Dimension::integer("a", 0, 1000)]).unwrap();
        let mut best = f64::NEG_INFINITY;
        let records = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                best = best.max(s);
                TrialRecord {
                    iteration: i as u64 + 1,
                    candidate: Candidate::new(vec![Value::Int(i as i64)]),
                    score: s,
                    phase: strategy,
                    status: if s.is_finite() { TrialStatus::Evaluated } else { TrialStatus::Failed },
                    best_score: best,
                    reason: None,
                    wall_time: None,
                }
            })
            .collect();
        TrialLog {
            header: LogHeader {
                format: LOG_FORMAT.into(),
                strategy,
                budget: scores.len() as u64,
                init: 0,
                seed,
                objective: "custom".into(),
                space_digest: space.digest(),
                space,
                settings: RunSettings::default(),
                profile: None,
                warnings: vec![],
            },
            records,
        }
    }

    #[test]
    fn hand_worked_window() {
        let r = summarize(&log_of(Strategy::Rs, 0, &[0.5, 0.7, 0.6]), 2, 1).unwrap();
        assert_eq!(r.all.best, Some(0.7));
        assert!((r.all.mean.unwrap() - 0.6).abs() < 1e-15);
        assert!((r.last.mean.unwrap() - 0.65).abs() < 1e-15);
        assert_eq!(r.last.count, 2);
        assert_eq!(r.best_iteration, Some(2));
    }

    #[test]
    fn window_is_clamped_and_constant_scores_have_zero_sd() {
        let r = summarize(&log_of(Strategy::Rs, 0, &[0.4; 7]), 100, 5).unwrap();
        assert_eq!(r.last.count, 7);
        assert_eq!(r.all.sd, Some(0.0));
        assert_eq!(r.last.sd, Some(0.0));
    }

    #[test]
    fn failures_are_excluded_but_counted() {
        let r = summarize(&log_of(Strategy::Rs, 0, &[0.2, f64::NEG_INFINITY, 0.4]), 2, 5).unwrap();
        assert_eq!((r.all.count, r.all.failed), (3, 1));
        assert!((r.all.mean.unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(r.last.mean, Some(0.4));
        assert!(r.fit.is_none());
    }

    #[test]
    fn affine_rescaling() {
        let scores = [0.1, 0.9, 0.4, 0.35, 0.8];
        let scaled: Vec<f64> = scores.iter().map(|s| -3.0 * s + 2.0).collect();
        let a = summarize(&log_of(Strategy::Rs, 0, &scores), 3, 2).unwrap();
        let b = summarize(&log_of(Strategy::Rs, 0, &scaled), 3, 2).unwrap();
        assert!((b.all.mean.unwrap() - (-3.0 * a.all.mean.unwrap() + 2.0)).abs() < 1e-12);
        assert!((b.all.sd.unwrap() - 3.0 * a.all.sd.unwrap()).abs() < 1e-12);
        assert!((b.last.sd.unwrap() - 3.0 * a.last.sd.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn empty_log_and_zero_window() {
        assert_eq!(summarize(&log_of(Strategy::Rs, 0, &[]), 10, 5), Err(ReportError::EmptyLog));
        assert_eq!(summarize(&log_of(Strategy::Rs, 0, &[1.0]), 0, 5), Err(ReportError::ZeroWindow));
    }
}
