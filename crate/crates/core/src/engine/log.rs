//! Trial logs as JSON Lines: one header object, then one object per trial.
//!
//! Failed scores are written as `null`. Wall-clock durations are only
//! present when timing was requested, so by default a log is a pure
//! function of its configuration.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{update_best, BestState, RunSettings, Strategy, TrialRecord, TrialStatus};
use crate::space::{SearchSpace, SpaceError};

pub const LOG_FORMAT: &str = "wrs-trial-log/1";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {cause}")]
    Io {
        path: String,
        cause: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("empty log")]
    Empty,
}

fn parse_err(line: usize, message: impl Into<String>) -> LogError {
    LogError::Parse {
        line,
        message: message.into(),
    }
}

/// Importance results and the sampling profile derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    /// Main-effect shares in percent, one per dimension.
    pub weights: Vec<f64>,
    /// Share left to interactions, in percent.
    pub interaction: f64,
    pub probabilities: Vec<f64>,
    pub k_mins: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub strategy: Strategy,
    pub budget: u64,
    pub init: u64,
    pub seed: u64,
    pub objective: String,
    pub space_digest: String,
    pub space: SearchSpace,
    pub settings: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TrialLine {
    iter: u64,
    phase: Strategy,
    status: TrialStatus,
    score: Option<f64>,
    best: Option<f64>,
    x: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wall_ms: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialLog {
    pub header: LogHeader,
    pub records: Vec<TrialRecord>,
}

impl TrialLog {
    pub fn space(&self) -> &SearchSpace {
        &self.header.space
    }

    /// Incumbent at the end of the run.
    pub fn best(&self) -> Option<BestState> {
        self.records.iter().fold(None, update_best)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            let line = TrialLine {
                iter: r.iteration,
                phase: r.phase,
                status: r.status,
                score: finite(r.score),
                best: finite(r.best_score),
                x: self.header.space.candidate_to_json(&r.candidate),
                reason: r.reason.clone(),
                wall_ms: r.wall_time.map(|d| d.as_secs_f64() * 1e3),
            };
            out.push_str(&serde_json::to_string(&line).expect("trial serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), LogError> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|cause| LogError::Io {
            path: path.display().to_string(),
            cause,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|cause| LogError::Io {
            path: path.display().to_string(),
            cause,
        })?;
        Self::parse(&text)
    }

    /// Parses and checks a log: known format, matching space digest,
    /// consecutive iterations from 1, valid candidates, and a running best
    /// consistent with the scores.
    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let (n, first) = lines.next().ok_or(LogError::Empty)?;
        let header: LogHeader =
            serde_json::from_str(first).map_err(|e| parse_err(n, format!("bad header: {e}")))?;
        if header.format != LOG_FORMAT {
            return Err(parse_err(n, format!("unsupported log format `{}`", header.format)));
        }
        if header.space.digest() != header.space_digest {
            return Err(parse_err(n, "search-space digest does not match the recorded space"));
        }
        let space = &header.space;
        let mut records = Vec::new();
        let mut running = f64::NEG_INFINITY;
        for (n, text) in lines {
            let line: TrialLine = serde_json::from_str(text).map_err(|e| parse_err(n, e.to_string()))?;
            let expected = records.len() as u64 + 1;
            if line.iter != expected {
                return Err(parse_err(n, format!("expected iteration {expected}, found {}", line.iter)));
            }
            let candidate = space
                .candidate_from_json(&line.x)
                .and_then(|c| space.validate_candidate(&c).map(|_| c))
                .map_err(|e: SpaceError| parse_err(n, e.to_string()))?;
            let score = line.score.unwrap_or(f64::NEG_INFINITY);
            if line.status == TrialStatus::Failed && line.score.is_some() {
                return Err(parse_err(n, "failed trial carries a score"));
            }
            if score > running {
                running = score;
            }
            let best_score = line.best.unwrap_or(f64::NEG_INFINITY);
            if best_score != running {
                return Err(parse_err(n, format!("running best {best_score} disagrees with scores ({running})")));
            }
            records.push(TrialRecord {
                iteration: line.iter,
                candidate,
                score,
                phase: line.phase,
                status: line.status,
                best_score,
                reason: line.reason,
                wall_time: line
                    .wall_ms
                    .filter(|ms| ms.is_finite() && *ms >= 0.0)
                    .map(|ms| Duration::from_secs_f64(ms / 1e3)),
            });
        }
        Ok(Self { header, records })
    }
}
