//! Run orchestration: the random-search phase, importance estimation, the
//! weighted phase, baseline strategies, evaluation caching and trial logs.

mod cache;
mod log;
mod run;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::importance::{ForestConfig, ImportanceError, DEFAULT_P_MIN};
use crate::samplers::{NelderMeadConfig, PsoConfig, SamplerError};
use crate::space::{Candidate, SearchSpace, SpaceError};

pub use cache::{evaluate_with_cache, EvalCache, Evaluation};
pub use log::{LogError, LogHeader, ProfileRecord, TrialLog, LOG_FORMAT};
pub use run::{run, run_baseline, run_rs_phase, run_wrs, RunOutcome, TrialRunner};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Wrs,
    Rs,
    NelderMead,
    Pso,
    Sobol,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Wrs,
        Strategy::Rs,
        Strategy::NelderMead,
        Strategy::Pso,
        Strategy::Sobol,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Wrs => "wrs",
            Strategy::Rs => "rs",
            Strategy::NelderMead => "nelder-mead",
            Strategy::Pso => "pso",
            Strategy::Sobol => "sobol",
        }
    }

    /// Table label.
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Wrs => "WRS",
            Strategy::Rs => "RS",
            Strategy::NelderMead => "NM",
            Strategy::Pso => "PSO",
            Strategy::Sobol => "SS",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Strategy {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wrs" => Ok(Strategy::Wrs),
            "rs" | "random" => Ok(Strategy::Rs),
            "nelder-mead" | "nm" => Ok(Strategy::NelderMead),
            "pso" => Ok(Strategy::Pso),
            "sobol" | "ss" => Ok(Strategy::Sobol),
            other => Err(EngineError::UnknownStrategy(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Evaluated,
    CachedHit,
    Failed,
}

/// One consumed unit of budget.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    /// 1-based, consecutive within a run.
    pub iteration: u64,
    pub candidate: Candidate,
    /// Maximization-convention score; `-inf` for failures.
    pub score: f64,
    pub phase: Strategy,
    pub status: TrialStatus,
    /// Best score over iterations `1..=iteration`; `-inf` while none succeeded.
    pub best_score: f64,
    /// Failure reason, for failed trials and cached failures.
    pub reason: Option<String>,
    pub wall_time: Option<Duration>,
}

impl TrialRecord {
    pub fn is_failed(&self) -> bool {
        !self.score.is_finite()
    }
}

/// Incumbent: best candidate so far, its score, and where it was found.
#[derive(Clone, Debug, PartialEq)]
pub struct BestState {
    pub candidate: Candidate,
    pub score: f64,
    pub iteration: u64,
}

/// Returns the trial as the new incumbent iff its score is at least the
/// incumbent's (ties replace). Failed trials never become best.
pub fn update_best(best: Option<BestState>, trial: &TrialRecord) -> Option<BestState> {
    if trial.is_failed() {
        return best;
    }
    match best {
        Some(b) if trial.score < b.score => Some(b),
        _ => Some(BestState {
            candidate: trial.candidate.clone(),
            score: trial.score,
            iteration: trial.iteration,
        }),
    }
}

/// Tunables recorded in the log header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub p_min: f64,
    /// Change-probability overrides by dimension name; `*` applies to all.
    pub prob_overrides: BTreeMap<String, f64>,
    /// Minimum fresh-sample overrides by dimension name; `*` applies to all.
    pub kmin_overrides: BTreeMap<String, u64>,
    pub forest: ForestConfig,
    pub nelder_mead: NelderMeadConfig<f64>,
    pub pso: PsoConfig<f64>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            p_min: DEFAULT_P_MIN,
            prob_overrides: BTreeMap::new(),
            kmin_overrides: BTreeMap::new(),
            forest: ForestConfig::default(),
            nelder_mead: NelderMeadConfig::default(),
            pso: PsoConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub strategy: Strategy,
    /// Total number of trials `N`.
    pub budget: u64,
    /// Length `N0` of the random-search phase (weighted runs only).
    pub init: u64,
    pub seed: u64,
    pub settings: RunSettings,
    /// Store wall-clock durations in the log (makes logs non-reproducible).
    pub record_timing: bool,
}

impl RunConfig {
    pub fn new(strategy: Strategy, budget: u64, init: u64, seed: u64) -> Self {
        Self {
            strategy,
            budget,
            init,
            seed,
            settings: RunSettings::default(),
            record_timing: false,
        }
    }

    pub fn validate(&self, space: &SearchSpace) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.budget == 0 {
            return bad("budget must be at least 1".into());
        }
        if self.strategy == Strategy::Wrs && self.init >= self.budget {
            return bad(format!(
                "initial phase ({}) must be shorter than the budget ({})",
                self.init, self.budget
            ));
        }
        let s = &self.settings;
        if !(s.p_min > 0.0 && s.p_min <= 1.0) {
            return bad(format!("probability floor {} outside (0, 1]", s.p_min));
        }
        for (name, p) in &s.prob_overrides {
            if name != "*" && space.index_of(name).is_none() {
                return bad(format!("probability override for unknown dimension `{name}`"));
            }
            if !(*p > 0.0 && *p <= 1.0) {
                return bad(format!("probability override {name}={p} outside (0, 1]"));
            }
        }
        for name in s.kmin_overrides.keys() {
            if name != "*" && space.index_of(name).is_none() {
                return bad(format!("minimum-count override for unknown dimension `{name}`"));
            }
        }
        if s.forest.n_trees == 0 {
            return bad("importance forest needs at least one tree".into());
        }
        if s.pso.swarm_size < 2 {
            return bad(format!("swarm size {} below 2", s.pso.swarm_size));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error("unknown strategy `{0}` (expected wrs, rs, sobol, nelder-mead or pso)")]
    UnknownStrategy(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Importance(#[from] ImportanceError),
    #[error("all {} trials of the {phase} phase failed", log.records.len())]
    AllTrialsFailed { phase: Strategy, log: Box<TrialLog> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Value;

    fn trial(score: f64, iteration: u64) -> TrialRecord {
        TrialRecord {
            iteration,
            candidate: Candidate::new(vec![Value::Int(iteration as i64)]),
            score,
            phase: Strategy::Rs,
            status: if score.is_finite() { TrialStatus::Evaluated } else { TrialStatus::Failed },
            best_score: score,
            reason: None,
            wall_time: None,
        }
    }

    #[test]
    fn improvement_replaces_incumbent() {
        let best = update_best(None, &trial(0.80, 1));
        let best = update_best(best, &trial(0.85, 2)).unwrap();
        assert_eq!((best.score, best.iteration), (0.85, 2));
    }

    #[test]
    fn ties_replace_incumbent() {
        let best = update_best(None, &trial(0.85, 1));
        let best = update_best(best, &trial(0.85, 2)).unwrap();
        assert_eq!(best.iteration, 2);
    }

    #[test]
    fn failures_and_worse_scores_keep_incumbent() {
        let best = update_best(None, &trial(0.85, 1));
        let kept = update_best(best.clone(), &trial(f64::NEG_INFINITY, 2));
        assert_eq!(kept, best);
        let kept = update_best(best.clone(), &trial(0.5, 3));
        assert_eq!(kept, best);
        assert_eq!(update_best(None, &trial(f64::NEG_INFINITY, 1)), None);
    }

    #[test]
    fn strategy_tags_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.tag().parse::<Strategy>().unwrap(), s);
        }
        assert!(matches!("bo".parse::<Strategy>(), Err(EngineError::UnknownStrategy(_))));
    }
}
