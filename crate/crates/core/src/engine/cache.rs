use std::collections::HashMap;

use super::TrialStatus;
use crate::objectives::Objective;
use crate::space::{Candidate, CandidateKey, SearchSpace, SpaceError};

#[derive(Clone, Debug, PartialEq)]
struct Cached {
    score: f64,
    reason: Option<String>,
}

/// Scores by candidate identity, including failures.
#[derive(Clone, Debug, Default)]
pub struct EvalCache {
    entries: HashMap<CandidateKey, Cached>,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub score: f64,
    pub status: TrialStatus,
    pub reason: Option<String>,
}

/// Scores `candidate`, calling the objective only on a cache miss. A failed
/// evaluation is cached as `-inf` and replayed on later hits.
pub fn evaluate_with_cache<O: Objective + ?Sized>(
    objective: &mut O,
    space: &SearchSpace,
    candidate: &Candidate,
    cache: &mut EvalCache,
) -> Result<Evaluation, SpaceError> {
    space.validate_candidate(candidate)?;
    let key = space.candidate_key(candidate)?;
    if let Some(hit) = cache.entries.get(&key) {
        return Ok(Evaluation {
            score: hit.score,
            status: TrialStatus::CachedHit,
            reason: hit.reason.clone(),
        });
    }
    let evaluation = match objective.evaluate(space, candidate) {
        Ok(score) if !score.is_nan() => Evaluation {
            score,
            status: TrialStatus::Evaluated,
            reason: None,
        },
        Ok(_) => Evaluation {
            score: f64::NEG_INFINITY,
            status: TrialStatus::Failed,
            reason: Some("nan".into()),
        },
        Err(e) => Evaluation {
            score: f64::NEG_INFINITY,
            status: TrialStatus::Failed,
            reason: Some(e.reason()),
        },
    };
    cache.entries.insert(
        key,
        Cached {
            score: evaluation.score,
            reason: evaluation.reason.clone(),
        },
    );
    Ok(evaluation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::EvalError;
    use crate::space::{Dimension, Value};

    fn space() -> SearchSpace {
        SearchSpace::new(vec![Dimension::integer("a", 0, 9), Dimension::integer("b", 0, 9)]).unwrap()
    }

    #[test]
    fn duplicate_is_served_from_cache() {
        let mut calls = 0;
        let mut obj = |_: &SearchSpace, c: &Candidate| {
            calls += 1;
            match c[0] {
                Value::Int(v) => Ok(v as f64),
                _ => unreachable!(),
            }
        };
        let mut cache = EvalCache::new();
        let c = Candidate::new(vec![Value::Int(3), Value::Int(4)]);
        let first = evaluate_with_cache(&mut obj, &space(), &c, &mut cache).unwrap();
        let second = evaluate_with_cache(&mut obj, &space(), &c, &mut cache).unwrap();
        assert_eq!(first.status, TrialStatus::Evaluated);
        assert_eq!(second.status, TrialStatus::CachedHit);
        assert_eq!(first.score, second.score);
        let other = Candidate::new(vec![Value::Int(3), Value::Int(5)]);
        evaluate_with_cache(&mut obj, &space(), &other, &mut cache).unwrap();
        assert_eq!(calls, 2);
    }

    #[test]
    fn failures_are_cached_as_negative_infinity() {
        let mut calls = 0;
        let mut obj = |_: &SearchSpace, _: &Candidate| {
            calls += 1;
            Err(EvalError::ExitStatus(Some(1)))
        };
        let mut cache = EvalCache::new();
        let c = Candidate::new(vec![Value::Int(1), Value::Int(1)]);
        let e = evaluate_with_cache(&mut obj, &space(), &c, &mut cache).unwrap();
        assert_eq!(e.score, f64::NEG_INFINITY);
        assert_eq!(e.status, TrialStatus::Failed);
        assert_eq!(e.reason.as_deref(), Some("exit-1"));
        let again = evaluate_with_cache(&mut obj, &space(), &c, &mut cache).unwrap();
        assert_eq!(again.status, TrialStatus::CachedHit);
        assert_eq!(again.score, f64::NEG_INFINITY);
        assert_eq!(calls, 1);
    }

    #[test]
    fn invalid_candidates_are_rejected() {
        let mut obj = |_: &SearchSpace, _: &Candidate| Ok(0.0);
        let mut cache = EvalCache::new();
        let c = Candidate::new(vec![Value::Int(10), Value::Int(1)]);
        assert!(evaluate_with_cache(&mut obj, &space(), &c, &mut cache).is_err());
    }
}
