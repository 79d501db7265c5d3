//! Plain random search and the weighted random-search step.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::space::{Candidate, SearchSpace};

/// Per-dimension change probabilities, minimum fresh-sample counts, and the
/// running count of fresh values generated for each dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeProfile {
    probs: Vec<f64>,
    k_mins: Vec<u64>,
    gen_counts: Vec<u64>,
}

impl ChangeProfile {
    /// Builds a profile; every probability must lie in `(0, 1]` and the
    /// largest must be exactly one.
    pub fn new(probs: Vec<f64>, k_mins: Vec<u64>) -> Result<Self, SamplerError> {
        if probs.is_empty() {
            return Err(SamplerError::InvalidProfile("no dimensions".into()));
        }
        if probs.len() != k_mins.len() {
            return Err(SamplerError::InvalidProfile(format!(
                "{} probabilities but {} minimum counts",
                probs.len(),
                k_mins.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(SamplerError::InvalidProfile(format!(
                "probability {p} outside (0, 1]"
            )));
        }
        if !probs.contains(&1.0) {
            return Err(SamplerError::InvalidProfile(
                "at least one probability must equal 1".into(),
            ));
        }
        let gen_counts = vec![0; probs.len()];
        Ok(Self {
            probs,
            k_mins,
            gen_counts,
        })
    }

    /// Every dimension changes on every step: plain random search.
    pub fn uniform(d: usize) -> Self {
        Self {
            probs: vec![1.0; d],
            k_mins: vec![0; d],
            gen_counts: vec![0; d],
        }
    }

    pub fn with_gen_counts(mut self, counts: Vec<u64>) -> Result<Self, SamplerError> {
        if counts.len() != self.probs.len() {
            return Err(SamplerError::DimensionMismatch {
                expected: self.probs.len(),
                found: counts.len(),
            });
        }
        self.gen_counts = counts;
        Ok(self)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn k_mins(&self) -> &[u64] {
        &self.k_mins
    }

    pub fn gen_counts(&self) -> &[u64] {
        &self.gen_counts
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Records one fresh value for every dimension (a plain RS step).
    pub fn record_full_resample(&mut self) {
        self.gen_counts.iter_mut().for_each(|c| *c += 1);
    }

    /// Whether dimension `i` is resampled when the shared draw is `p`.
    fn resamples(&self, i: usize, p: f64) -> bool {
        self.probs[i] >= p || self.gen_counts[i] < self.k_mins[i]
    }
}

/// Draws every coordinate afresh.
pub fn rs_step<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Candidate {
    Candidate::new(space.dimensions().iter().map(|d| d.sample(rng)).collect())
}

/// One weighted random-search proposal.
///
/// A single threshold `p ~ U(0,1)` is drawn from `coin`; dimension `i` gets a
/// fresh value from `values` when `p_i >= p` or it has not yet produced
/// `k_i` fresh values, and otherwise keeps the incumbent's coordinate.
/// Keeping the threshold draw on its own stream means that with all
/// `p_i = 1` the value stream is consumed exactly as by [`rs_step`].
pub fn wrs_step<R1, R2>(
    space: &SearchSpace,
    best: &Candidate,
    profile: &mut ChangeProfile,
    coin: &mut R1,
    values: &mut R2,
) -> Result<Candidate, SamplerError>
where
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    let p: f64 = coin.sample(Open01);
    wrs_step_at(space, best, profile, p, values)
}

/// [`wrs_step`] with the threshold supplied by the caller.
pub fn wrs_step_at<R: Rng + ?Sized>(
    space: &SearchSpace,
    best: &Candidate,
    profile: &mut ChangeProfile,
    p: f64,
    values: &mut R,
) -> Result<Candidate, SamplerError> {
    let d = space.dim();
    if profile.len() != d {
        return Err(SamplerError::DimensionMismatch {
            expected: d,
            found: profile.len(),
        });
    }
    if best.len() != d {
        return Err(SamplerError::DimensionMismatch {
            expected: d,
            found: best.len(),
        });
    }
    let mut next = best.clone();
    for (i, dim) in space.dimensions().iter().enumerate() {
        if profile.resamples(i, p) {
            next.set(i, dim.sample(values));
            profile.gen_counts[i] += 1;
        }
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Value};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_space(d: usize) -> SearchSpace {
        SearchSpace::new((0..d).map(|i| Dimension::real(format!("x{i}"), 0.0, 1.0)).collect())
            .unwrap()
    }

    #[test]
    fn profile_invariants() {
        assert!(ChangeProfile::new(vec![0.5, 0.3], vec![0, 0]).is_err());
        assert!(ChangeProfile::new(vec![1.0, 0.0], vec![0, 0]).is_err());
        assert!(ChangeProfile::new(vec![1.0, 1.2], vec![0, 0]).is_err());
        assert!(ChangeProfile::new(vec![1.0], vec![0, 0]).is_err());
        assert!(ChangeProfile::new(vec![1.0, 0.3], vec![0, 0]).is_ok());
    }

    #[test]
    fn rs_step_on_degenerate_space() {
        let space = SearchSpace::new(vec![Dimension::integer("k", 5, 5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(rs_step(&space, &mut rng), Candidate::new(vec![Value::Int(5)]));
    }

    #[test]
    fn rs_step_is_deterministic_per_seed() {
        let space = unit_space(3);
        let a = rs_step(&space, &mut ChaCha8Rng::seed_from_u64(9));
        let b = rs_step(&space, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn threshold_rule_applies_per_dimension() {
        let space = unit_space(2);
        let best = Candidate::new(vec![Value::Real(0.9), Value::Real(0.9)]);
        let mut profile = ChangeProfile::new(vec![1.0, 0.3], vec![0, 0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let next = wrs_step_at(&space, &best, &mut profile, 0.5, &mut rng).unwrap();
        assert_ne!(next[0], best[0]);
        assert_eq!(next[1], best[1]);
        assert_eq!(profile.gen_counts(), &[1, 0]);
    }

    #[test]
    fn minimum_counts_force_resampling() {
        let space = unit_space(2);
        let best = Candidate::new(vec![Value::Real(0.9), Value::Real(0.9)]);
        let mut profile = ChangeProfile::new(vec![1.0, 0.01], vec![0, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..3 {
            let next = wrs_step_at(&space, &best, &mut profile, 0.5, &mut rng).unwrap();
            assert_ne!(next[1], best[1]);
        }
        let next = wrs_step_at(&space, &best, &mut profile, 0.5, &mut rng).unwrap();
        assert_eq!(next[1], best[1]);
        assert_eq!(profile.gen_counts(), &[4, 3]);
    }

    #[test]
    fn all_ones_matches_rs_stream() {
        let space = unit_space(4);
        let best = Candidate::new(vec![Value::Real(0.0); 4]);
        let mut profile = ChangeProfile::uniform(4);
        let mut coin = ChaCha8Rng::seed_from_u64(100);
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let w = wrs_step(&space, &best, &mut profile, &mut coin, &mut a).unwrap();
            let r = rs_step(&space, &mut b);
            assert_eq!(w, r);
        }
    }

    #[test]
    fn mismatched_profile_is_rejected() {
        let space = unit_space(3);
        let best = Candidate::new(vec![Value::Real(0.0); 3]);
        let mut profile = ChangeProfile::uniform(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            wrs_step_at(&space, &best, &mut profile, 0.5, &mut rng),
            Err(SamplerError::DimensionMismatch { .. })
        ));
    }
}
