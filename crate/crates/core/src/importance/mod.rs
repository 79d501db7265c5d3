//! Dimension importance from phase-one trials: a regression forest, its
//! exact main-effect variance decomposition, and the mapping from weights
//! to change probabilities and minimum fresh-sample counts.

mod anova;
mod forest;

use thiserror::Error;

use crate::scalar::Scalar;

pub use anova::{main_effect_fractions, ImportanceWeights};
pub use forest::{fit_forest, fit_forest_points, Forest, ForestConfig, LeafBox, Node, Tree};

/// Default lower clamp for change probabilities.
pub const DEFAULT_P_MIN: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum ImportanceError {
    #[error("need at least 2 usable trials, found {found}")]
    TooFewTrials { found: usize },
    #[error("objective has zero variance over the trials; importance is undefined")]
    ZeroVariance,
    #[error("all importance weights are zero")]
    AllZeroWeights,
    #[error("expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial phase length {n0} must be smaller than the budget {n}")]
    InitNotBelowBudget { n0: u64, n: u64 },
    #[error("{0}")]
    InvalidConfig(String),
}

/// `p_i = w_i / max_j w_j`, clamped below at `p_min`. Dimensions attaining
/// the maximum weight get exactly 1.
pub fn weights_to_probabilities<T: Scalar>(weights: &[T], p_min: T) -> Result<Vec<T>, ImportanceError> {
    if !(p_min > T::zero() && p_min <= T::one()) {
        return Err(ImportanceError::InvalidConfig(format!(
            "probability floor {p_min} outside (0, 1]"
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
        return Err(ImportanceError::InvalidConfig(
            "weights must be finite and non-negative".into(),
        ));
    }
    let max = weights.iter().copied().fold(T::zero(), T::max);
    if !(max > T::zero()) {
        return Err(ImportanceError::AllZeroWeights);
    }
    Ok(weights
        .iter()
        .map(|w| if *w == max { T::one() } else { (*w / max).max(p_min) })
        .collect())
}

/// Default minimum fresh-sample counts: `n0` for every dimension, so the
/// phase-one draws already satisfy the requirement when the weighted phase
/// starts.
pub fn min_samples_schedule<T>(probs: &[T], n0: u64, n: u64) -> Result<Vec<u64>, ImportanceError> {
    if n0 >= n {
        return Err(ImportanceError::InitNotBelowBudget { n0, n });
    }
    Ok(vec![n0; probs.len()])
}
