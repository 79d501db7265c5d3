//! Exact main-effect variance decomposition of piecewise-constant trees.

use serde::Serialize;

use super::forest::{Forest, Tree};
use super::ImportanceError;
use crate::scalar::Scalar;

/// Per-dimension share of total objective variance, in percent. The
/// remainder up to 100 is attributed to interactions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImportanceWeights<T> {
    pub fractions: Vec<T>,
}

impl<T: Scalar> ImportanceWeights<T> {
    pub fn interaction(&self) -> T {
        T::of(100.0) - self.fractions.iter().copied().sum::<T>()
    }
}

/// Main-effect fractions averaged over the forest's trees. Trees whose
/// prediction is constant over the box are skipped.
pub fn main_effect_fractions<T: Scalar>(forest: &Forest<T>) -> Result<ImportanceWeights<T>, ImportanceError> {
    if forest.is_degenerate() {
        return Err(ImportanceError::ZeroVariance);
    }
    let (lower, upper) = forest.bounds();
    let d = forest.dimensions();
    let mut sums = vec![T::zero(); d];
    let mut used = 0usize;
    for tree in forest.trees() {
        if let Some(fractions) = tree_fractions(tree, lower, upper) {
            for (s, f) in sums.iter_mut().zip(fractions) {
                *s += f;
            }
            used += 1;
        }
    }
    if used == 0 {
        return Err(ImportanceError::ZeroVariance);
    }
    let n = T::of_usize(used);
    Ok(ImportanceWeights {
        fractions: sums.into_iter().map(|s| s / n).collect(),
    })
}

/// Width of `[a, b]` relative to the axis; zero-width axes count as 1.
fn rel_width<T: Scalar>(a: T, b: T, lo: T, hi: T) -> T {
    if hi > lo {
        (b - a) / (hi - lo)
    } else {
        T::one()
    }
}

fn tree_fractions<T: Scalar>(tree: &Tree<T>, lower: &[T], upper: &[T]) -> Option<Vec<T>> {
    let d = lower.len();
    let leaves = tree.leaves();
    // widths[l][j]: share of axis j covered by leaf l
    let widths: Vec<Vec<T>> = leaves
        .iter()
        .map(|l| {
            (0..d)
                .map(|j| rel_width(l.lower[j], l.upper[j], lower[j], upper[j]))
                .collect()
        })
        .collect();
    let volumes: Vec<T> = widths.iter().map(|w| w.iter().copied().product()).collect();

    let mean: T = leaves.iter().zip(&volumes).map(|(l, v)| l.value * *v).sum();
    let second: T = leaves
        .iter()
        .zip(&volumes)
        .map(|(l, v)| l.value * l.value * *v)
        .sum();
    let total = second - mean * mean;
    let scale = second.abs().max(T::min_positive_value());
    if !(total > scale * T::epsilon() * T::of(16.0)) {
        return None;
    }

    let mut fractions = Vec::with_capacity(d);
    for i in 0..d {
        let mut cuts: Vec<T> = leaves.iter().flat_map(|l| [l.lower[i], l.upper[i]]).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        cuts.dedup();
        let others: Vec<T> = (0..leaves.len())
            .map(|l| {
                (0..d)
                    .filter(|&j| j != i)
                    .map(|j| widths[l][j])
                    .product()
            })
            .collect();
        let mut marginal_sq = T::zero();
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let mid = (a + b) / T::of(2.0);
            let value: T = leaves
                .iter()
                .zip(&others)
                .filter(|(l, _)| l.lower[i] <= mid && mid < l.upper[i])
                .map(|(l, o)| l.value * *o)
                .sum();
            marginal_sq += rel_width(a, b, lower[i], upper[i]) * value * value;
        }
        if cuts.len() < 2 {
            // zero-width axis: the marginal is the global mean
            marginal_sq = mean * mean;
        }
        let variance = (marginal_sq - mean * mean).max(T::zero());
        fractions.push(T::of(100.0) * variance / total);
    }
    Some(fractions)
}
