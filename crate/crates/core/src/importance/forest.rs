//! Axis-aligned regression forest grown by greedy variance reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ImportanceError;
use crate::engine::{TrialRecord, TrialStatus};
use crate::scalar::Scalar;
use crate::space::SearchSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Minimum number of samples in a leaf.
    pub min_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 30,
            max_depth: 64,
            min_leaf: 2,
            bootstrap: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node<T> {
    Split {
        dim: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        value: T,
        samples: usize,
    },
}

/// Leaf cell: `lower <= x < upper` on every axis, with constant prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafBox<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tree<T> {
    nodes: Vec<Node<T>>,
    leaves: Vec<LeafBox<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    /// Leaf cells; together they partition the bounding box.
    pub fn leaves(&self) -> &[LeafBox<T>] {
        &self.leaves
    }

    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value, .. } => return *value,
                Node::Split { dim, threshold, left, right } => {
                    i = if x[*dim] < *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Dimensions used by at least one split.
    pub fn split_dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { dim, .. } => Some(*dim),
                Node::Leaf { .. } => None,
            })
            .collect();
        dims.sort_unstable();
        dims.dedup();
        dims
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Forest<T> {
    trees: Vec<Tree<T>>,
    lower: Vec<T>,
    upper: Vec<T>,
    config: ForestConfig,
    degenerate: bool,
}

impl<T: Scalar> Forest<T> {
    pub fn trees(&self) -> &[Tree<T>] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    /// Bounding box of the relaxed space.
    pub fn bounds(&self) -> (&[T], &[T]) {
        (&self.lower, &self.upper)
    }

    pub fn dimensions(&self) -> usize {
        self.lower.len()
    }

    /// True when every training score was identical; such a forest carries
    /// no importance information.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn predict(&self, x: &[T]) -> T {
        if self.trees.is_empty() {
            return T::nan();
        }
        let sum: T = self.trees.iter().map(|t| t.predict(x)).sum();
        sum / T::of_usize(self.trees.len())
    }
}

/// Fits a forest on raw points inside the box `[lower, upper]`.
///
/// Tree `t` draws its bootstrap sample from a ChaCha stream keyed by
/// `(seed, t)`, so the result does not depend on how trees are scheduled
/// across threads.
pub fn fit_forest_points<T: Scalar>(
    points: &[Vec<T>],
    scores: &[T],
    lower: Vec<T>,
    upper: Vec<T>,
    config: &ForestConfig,
    seed: u64,
) -> Result<Forest<T>, ImportanceError> {
    let d = lower.len();
    if points.len() != scores.len() {
        return Err(ImportanceError::DimensionMismatch {
            expected: points.len(),
            found: scores.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(ImportanceError::DimensionMismatch { expected: d, found: p.len() });
    }
    if points.len() < 2 {
        return Err(ImportanceError::TooFewTrials { found: points.len() });
    }
    if config.n_trees == 0 {
        return Err(ImportanceError::InvalidConfig("forest needs at least one tree".into()));
    }
    let degenerate = scores.iter().all(|s| *s == scores[0]);
    if degenerate {
        return Ok(Forest {
            trees: Vec::new(),
            lower,
            upper,
            config: config.clone(),
            degenerate,
        });
    }
    let min_leaf = config.min_leaf.max(1);
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let n = points.len();
            let sample: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                points,
                scores,
                max_depth: config.max_depth,
                min_leaf,
                nodes: Vec::new(),
                leaves: Vec::new(),
            };
            builder.grow(sample, 0, lower.clone(), upper.clone());
            Tree {
                nodes: builder.nodes,
                leaves: builder.leaves,
            }
        })
        .collect();
    Ok(Forest {
        trees,
        lower,
        upper,
        config: config.clone(),
        degenerate,
    })
}

/// Fits a forest on the evaluated trials of a run. Cached hits repeat an
/// earlier point and failed trials carry no score, so both are skipped.
pub fn fit_forest<T: Scalar>(
    trials: &[TrialRecord],
    space: &SearchSpace,
    config: &ForestConfig,
    seed: u64,
) -> Result<Forest<T>, ImportanceError> {
    let usable: Vec<&TrialRecord> = trials
        .iter()
        .filter(|t| t.status == TrialStatus::Evaluated && t.score.is_finite())
        .collect();
    let points: Vec<Vec<T>> = usable
        .iter()
        .map(|t| space.to_reals(&t.candidate).into_iter().map(T::of).collect())
        .collect();
    let scores: Vec<T> = usable.iter().map(|t| T::of(t.score)).collect();
    let (lower, upper): (Vec<T>, Vec<T>) = space
        .dimensions()
        .iter()
        .map(|d| {
            let (lo, hi) = d.relaxed_bounds();
            (T::of(lo), T::of(hi))
        })
        .unzip();
    fit_forest_points(&points, &scores, lower, upper, config, seed)
}

struct TreeBuilder<'a, T> {
    points: &'a [Vec<T>],
    scores: &'a [T],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node<T>>,
    leaves: Vec<LeafBox<T>>,
}

struct SplitChoice<T> {
    dim: usize,
    threshold: T,
    gain: T,
}

impl<T: Scalar> TreeBuilder<'_, T> {
    fn grow(&mut self, sample: Vec<usize>, depth: usize, lower: Vec<T>, upper: Vec<T>) -> usize {
        let id = self.nodes.len();
        let n = T::of_usize(sample.len());
        let mean = sample.iter().map(|&i| self.scores[i]).sum::<T>() / n;
        let split = if depth < self.max_depth && sample.len() >= 2 * self.min_leaf {
            self.best_split(&sample, mean)
        } else {
            None
        };
        let Some(split) = split else {
            self.nodes.push(Node::Leaf {
                value: mean,
                samples: sample.len(),
            });
            self.leaves.push(LeafBox { lower, upper, value: mean });
            return id;
        };
        self.nodes.push(Node::Leaf { value: mean, samples: 0 });
        let (left, right): (Vec<usize>, Vec<usize>) = sample
            .into_iter()
            .partition(|&i| self.points[i][split.dim] < split.threshold);
        let mut left_upper = upper.clone();
        left_upper[split.dim] = split.threshold;
        let mut right_lower = lower.clone();
        right_lower[split.dim] = split.threshold;
        let l = self.grow(left, depth + 1, lower, left_upper);
        let r = self.grow(right, depth + 1, right_lower, upper);
        self.nodes[id] = Node::Split {
            dim: split.dim,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }

    /// Split maximizing the reduction in squared error; thresholds sit
    /// halfway between consecutive distinct observed values.
    fn best_split(&self, sample: &[usize], mean: T) -> Option<SplitChoice<T>> {
        let n = sample.len();
        let first = self.scores[sample[0]];
        if sample.iter().all(|&i| self.scores[i] == first) {
            return None;
        }
        let total_sse: T = sample
            .iter()
            .map(|&i| (self.scores[i] - mean).powi(2))
            .sum();
        if total_sse <= T::zero() {
            return None;
        }
        let d = self.points[sample[0]].len();
        let mut best: Option<SplitChoice<T>> = None;
        let mut order = sample.to_vec();
        for dim in 0..d {
            order.sort_by(|&a, &b| {
                self.points[a][dim]
                    .partial_cmp(&self.points[b][dim])
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            // centred scores keep the running sums well conditioned
            let total: T = order.iter().map(|&i| self.scores[i] - mean).sum();
            let mut left_sum = T::zero();
            for k in 1..n {
                left_sum += self.scores[order[k - 1]] - mean;
                if k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                let a = self.points[order[k - 1]][dim];
                let b = self.points[order[k]][dim];
                if !(a < b) {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / T::of_usize(k)
                    + right_sum * right_sum / T::of_usize(n - k);
                if best.as_ref().is_none_or(|s| gain > s.gain) {
                    best = Some(SplitChoice {
                        dim,
                        threshold: (a + b) / T::of(2.0),
                        gain,
                    });
                }
            }
        }
        best.filter(|s| s.gain > total_sse * T::epsilon())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(vec![(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]);
            }
        }
        pts
    }

    #[test]
    fn single_deep_tree_splits_only_on_the_active_dimension() {
        let pts = grid(15);
        let y: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        let cfg = ForestConfig { n_trees: 1, bootstrap: false, ..ForestConfig::default() };
        let forest = fit_forest_points(&pts, &y, vec![0.0; 2], vec![1.0; 2], &cfg, 0).unwrap();
        assert_eq!(forest.trees()[0].split_dims(), vec![0]);
    }

    #[test]
    fn leaves_partition_the_box() {
        let pts = grid(10);
        let y: Vec<f64> = pts.iter().map(|p| (p[0] * 7.0).sin() + p[1] * p[1]).collect();
        let forest = fit_forest_points(&pts, &y, vec![0.0; 2], vec![1.0; 2], &ForestConfig::default(), 5)
            .unwrap();
        for tree in forest.trees() {
            let volume: f64 = tree
                .leaves()
                .iter()
                .map(|l| {
                    assert!(l.lower.iter().zip(&l.upper).all(|(a, b)| 0.0 <= *a && a < b && *b <= 1.0));
                    (l.upper[0] - l.lower[0]) * (l.upper[1] - l.lower[1])
                })
                .sum();
            assert!((volume - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_scores_flag_degeneracy() {
        let pts = grid(4);
        let y = vec![7.0; pts.len()];
        let forest = fit_forest_points(&pts, &y, vec![0.0; 2], vec![1.0; 2], &ForestConfig::default(), 0)
            .unwrap();
        assert!(forest.is_degenerate());
    }

    #[test]
    fn too_few_points() {
        let err = fit_forest_points(&[vec![0.5]], &[1.0], vec![0.0], vec![1.0], &ForestConfig::default(), 0)
            .unwrap_err();
        assert!(matches!(err, ImportanceError::TooFewTrials { found: 1 }));
    }

    #[test]
    fn fit_is_independent_of_thread_count() {
        let pts = grid(8);
        let y: Vec<f64> = pts.iter().map(|p| p[0] - 2.0 * p[1] * p[0]).collect();
        let cfg = ForestConfig::default();
        let a = fit_forest_points(&pts, &y, vec![0.0; 2], vec![1.0; 2], &cfg, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool
            .install(|| fit_forest_points(&pts, &y, vec![0.0; 2], vec![1.0; 2], &cfg, 9))
            .unwrap();
        assert_eq!(a, b);
    }
}
