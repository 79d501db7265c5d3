//! Weighted random search for hyperparameter optimization.
//!
//! A run spends a fixed budget of trials. Weighted random search first
//! samples the space uniformly, estimates how much each dimension matters
//! with a tree-based functional ANOVA, and then proposes candidates that
//! resample each dimension with a probability proportional to its
//! importance and otherwise keep the incumbent's value. Random search,
//! Sobol sampling, Nelder–Mead and particle swarm are provided as
//! baselines on the same budget.
//!
//! Numerical kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix them to `f64`.

pub mod engine;
pub mod importance;
pub mod objectives;
pub mod reporting;
pub mod samplers;
mod scalar;
pub mod space;

pub use scalar::Scalar;

pub use engine::{run, RunConfig, RunOutcome, Strategy, TrialLog};
pub use space::{Candidate, Dimension, SearchSpace, Value};

pub type Forest = importance::Forest<f64>;
pub type ImportanceWeights = importance::ImportanceWeights<f64>;
pub type NelderMead = samplers::NelderMead<f64>;
pub type ParticleSwarm = samplers::ParticleSwarm<f64>;
pub type PolyFit = reporting::PolyFit<f64>;
