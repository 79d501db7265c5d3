//! Candidate generators: random search, the weighted random-search step,
//! and the Sobol, Nelder–Mead and particle-swarm baselines.

mod nelder_mead;
mod pso;
mod random;
mod sobol;

use thiserror::Error;

pub use nelder_mead::{nelder_mead_step, NelderMead, NelderMeadConfig};
pub use pso::{pso_step, ParticleSwarm, PsoConfig};
pub use random::{rs_step, wrs_step, wrs_step_at, ChangeProfile};
pub use sobol::{sobol_step, SobolSequence, MAX_DIMENSIONS as SOBOL_MAX_DIMENSIONS};

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("expected {expected} dimensions, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid change profile: {0}")]
    InvalidProfile(String),
    #[error("Sobol sequence supports 1..={max} dimensions, {requested} requested")]
    SobolDimensions { requested: usize, max: usize },
    #[error("simplex needs {expected} evaluated vertices, found {found}")]
    InvalidSimplex { expected: usize, found: usize },
    #[error("a score for the previously emitted point is required")]
    MissingScore,
    #[error("no point is awaiting a score")]
    UnexpectedScore,
    #[error("swarm needs at least 2 particles, found {0}")]
    SwarmTooSmall(usize),
    #[error("swarm has not been scored yet")]
    SwarmUninitialized,
    #[error("expected {expected} scores, found {found}")]
    ScoreCount { expected: usize, found: usize },
}
