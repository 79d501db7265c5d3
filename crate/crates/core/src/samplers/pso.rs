//! Particle swarm with constriction coefficients, driven batch by batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::scalar::Scalar;
use crate::space::{Candidate, SearchSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig<T> {
    pub swarm_size: usize,
    pub inertia: T,
    pub cognitive: T,
    pub social: T,
}

impl<T: Scalar> Default for PsoConfig<T> {
    fn default() -> Self {
        Self {
            swarm_size: 20,
            inertia: T::of(0.7298),
            cognitive: T::of(1.49618),
            social: T::of(1.49618),
        }
    }
}

/// Swarm state. Scores are maximized.
#[derive(Clone, Debug)]
pub struct ParticleSwarm<T> {
    config: PsoConfig<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    positions: Vec<Vec<T>>,
    velocities: Vec<Vec<T>>,
    personal_best: Vec<Vec<T>>,
    personal_score: Vec<T>,
    global_best: Option<(Vec<T>, T)>,
    generation: usize,
}

fn uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::of(rng.gen::<f64>())
}

impl<T: Scalar> ParticleSwarm<T> {
    /// Random initial positions; initial velocity is half the offset to a
    /// second random point.
    pub fn new<R: Rng + ?Sized>(
        lower: Vec<T>,
        upper: Vec<T>,
        config: PsoConfig<T>,
        rng: &mut R,
    ) -> Result<Self, SamplerError> {
        let n = config.swarm_size;
        let d = lower.len();
        if upper.len() != d {
            return Err(SamplerError::DimensionMismatch { expected: d, found: upper.len() });
        }
        let mut positions = Vec::with_capacity(n);
        let mut velocities = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = Vec::with_capacity(d);
            let mut v = Vec::with_capacity(d);
            for j in 0..d {
                let range = upper[j] - lower[j];
                let xj = lower[j] + uniform::<T, _>(rng) * range;
                let other = lower[j] + uniform::<T, _>(rng) * range;
                x.push(xj);
                v.push((other - xj) * T::of(0.5));
            }
            positions.push(x);
            velocities.push(v);
        }
        Self::from_state(lower, upper, positions, velocities, config)
    }

    /// Swarm with explicit positions and velocities, not yet scored.
    pub fn from_state(
        lower: Vec<T>,
        upper: Vec<T>,
        positions: Vec<Vec<T>>,
        velocities: Vec<Vec<T>>,
        mut config: PsoConfig<T>,
    ) -> Result<Self, SamplerError> {
        let d = lower.len();
        if positions.len() < 2 {
            return Err(SamplerError::SwarmTooSmall(positions.len()));
        }
        if velocities.len() != positions.len() {
            return Err(SamplerError::DimensionMismatch {
                expected: positions.len(),
                found: velocities.len(),
            });
        }
        if let Some(p) = positions.iter().chain(&velocities).find(|p| p.len() != d) {
            return Err(SamplerError::DimensionMismatch { expected: d, found: p.len() });
        }
        config.swarm_size = positions.len();
        let n = positions.len();
        Ok(Self {
            config,
            lower,
            upper,
            personal_best: positions.clone(),
            personal_score: vec![T::neg_infinity(); n],
            positions,
            velocities,
            global_best: None,
            generation: 0,
        })
    }

    pub fn positions(&self) -> &[Vec<T>] {
        &self.positions
    }

    pub fn velocities(&self) -> &[Vec<T>] {
        &self.velocities
    }

    pub fn global_best(&self) -> Option<(&[T], T)> {
        self.global_best.as_ref().map(|(x, s)| (x.as_slice(), *s))
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn swarm_size(&self) -> usize {
        self.positions.len()
    }

    /// Scores of the current positions, in particle order. A partial batch
    /// (fewer scores than particles) updates only the leading particles.
    pub fn tell(&mut self, scores: &[T]) -> Result<(), SamplerError> {
        if scores.len() > self.positions.len() {
            return Err(SamplerError::ScoreCount {
                expected: self.positions.len(),
                found: scores.len(),
            });
        }
        for (i, &score) in scores.iter().enumerate() {
            let score = if score.is_nan() { T::neg_infinity() } else { score };
            if score > self.personal_score[i] {
                self.personal_score[i] = score;
                self.personal_best[i] = self.positions[i].clone();
            }
            let improves = match &self.global_best {
                None => true,
                Some((_, best)) => score > *best,
            };
            if improves {
                self.global_best = Some((self.positions[i].clone(), score));
            }
        }
        Ok(())
    }

    /// Velocity and position update for every particle.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(), SamplerError> {
        let Some((global, _)) = self.global_best.clone() else {
            return Err(SamplerError::SwarmUninitialized);
        };
        let PsoConfig { inertia, cognitive, social, .. } = self.config.clone();
        for i in 0..self.positions.len() {
            for j in 0..self.lower.len() {
                let r1 = uniform::<T, _>(rng);
                let r2 = uniform::<T, _>(rng);
                let x = self.positions[i][j];
                let range = self.upper[j] - self.lower[j];
                let v = inertia * self.velocities[i][j]
                    + cognitive * r1 * (self.personal_best[i][j] - x)
                    + social * r2 * (global[j] - x);
                let v = v.max(-range).min(range);
                let mut next = x + v;
                let mut v = v;
                if next < self.lower[j] {
                    next = self.lower[j];
                    v = T::zero();
                } else if next > self.upper[j] {
                    next = self.upper[j];
                    v = T::zero();
                }
                self.positions[i][j] = next;
                self.velocities[i][j] = v;
            }
        }
        self.generation += 1;
        Ok(())
    }
}

/// Moves the swarm one generation and emits the new positions as candidates.
pub fn pso_step<R: Rng + ?Sized>(
    state: &mut ParticleSwarm<f64>,
    space: &SearchSpace,
    rng: &mut R,
) -> Result<Vec<Candidate>, SamplerError> {
    if state.lower.len() != space.dim() {
        return Err(SamplerError::DimensionMismatch {
            expected: space.dim(),
            found: state.lower.len(),
        });
    }
    state.advance(rng)?;
    Ok(state.positions.iter().map(|x| space.from_reals(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Dimension;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn particles_at_the_optimum_stay_put() {
        let x = vec![0.3, -0.2];
        let mut swarm = ParticleSwarm::from_state(
            vec![-1.0; 2],
            vec![1.0; 2],
            vec![x.clone(), x.clone()],
            vec![vec![0.0; 2]; 2],
            PsoConfig::default(),
        )
        .unwrap();
        swarm.tell(&[1.0, 1.0]).unwrap();
        swarm.advance(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(swarm.positions()[0], x);
        assert_eq!(swarm.positions()[1], x);
    }

    #[test]
    fn uninitialized_and_undersized_swarms_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut swarm =
            ParticleSwarm::<f64>::new(vec![0.0], vec![1.0], PsoConfig::default(), &mut rng).unwrap();
        assert_eq!(swarm.advance(&mut rng), Err(SamplerError::SwarmUninitialized));
        let cfg = PsoConfig { swarm_size: 1, ..PsoConfig::default() };
        assert_eq!(
            ParticleSwarm::<f64>::new(vec![0.0], vec![1.0], cfg, &mut rng).unwrap_err(),
            SamplerError::SwarmTooSmall(1)
        );
    }

    #[test]
    fn emitted_positions_stay_in_bounds() {
        let space = SearchSpace::new(vec![
            Dimension::integer("a", -3, 3),
            Dimension::real("b", 0.0, 1.0),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut swarm = ParticleSwarm::new(vec![-3.0, 0.0], vec![3.0, 1.0], PsoConfig::default(), &mut rng)
            .unwrap();
        for _ in 0..30 {
            let scores: Vec<f64> = swarm.positions().iter().map(|x| x[0] * 7.0 - x[1]).collect();
            swarm.tell(&scores).unwrap();
            for c in pso_step(&mut swarm, &space, &mut rng).unwrap() {
                space.validate_candidate(&c).unwrap();
            }
        }
    }

    fn sphere_run(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut swarm =
            ParticleSwarm::new(vec![-5.12; 5], vec![5.12; 5], PsoConfig::default(), &mut rng).unwrap();
        for generation in 0..100 {
            if generation > 0 {
                swarm.advance(&mut rng).unwrap();
            }
            let scores: Vec<f64> =
                swarm.positions().iter().map(|x| -x.iter().map(|v| v * v).sum::<f64>()).collect();
            swarm.tell(&scores).unwrap();
        }
        -swarm.global_best().unwrap().1
    }

    #[test]
    fn converges_on_sphere() {
        let mut best: Vec<f64> = (0..10).map(sphere_run).collect();
        best.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (best[4] + best[5]) / 2.0;
        assert!(median < 1e-2, "median {median}");
    }
}
