//! Nelder–Mead simplex search as an ask/tell state machine.
//!
//! Scores follow the maximization convention; internally the simplex
//! minimizes the negated score. Points live in the real relaxation of the
//! space and are clamped to its bounds.

use serde::{Deserialize, Serialize};

use super::SamplerError;
use crate::scalar::Scalar;
use crate::space::{Candidate, SearchSpace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadConfig<T> {
    /// Reflection coefficient.
    pub alpha: T,
    /// Expansion coefficient.
    pub gamma: T,
    /// Contraction coefficient.
    pub rho: T,
    /// Shrink coefficient.
    pub sigma: T,
    /// Initial edge length as a fraction of each dimension's range.
    pub initial_step: T,
}

impl<T: Scalar> Default for NelderMeadConfig<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            gamma: T::of(2.0),
            rho: T::of(0.5),
            sigma: T::of(0.5),
            initial_step: T::of(0.1),
        }
    }
}

#[derive(Clone, Debug)]
enum Phase<T> {
    Init { next: usize },
    Reflect { centroid: Vec<T>, point: Vec<T> },
    Expand { reflected: Vec<T>, reflected_cost: T, point: Vec<T> },
    Contract { reflected_cost: T, outside: bool, point: Vec<T> },
    Shrink { next: usize },
}

#[derive(Clone, Debug)]
pub struct NelderMead<T> {
    config: NelderMeadConfig<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    resolution: Vec<T>,
    vertices: Vec<Vec<T>>,
    costs: Vec<T>,
    phase: Phase<T>,
    awaiting: bool,
}

fn cost_of<T: Scalar>(score: T) -> T {
    if score.is_nan() {
        T::infinity()
    } else {
        -score
    }
}

impl<T: Scalar> NelderMead<T> {
    /// Starts a fresh simplex at `start` with one axis-aligned edge per
    /// dimension. The `d + 1` vertices are emitted for evaluation first.
    ///
    /// `resolution` is the per-dimension spread below which the simplex is
    /// considered collapsed.
    pub fn new(
        lower: Vec<T>,
        upper: Vec<T>,
        resolution: Vec<T>,
        start: Vec<T>,
        config: NelderMeadConfig<T>,
    ) -> Result<Self, SamplerError> {
        let d = lower.len();
        for len in [upper.len(), resolution.len(), start.len()] {
            if len != d {
                return Err(SamplerError::DimensionMismatch { expected: d, found: len });
            }
        }
        let start = clamp(&start, &lower, &upper);
        let mut vertices = vec![start.clone()];
        for j in 0..d {
            let mut v = start.clone();
            let step = config.initial_step * (upper[j] - lower[j]);
            v[j] = if start[j] + step <= upper[j] { start[j] + step } else { start[j] - step };
            vertices.push(clamp(&v, &lower, &upper));
        }
        Ok(Self {
            config,
            lower,
            upper,
            resolution,
            costs: vec![T::infinity(); d + 1],
            vertices,
            phase: Phase::Init { next: 0 },
            awaiting: false,
        })
    }

    /// Resumes from an already evaluated simplex (`d + 1` vertices with
    /// maximization scores).
    pub fn from_simplex(
        lower: Vec<T>,
        upper: Vec<T>,
        resolution: Vec<T>,
        vertices: Vec<Vec<T>>,
        scores: Vec<T>,
        config: NelderMeadConfig<T>,
    ) -> Result<Self, SamplerError> {
        let d = lower.len();
        if vertices.len() != d + 1 || scores.len() != d + 1 {
            return Err(SamplerError::InvalidSimplex {
                expected: d + 1,
                found: vertices.len().min(scores.len()),
            });
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != d) {
            return Err(SamplerError::DimensionMismatch { expected: d, found: v.len() });
        }
        let mut nm = Self {
            config,
            vertices: vertices.iter().map(|v| clamp(v, &lower, &upper)).collect(),
            lower,
            upper,
            resolution,
            costs: scores.into_iter().map(cost_of).collect(),
            phase: Phase::Init { next: 0 },
            awaiting: false,
        };
        nm.begin_iteration();
        Ok(nm)
    }

    pub fn dimensions(&self) -> usize {
        self.lower.len()
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    /// Best vertex and its maximization score.
    pub fn best(&self) -> (&[T], T) {
        let i = (0..self.costs.len())
            .min_by(|&a, &b| self.costs[a].partial_cmp(&self.costs[b]).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(0);
        (&self.vertices[i], -self.costs[i])
    }

    /// Point currently awaiting evaluation.
    pub fn ask(&mut self) -> Vec<T> {
        self.awaiting = true;
        match &self.phase {
            Phase::Init { next } | Phase::Shrink { next } => self.vertices[*next].clone(),
            Phase::Reflect { point, .. }
            | Phase::Expand { point, .. }
            | Phase::Contract { point, .. } => point.clone(),
        }
    }

    /// Feeds back the score of the point returned by the last [`ask`](Self::ask).
    pub fn tell(&mut self, score: T) -> Result<(), SamplerError> {
        if !self.awaiting {
            return Err(SamplerError::UnexpectedScore);
        }
        self.awaiting = false;
        let cost = cost_of(score);
        let d = self.dimensions();
        let worst = d;
        match std::mem::replace(&mut self.phase, Phase::Init { next: 0 }) {
            Phase::Init { next } => {
                self.costs[next] = cost;
                if next < d {
                    self.phase = Phase::Init { next: next + 1 };
                } else {
                    self.begin_iteration();
                }
            }
            Phase::Shrink { next } => {
                self.costs[next] = cost;
                if next < d {
                    self.phase = Phase::Shrink { next: next + 1 };
                } else {
                    self.begin_iteration();
                }
            }
            Phase::Reflect { centroid, point } => {
                if cost < self.costs[0] {
                    let expanded = self.affine(&centroid, &point, self.config.gamma);
                    self.phase = Phase::Expand {
                        reflected: point,
                        reflected_cost: cost,
                        point: expanded,
                    };
                } else if cost < self.costs[worst - 1] {
                    self.replace_worst(point, cost);
                } else {
                    let outside = cost < self.costs[worst];
                    let target = if outside { point } else { self.vertices[worst].clone() };
                    let contracted = self.affine(&centroid, &target, self.config.rho);
                    self.phase = Phase::Contract {
                        reflected_cost: cost,
                        outside,
                        point: contracted,
                    };
                }
            }
            Phase::Expand { reflected, reflected_cost, point } => {
                if cost < reflected_cost {
                    self.replace_worst(point, cost);
                } else {
                    self.replace_worst(reflected, reflected_cost);
                }
            }
            Phase::Contract { reflected_cost, outside, point } => {
                let accept = if outside { cost <= reflected_cost } else { cost < self.costs[worst] };
                if accept {
                    self.replace_worst(point, cost);
                } else {
                    self.shrink();
                }
            }
        }
        Ok(())
    }

    /// True once every vertex coincides with the best one to within the
    /// per-dimension resolution; further steps cannot move the simplex.
    pub fn is_converged(&self) -> bool {
        if matches!(self.phase, Phase::Init { .. }) {
            return false;
        }
        let best = &self.vertices[0];
        self.vertices.iter().skip(1).all(|v| {
            v.iter()
                .zip(best)
                .zip(&self.resolution)
                .all(|((a, b), r)| (*a - *b).abs() <= *r)
        })
    }

    /// `centroid + coef * (target - centroid)`, clamped.
    fn affine(&self, centroid: &[T], target: &[T], coef: T) -> Vec<T> {
        let p: Vec<T> = centroid
            .iter()
            .zip(target)
            .map(|(c, t)| *c + coef * (*t - *c))
            .collect();
        clamp(&p, &self.lower, &self.upper)
    }

    fn replace_worst(&mut self, point: Vec<T>, cost: T) {
        let d = self.dimensions();
        self.vertices[d] = point;
        self.costs[d] = cost;
        self.begin_iteration();
    }

    fn shrink(&mut self) {
        let best = self.vertices[0].clone();
        let sigma = self.config.sigma;
        for v in self.vertices.iter_mut().skip(1) {
            for (x, b) in v.iter_mut().zip(&best) {
                *x = *b + sigma * (*x - *b);
            }
        }
        if self.dimensions() == 0 {
            self.begin_iteration();
        } else {
            self.phase = Phase::Shrink { next: 1 };
        }
    }

    fn begin_iteration(&mut self) {
        let d = self.dimensions();
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| {
            self.costs[a]
                .partial_cmp(&self.costs[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        self.vertices = order.iter().map(|&i| self.vertices[i].clone()).collect();
        self.costs = order.iter().map(|&i| self.costs[i]).collect();

        let mut centroid = vec![T::zero(); d];
        for v in &self.vertices[..d] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += *x;
            }
        }
        let n = T::of_usize(d.max(1));
        centroid.iter_mut().for_each(|c| *c /= n);
        let reflected = self.affine(&centroid, &self.vertices[d], -self.config.alpha);
        self.phase = Phase::Reflect { centroid, point: reflected };
    }
}

fn clamp<T: Scalar>(p: &[T], lower: &[T], upper: &[T]) -> Vec<T> {
    p.iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (lo, hi))| x.max(*lo).min(*hi))
        .collect()
}

/// Feeds `last_score` (the score of the previously emitted candidate, or
/// `None` on the first call) and emits the next candidate, rounding integer
/// and categorical coordinates.
pub fn nelder_mead_step(
    state: &mut NelderMead<f64>,
    space: &SearchSpace,
    last_score: Option<f64>,
) -> Result<Candidate, SamplerError> {
    if state.dimensions() != space.dim() {
        return Err(SamplerError::DimensionMismatch {
            expected: space.dim(),
            found: state.dimensions(),
        });
    }
    match last_score {
        Some(score) => state.tell(score)?,
        None if state.awaiting => return Err(SamplerError::MissingScore),
        None => {}
    }
    Ok(space.from_reals(&state.ask()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Value};

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn textbook_min(f: impl Fn(&[f64]) -> f64, start: &[f64], steps: usize) -> (Vec<f64>, f64) {
        // Direct, non-incremental Nelder–Mead on the same coefficients.
        let d = start.len();
        let mut simplex = vec![start.to_vec()];
        for j in 0..d {
            let mut v = start.to_vec();
            v[j] += 0.1 * 10.0;
            simplex.push(v);
        }
        let mut fx: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
        let mut evals = d + 1;
        while evals < steps {
            let mut idx: Vec<usize> = (0..=d).collect();
            idx.sort_by(|a, b| fx[*a].partial_cmp(&fx[*b]).unwrap());
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            fx = idx.iter().map(|&i| fx[i]).collect();
            let c: Vec<f64> = (0..d)
                .map(|j| simplex[..d].iter().map(|v| v[j]).sum::<f64>() / d as f64)
                .collect();
            let at = |t: &[f64], k: f64| -> Vec<f64> { (0..d).map(|j| c[j] + k * (t[j] - c[j])).collect() };
            let xr = at(&simplex[d], -1.0);
            let fr = f(&xr);
            evals += 1;
            if fr < fx[0] {
                let xe = at(&xr, 2.0);
                let fe = f(&xe);
                evals += 1;
                if fe < fr {
                    simplex[d] = xe;
                    fx[d] = fe;
                } else {
                    simplex[d] = xr;
                    fx[d] = fr;
                }
            } else if fr < fx[d - 1] {
                simplex[d] = xr;
                fx[d] = fr;
            } else {
                let outside = fr < fx[d];
                let xc = if outside { at(&xr, 0.5) } else { at(&simplex[d].clone(), 0.5) };
                let fc = f(&xc);
                evals += 1;
                if (outside && fc <= fr) || (!outside && fc < fx[d]) {
                    simplex[d] = xc;
                    fx[d] = fc;
                } else {
                    for i in 1..=d {
                        for j in 0..d {
                            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                        }
                        fx[i] = f(&simplex[i]);
                        evals += 1;
                    }
                }
            }
        }
        let i = (0..=d).min_by(|a, b| fx[*a].partial_cmp(&fx[*b]).unwrap()).unwrap();
        (simplex[i].clone(), fx[i])
    }

    fn run(nm: &mut NelderMead<f64>, f: impl Fn(&[f64]) -> f64, evals: usize) {
        for _ in 0..evals {
            let x = nm.ask();
            nm.tell(-f(&x)).unwrap();
        }
    }

    #[test]
    fn reflection_is_emitted_first() {
        // Worst vertex (2,2); centroid of the others (0.5, 0.5); reflection (-1,-1).
        let mut nm = NelderMead::from_simplex(
            vec![-5.0; 2],
            vec![5.0; 2],
            vec![1e-12; 2],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]],
            vec![-1.0, -1.0, -8.0],
            NelderMeadConfig::default(),
        )
        .unwrap();
        assert_eq!(nm.ask(), vec![-1.0, -1.0]);
    }

    #[test]
    fn identical_vertices_report_convergence() {
        let nm = NelderMead::from_simplex(
            vec![-5.0; 2],
            vec![5.0; 2],
            vec![1e-12; 2],
            vec![vec![1.0, 1.0]; 3],
            vec![-2.0; 3],
            NelderMeadConfig::default(),
        )
        .unwrap();
        assert!(nm.is_converged());
    }

    #[test]
    fn wrong_vertex_count_is_rejected() {
        let err = NelderMead::<f64>::from_simplex(
            vec![0.0; 2],
            vec![1.0; 2],
            vec![0.0; 2],
            vec![vec![0.0, 0.0]],
            vec![0.0],
            NelderMeadConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, SamplerError::InvalidSimplex { expected: 3, found: 1 });
    }

    #[test]
    fn minimizes_sphere_and_agrees_with_direct_version() {
        let mut nm = NelderMead::new(
            vec![-5.0; 2],
            vec![5.0; 2],
            vec![1e-12; 2],
            vec![1.0, 1.0],
            NelderMeadConfig::default(),
        )
        .unwrap();
        run(&mut nm, sphere, 200);
        let (x, score) = nm.best();
        assert!(sphere(x).sqrt() < 1e-3, "best {x:?}");
        let (_, reference) = textbook_min(sphere, &[1.0, 1.0], 200);
        assert!(reference.sqrt() < 1e-3);
        assert!((-score).sqrt() < 1e-3);
    }

    #[test]
    fn works_in_single_precision() {
        let mut nm = NelderMead::<f32>::new(
            vec![-5.0; 3],
            vec![5.0; 3],
            vec![1e-6; 3],
            vec![2.0, -1.0, 1.5],
            NelderMeadConfig::default(),
        )
        .unwrap();
        for _ in 0..300 {
            let x = nm.ask();
            nm.tell(-x.iter().map(|v| v * v).sum::<f32>()).unwrap();
        }
        assert!(-nm.best().1 < 1e-3);
    }

    #[test]
    fn step_protocol_and_rounding() {
        let space = SearchSpace::new(vec![
            Dimension::integer("a", 0, 10),
            Dimension::real("b", -1.0, 1.0),
        ])
        .unwrap();
        let mut nm = NelderMead::new(
            vec![0.0, -1.0],
            vec![10.0, 1.0],
            vec![0.5, 1e-9],
            vec![3.3, 0.2],
            NelderMeadConfig::default(),
        )
        .unwrap();
        let first = nelder_mead_step(&mut nm, &space, None).unwrap();
        assert_eq!(first[0], Value::Int(3));
        assert_eq!(nelder_mead_step(&mut nm, &space, None), Err(SamplerError::MissingScore));
        for _ in 0..50 {
            let c = nelder_mead_step(&mut nm, &space, Some(0.0)).unwrap();
            space.validate_candidate(&c).unwrap();
        }
        assert_eq!(nm.tell(1.0), Ok(()));
        assert_eq!(nm.tell(1.0), Err(SamplerError::UnexpectedScore));
    }
}
