//! Closed-form benchmark functions.

use std::f64::consts::PI;

use crate::scalar::Scalar;

pub fn sphere<T: Scalar>(x: &[T]) -> T {
    x.iter().map(|v| *v * *v).sum()
}

pub fn rastrigin<T: Scalar>(x: &[T]) -> T {
    let ten = T::of(10.0);
    let two_pi = T::of(2.0 * PI);
    ten * T::of_usize(x.len())
        + x.iter()
            .map(|v| *v * *v - ten * (two_pi * *v).cos())
            .sum::<T>()
}

pub fn rosenbrock<T: Scalar>(x: &[T]) -> T {
    x.windows(2)
        .map(|w| {
            let a = w[1] - w[0] * w[0];
            let b = T::one() - w[0];
            T::of(100.0) * a * a + b * b
        })
        .sum()
}

/// Branin–Hoo on two variables; global minimum 0.397887 at
/// (−π, 12.275), (π, 2.275) and (9.42478, 2.475).
pub fn branin<T: Scalar>(x1: T, x2: T) -> T {
    let a = T::one();
    let b = T::of(5.1 / (4.0 * PI * PI));
    let c = T::of(5.0 / PI);
    let r = T::of(6.0);
    let s = T::of(10.0);
    let t = T::of(1.0 / (8.0 * PI));
    let q = x2 - b * x1 * x1 + c * x1 - r;
    a * q * q + s * (T::one() - t) * x1.cos() + s
}

pub fn styblinski_tang<T: Scalar>(x: &[T]) -> T {
    x.iter()
        .map(|v| {
            let v2 = *v * *v;
            v2 * v2 - T::of(16.0) * v2 + T::of(5.0) * *v
        })
        .sum::<T>()
        / T::of(2.0)
}

/// Zero-mean, unit-variance component under `U(0, 1)`: `√2 · sin(2πu)`.
pub fn anova_component<T: Scalar>(u: T) -> T {
    T::of(2.0).sqrt() * (T::of(2.0 * PI) * u).sin()
}

/// `Σ c_i g(x_i)` on the unit cube. Under uniform sampling the variance
/// share of dimension `i` is `c_i² / Σ c_j²`.
pub fn additive_anova<T: Scalar>(coefficients: &[T], x: &[T]) -> T {
    coefficients
        .iter()
        .zip(x)
        .map(|(c, v)| *c * anova_component(*v))
        .sum()
}

/// Bounds of the twelve CNN hyperparameters, in `C, F, C1..C6, F1..F4` order.
pub const CNN_BOUNDS: [(f64, f64); 12] = [
    (3.0, 6.0),
    (1.0, 4.0),
    (100.0, 1024.0),
    (100.0, 1024.0),
    (100.0, 1024.0),
    (100.0, 1024.0),
    (100.0, 1024.0),
    (100.0, 1024.0),
    (1024.0, 2048.0),
    (1024.0, 2048.0),
    (1024.0, 2048.0),
    (1024.0, 2048.0),
];

// Penalty slope per hyperparameter, calibrated so that under uniform
// sampling the main-effect variance shares are proportional to
// (7.4, 11.85, 0.51, 0.79, 1.62, 0.73, 2.26, 1.26, 26.28, 0.87, 3.22, 1.75).
const CNN_WEIGHTS: [f64; 12] = [
    0.03393, 0.04294, 0.01720, 0.02754, 0.03618, 0.01473, 0.02531, 0.02489, 0.09917, 0.03004,
    0.05779, 0.04260,
];

// Normalized optimum: six convolution layers, one dense layer.
const CNN_TARGETS: [f64; 12] = [
    1.0, 0.0, 0.688, 0.442, 0.610, 0.883, 0.093, 0.273, 0.200, 0.500, 0.500, 0.500,
];

/// Deterministic accuracy-like surrogate for the twelve-dimensional CNN
/// space: `0.86 - Σ w_j |u_j - t_j|` over the coordinates `u_j` normalized
/// to `[0, 1]`. Additive, so every dimension's share of variance is a pure
/// main effect. The maximum is 0.86, the mean under uniform sampling about
/// 0.71.
pub fn cnn_surrogate<T: Scalar>(x: &[T]) -> T {
    let penalty: T = x
        .iter()
        .zip(CNN_BOUNDS)
        .zip(CNN_WEIGHTS.iter().zip(CNN_TARGETS))
        .map(|((v, (lo, hi)), (w, t))| {
            let u = ((*v - T::of(lo)) / T::of(hi - lo)).max(T::zero()).min(T::one());
            T::of(*w) * (u - T::of(t)).abs()
        })
        .sum();
    T::of(0.86) - penalty
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_minima() {
        assert_eq!(sphere(&[0.0f64; 4]), 0.0);
        assert_eq!(rastrigin(&[0.0f64; 10]), 0.0);
        assert_eq!(rosenbrock(&[1.0f64; 5]), 0.0);
        let st = styblinski_tang(&[-2.903534f64; 3]);
        assert_relative_eq!(st, -39.16617 * 3.0, epsilon = 1e-4);
    }

    #[test]
    fn branin_minima_agree() {
        let direct = |x1: f64, x2: f64| {
            let b = 5.1 / (4.0 * PI * PI);
            let c = 5.0 / PI;
            (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0
        };
        let a = branin(PI, 2.275);
        let b = branin(-PI, 12.275);
        assert!((a - direct(PI, 2.275)).abs() < 1e-12);
        assert!((a - b).abs() < 1e-9);
        assert_relative_eq!(a, 0.397887, epsilon = 1e-6);
    }

    #[test]
    fn single_precision() {
        assert_eq!(sphere(&[3.0f32, 4.0]), 25.0);
        assert!(rastrigin(&[0.0f32; 3]).abs() < 1e-5);
    }

    #[test]
    fn surrogate_optimum_and_range() {
        let mut best = vec![6.0, 1.0];
        for j in 2..12 {
            let (lo, hi) = CNN_BOUNDS[j];
            best.push(lo + CNN_TARGETS[j] * (hi - lo));
        }
        assert_relative_eq!(cnn_surrogate(&best), 0.86, epsilon = 1e-12);
        let worst: Vec<f64> = CNN_BOUNDS.iter().map(|(lo, _)| *lo).collect();
        let s = cnn_surrogate(&worst);
        assert!(s < 0.86 && s > 0.5);
    }
}
