//! Least-squares polynomial fits via Householder QR.

use serde::Serialize;

use super::ReportError;
use crate::scalar::Scalar;

/// Polynomial in the normalized variable `t = (2x - (x_min + x_max)) / (x_max - x_min)`,
/// which maps `[x_min, x_max]` onto `[-1, 1]`. `coefficients[j]` multiplies `t^j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyFit<T> {
    pub degree: usize,
    pub x_min: T,
    pub x_max: T,
    pub coefficients: Vec<T>,
}

impl<T: Scalar> PolyFit<T> {
    pub fn normalize(&self, x: T) -> T {
        normalize(x, self.x_min, self.x_max)
    }

    pub fn eval(&self, x: T) -> T {
        let t = self.normalize(x);
        self.coefficients.iter().rev().fold(T::zero(), |acc, c| acc * t + *c)
    }

    /// Sum of squared residuals over the given points.
    pub fn residual(&self, xs: &[T], ys: &[T]) -> T {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = self.eval(*x) - *y;
                r * r
            })
            .sum()
    }
}

fn normalize<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if hi > lo {
        (T::of(2.0) * x - (lo + hi)) / (hi - lo)
    } else {
        T::zero()
    }
}

/// Fits a degree-`degree` polynomial to `(xs, ys)` in the least-squares sense.
pub fn polyfit<T: Scalar>(xs: &[T], ys: &[T], degree: usize) -> Result<PolyFit<T>, ReportError> {
    if xs.len() != ys.len() {
        return Err(ReportError::LengthMismatch { xs: xs.len(), ys: ys.len() });
    }
    let m = xs.len();
    let n = degree + 1;
    if m < n {
        return Err(ReportError::SeriesTooShort { len: m, degree });
    }
    let x_min = xs.iter().copied().fold(T::infinity(), T::min);
    let x_max = xs.iter().copied().fold(T::neg_infinity(), T::max);

    // column-major Vandermonde
    let mut a: Vec<Vec<T>> = vec![Vec::with_capacity(m); n];
    for x in xs {
        let t = normalize(*x, x_min, x_max);
        let mut p = T::one();
        for col in a.iter_mut() {
            col.push(p);
            p *= t;
        }
    }
    let mut b = ys.to_vec();

    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| *v * *v).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(ReportError::RankDeficient { degree });
        }
        let alpha = if a[k][k] > T::zero() { -norm } else { norm };
        let mut v = a[k][k..].to_vec();
        v[0] -= alpha;
        let vv: T = v.iter().map(|x| *x * *x).sum();
        if vv == T::zero() {
            continue;
        }
        let reflect = |col: &mut [T]| {
            let dot: T = v.iter().zip(col.iter()).map(|(p, q)| *p * *q).sum();
            let f = T::of(2.0) * dot / vv;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= f * *vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(&mut col[k..]);
        }
        reflect(&mut b[k..]);
    }

    let scale = (0..n).map(|k| a[k][k].abs()).fold(T::zero(), T::max);
    let mut coefficients = vec![T::zero(); n];
    for k in (0..n).rev() {
        let rkk = a[k][k];
        if rkk.abs() <= scale * T::epsilon() * T::of_usize(m) {
            return Err(ReportError::RankDeficient { degree });
        }
        let s: T = ((k + 1)..n).map(|j| a[j][k] * coefficients[j]).sum();
        coefficients[k] = (b[k] - s) / rkk;
    }
    Ok(PolyFit {
        degree,
        x_min,
        x_max,
        coefficients,
    })
}

/// Fits against the 1-based positions of `series`.
pub fn polyfit_series<T: Scalar>(series: &[T], degree: usize) -> Result<PolyFit<T>, ReportError> {
    let xs: Vec<T> = (1..=series.len()).map(T::of_usize).collect();
    polyfit(&xs, series, degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quadratic_is_recovered_at_degree_five() {
        // y = 1 - 2t + 3t^2 in the normalized variable
        let xs: Vec<f64> = (1..=50).map(f64::from).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                let t = (2.0 * x - 51.0) / 49.0;
                1.0 - 2.0 * t + 3.0 * t * t
            })
            .collect();
        let fit = polyfit(&xs, &ys, 5).unwrap();
        assert!(fit.residual(&xs, &ys).sqrt() < 1e-8);
        for (c, want) in fit.coefficients.iter().zip([1.0, -2.0, 3.0, 0.0, 0.0, 0.0]) {
            assert!((c - want).abs() < 1e-6, "{c} vs {want}");
        }
    }

    #[test]
    fn constant_series() {
        let fit = polyfit_series(&[0.85f64; 300], 5).unwrap();
        assert!((fit.coefficients[0] - 0.85).abs() < 1e-12);
        assert!(fit.coefficients[1..].iter().all(|c| c.abs() < 1e-12));
        assert_relative_eq!(fit.eval(17.0), 0.85, epsilon = 1e-12);
    }

    #[test]
    fn too_short_and_mismatched() {
        assert_eq!(
            polyfit_series(&[1.0f64; 5], 5),
            Err(ReportError::SeriesTooShort { len: 5, degree: 5 })
        );
        assert!(polyfit(&[1.0f64, 1.0, 1.0], &[0.0, 1.0, 2.0], 1).is_err());
        assert!(polyfit(&[1.0f64], &[0.0, 1.0], 0).is_err());
    }

    #[test]
    fn single_precision_line() {
        let ys: Vec<f32> = (1..=20).map(|i| 0.5 * i as f32).collect();
        let fit = polyfit_series(&ys, 1).unwrap();
        assert_relative_eq!(fit.eval(7.0f32), 3.5, epsilon = 1e-4);
    }
}
