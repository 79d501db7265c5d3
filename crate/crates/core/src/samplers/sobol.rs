//! Sobol low-discrepancy sequence (Gray-code order, origin first).

use super::SamplerError;
use crate::scalar::Scalar;
use crate::space::{Candidate, SearchSpace};

const BITS: usize = 32;

/// Primitive-polynomial degree, interior coefficient bits and initial
/// direction integers for dimensions 2 and up (Joe & Kuo, new-joe-kuo-6.21201).
/// Dimension 1 is the van der Corput sequence.
const DIRECTIONS: &[(u32, u32, &[u32])] = &[
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
    (7, 7, &[1, 1, 3, 13, 7, 35, 63]),
    (7, 8, &[1, 3, 5, 9, 1, 25, 53]),
    (7, 14, &[1, 3, 1, 13, 9, 35, 107]),
    (7, 19, &[1, 3, 1, 5, 27, 61, 31]),
    (7, 21, &[1, 1, 5, 11, 19, 41, 61]),
    (7, 28, &[1, 3, 5, 3, 3, 13, 69]),
    (7, 31, &[1, 1, 7, 13, 1, 19, 1]),
    (7, 32, &[1, 3, 7, 5, 13, 19, 59]),
    (7, 37, &[1, 1, 3, 9, 25, 29, 41]),
    (7, 41, &[1, 3, 5, 13, 23, 1, 55]),
    (7, 42, &[1, 3, 7, 3, 13, 59, 17]),
    (7, 50, &[1, 3, 1, 3, 5, 53, 69]),
    (7, 55, &[1, 1, 5, 5, 23, 33, 13]),
    (7, 56, &[1, 1, 7, 7, 1, 61, 123]),
    (7, 59, &[1, 1, 7, 9, 13, 61, 49]),
    (7, 62, &[1, 3, 3, 5, 3, 55, 33]),
    (8, 14, &[1, 3, 1, 15, 31, 13, 49, 245]),
    (8, 21, &[1, 3, 5, 15, 31, 59, 63, 97]),
    (8, 22, &[1, 3, 1, 11, 11, 11, 77, 249]),
    (8, 38, &[1, 3, 1, 11, 27, 43, 71, 9]),
    (8, 47, &[1, 1, 7, 15, 21, 11, 81, 45]),
    (8, 49, &[1, 3, 7, 3, 25, 31, 65, 79]),
    (8, 50, &[1, 3, 1, 1, 19, 11, 3, 205]),
    (8, 52, &[1, 1, 5, 9, 19, 21, 29, 157]),
    (8, 56, &[1, 3, 7, 11, 1, 33, 89, 185]),
    (8, 67, &[1, 3, 3, 3, 15, 9, 79, 71]),
    (8, 70, &[1, 3, 7, 11, 15, 39, 119, 27]),
    (8, 84, &[1, 1, 3, 1, 11, 31, 97, 225]),
    (8, 97, &[1, 1, 1, 3, 23, 43, 57, 177]),
    (8, 103, &[1, 3, 7, 7, 17, 17, 37, 71]),
    (8, 115, &[1, 3, 1, 5, 27, 63, 123, 213]),
    (8, 122, &[1, 1, 3, 5, 11, 43, 53, 133]),
    (9, 8, &[1, 3, 5, 5, 29, 17, 47, 173, 479]),
    (9, 13, &[1, 3, 3, 11, 3, 1, 109, 9, 69]),
    (9, 16, &[1, 1, 1, 5, 17, 39, 23, 5, 343]),
    (9, 22, &[1, 3, 1, 5, 25, 15, 31, 103, 499]),
    (9, 25, &[1, 1, 1, 11, 11, 17, 63, 105, 183]),
    (9, 44, &[1, 1, 5, 11, 9, 29, 97, 231, 363]),
    (9, 47, &[1, 1, 5, 15, 19, 45, 41, 7, 383]),
    (9, 52, &[1, 3, 7, 7, 31, 19, 83, 137, 221]),
    (9, 55, &[1, 1, 1, 3, 23, 15, 111, 223, 83]),
    (9, 59, &[1, 1, 5, 13, 31, 15, 55, 25, 161]),
    (9, 62, &[1, 1, 3, 13, 25, 47, 39, 87, 257]),
];

/// Largest supported dimensionality.
pub const MAX_DIMENSIONS: usize = DIRECTIONS.len() + 1;

fn direction_vectors(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let (s, a, m) = DIRECTIONS[dim - 1];
    let s = s as usize;
    for i in 0..s.min(BITS) {
        v[i] = m[i] << (BITS - 1 - i);
    }
    for i in s..BITS {
        let mut value = v[i - s] ^ (v[i - s] >> s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                value ^= v[i - k];
            }
        }
        v[i] = value;
    }
    v
}

/// Sobol point generator. Point 0 is the origin; point `n` is obtained from
/// point `n - 1` by xoring the direction vector of the lowest zero bit of
/// `n - 1`.
#[derive(Clone, Debug)]
pub struct SobolSequence {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    pub fn new(dimensions: usize) -> Result<Self, SamplerError> {
        if dimensions == 0 || dimensions > MAX_DIMENSIONS {
            return Err(SamplerError::SobolDimensions {
                requested: dimensions,
                max: MAX_DIMENSIONS,
            });
        }
        Ok(Self {
            directions: (0..dimensions).map(direction_vectors).collect(),
            state: vec![0; dimensions],
            index: 0,
        })
    }

    pub fn dimensions(&self) -> usize {
        self.state.len()
    }

    /// Index of the next point to be emitted.
    pub fn index(&self) -> u64 {
        self.index
    }

    /// Next point as 32-bit integer numerators over `2^32`.
    pub fn next_raw(&mut self) -> Vec<u32> {
        if self.index > 0 {
            let bit = (self.index - 1).trailing_ones() as usize;
            // the sequence has period 2^32; wrap to the origin after that
            let bit = bit.min(BITS - 1);
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[bit];
            }
        }
        self.index += 1;
        self.state.clone()
    }

    /// Next point of the unit cube.
    pub fn next_point<T: Scalar>(&mut self) -> Vec<T> {
        let scale = T::of(1.0 / 4_294_967_296.0);
        self.next_raw()
            .into_iter()
            .map(|x| T::of(x as f64) * scale)
            .collect()
    }
}

/// Emits the next Sobol point mapped affinely into `space`.
pub fn sobol_step(state: &mut SobolSequence, space: &SearchSpace) -> Result<Candidate, SamplerError> {
    if state.dimensions() != space.dim() {
        return Err(SamplerError::DimensionMismatch {
            expected: space.dim(),
            found: state.dimensions(),
        });
    }
    let point = state.next_point::<f64>();
    Ok(Candidate::new(
        space
            .dimensions()
            .iter()
            .zip(point)
            .map(|(d, u)| d.from_unit(u))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Value};

    #[test]
    fn first_point_is_origin() {
        let mut s = SobolSequence::new(12).unwrap();
        assert!(s.next_point::<f64>().iter().all(|x| *x == 0.0));
        assert!(s.next_point::<f32>().iter().all(|x| *x == 0.5));
    }

    #[test]
    fn supports_the_required_dimensionality() {
        assert!(MAX_DIMENSIONS >= 21);
        assert!(SobolSequence::new(MAX_DIMENSIONS).is_ok());
        assert!(matches!(
            SobolSequence::new(MAX_DIMENSIONS + 1),
            Err(SamplerError::SobolDimensions { .. })
        ));
    }

    #[test]
    fn integer_outputs_stay_in_range() {
        let space = SearchSpace::new(vec![Dimension::integer("C", 3, 6)]).unwrap();
        let mut s = SobolSequence::new(1).unwrap();
        for _ in 0..200 {
            let c = sobol_step(&mut s, &space).unwrap();
            let Value::Int(v) = c[0] else { panic!() };
            assert!((3..=6).contains(&v));
        }
    }
}
