//! Search-space definition: dimensions, per-dimension sampling, candidates
//! and their canonical identity.
//!
//! A space is declared in TOML as an array of `[[dimension]]` tables:
//!
//! ```toml
//! [[dimension]]
//! name = "C"
//! kind = "integer"
//! low = 3
//! high = 6
//!
//! [[dimension]]
//! name = "lr"
//! kind = "real"
//! low = 0.0001
//! high = 0.1
//! distribution = { kind = "triangular", mode = 0.01 }
//!
//! [[dimension]]
//! name = "act"
//! kind = "categorical"
//! values = ["relu", "tanh"]
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("search space has no dimensions")]
    Empty,
    #[error("dimension `{name}`: low bound exceeds high bound")]
    InvertedBounds { name: String },
    #[error("dimension `{name}`: bounds must be finite")]
    NonFiniteBounds { name: String },
    #[error("dimension `{name}`: categorical value list is empty")]
    EmptyCategorical { name: String },
    #[error("dimension `{name}`: duplicate categorical value `{value}`")]
    DuplicateValue { name: String, value: String },
    #[error("duplicate dimension name `{name}`")]
    DuplicateName { name: String },
    #[error("dimension `{name}`: invalid distribution: {reason}")]
    InvalidDistribution { name: String, reason: String },
    #[error("candidate has {found} values, space has {expected} dimensions")]
    LengthMismatch { expected: usize, found: usize },
    #[error("dimension `{name}`: value kind does not match the dimension kind")]
    TypeMismatch { name: String },
    #[error("dimension `{name}`: value {value} lies outside the domain")]
    OutOfBounds { name: String, value: String },
    #[error("cannot read space file {path}: {cause}")]
    Io {
        path: String,
        cause: std::io::Error,
    },
    #[error("malformed space definition: {0}")]
    Parse(String),
}

/// Value domain of one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    #[serde(alias = "integer-range", alias = "int")]
    Integer { low: i64, high: i64 },
    #[serde(alias = "real-range", alias = "float")]
    Real { low: f64, high: f64 },
    Categorical { values: Vec<String> },
}

/// Sampling law for fresh draws. Every law consumes exactly one uniform
/// `f64` from the stream per draw.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    #[default]
    Uniform,
    /// Triangular law on the (relaxed) numeric range with the given mode.
    Triangular { mode: f64 },
    /// Explicit probability masses, one per admissible value in order.
    Weighted { weights: Vec<f64> },
}

impl Distribution {
    fn is_uniform(&self) -> bool {
        matches!(self, Distribution::Uniform)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    #[serde(flatten)]
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Distribution::is_uniform")]
    pub distribution: Distribution,
}

/// One coordinate of a candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Real(f64),
    /// Index into the dimension's categorical value list.
    Cat(usize),
}

impl Dimension {
    pub fn integer(name: impl Into<String>, low: i64, high: i64) -> Self {
        Self {
            name: name.into(),
            domain: Domain::Integer { low, high },
            distribution: Distribution::Uniform,
        }
    }

    pub fn real(name: impl Into<String>, low: f64, high: f64) -> Self {
        Self {
            name: name.into(),
            domain: Domain::Real { low, high },
            distribution: Distribution::Uniform,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            domain: Domain::Categorical {
                values: values.into_iter().map(Into::into).collect(),
            },
            distribution: Distribution::Uniform,
        }
    }

    pub fn with_distribution(mut self, distribution: Distribution) -> Self {
        self.distribution = distribution;
        self
    }

    /// Number of admissible values for discrete kinds.
    fn cardinality(&self) -> Option<u64> {
        match &self.domain {
            Domain::Integer { low, high } => Some((*high as i128 - *low as i128 + 1) as u64),
            Domain::Categorical { values } => Some(values.len() as u64),
            Domain::Real { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let name = || self.name.clone();
        match &self.domain {
            Domain::Integer { low, high } => {
                if low > high {
                    return Err(SpaceError::InvertedBounds { name: name() });
                }
            }
            Domain::Real { low, high } => {
                if !low.is_finite() || !high.is_finite() {
                    return Err(SpaceError::NonFiniteBounds { name: name() });
                }
                if low > high {
                    return Err(SpaceError::InvertedBounds { name: name() });
                }
            }
            Domain::Categorical { values } => {
                if values.is_empty() {
                    return Err(SpaceError::EmptyCategorical { name: name() });
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v) {
                        return Err(SpaceError::DuplicateValue {
                            name: name(),
                            value: v.clone(),
                        });
                    }
                }
            }
        }
        let invalid = |reason: &str| SpaceError::InvalidDistribution {
            name: name(),
            reason: reason.to_string(),
        };
        match &self.distribution {
            Distribution::Uniform => {}
            Distribution::Triangular { mode } => {
                let (lo, hi) = match &self.domain {
                    Domain::Integer { low, high } => (*low as f64, *high as f64),
                    Domain::Real { low, high } => (*low, *high),
                    Domain::Categorical { .. } => {
                        return Err(invalid("triangular law needs a numeric kind"))
                    }
                };
                if !(lo..=hi).contains(mode) {
                    return Err(invalid("mode outside bounds"));
                }
            }
            Distribution::Weighted { weights } => {
                let Some(n) = self.cardinality() else {
                    return Err(invalid("weighted law needs a discrete kind"));
                };
                if weights.len() as u64 != n {
                    return Err(invalid("one weight per admissible value is required"));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(invalid("weights must be finite and non-negative"));
                }
                if weights.iter().sum::<f64>() <= 0.0 {
                    return Err(invalid("weights sum to zero"));
                }
            }
        }
        Ok(())
    }

    /// Draws one value according to the dimension's distribution, consuming
    /// exactly one uniform `f64` from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        let u: f64 = rng.gen();
        self.value_at_quantile(u)
    }

    /// Maps `u` in `[0, 1)` through the inverse CDF of the dimension's law.
    pub fn value_at_quantile(&self, u: f64) -> Value {
        match &self.distribution {
            Distribution::Uniform => match &self.domain {
                Domain::Integer { low, high } => {
                    let n = *high as i128 - *low as i128 + 1;
                    let offset = ((u * n as f64) as i128).min(n - 1);
                    Value::Int((*low as i128 + offset) as i64)
                }
                Domain::Real { low, high } => Value::Real((low + u * (high - low)).min(*high)),
                Domain::Categorical { values } => {
                    let n = values.len();
                    Value::Cat(((u * n as f64) as usize).min(n - 1))
                }
            },
            Distribution::Triangular { mode } => {
                let (a, b) = self.relaxed_bounds();
                let c = match self.domain {
                    Domain::Integer { .. } => mode.clamp(a, b),
                    _ => *mode,
                };
                let x = if b <= a {
                    a
                } else if u < (c - a) / (b - a) {
                    a + (u * (b - a) * (c - a)).sqrt()
                } else {
                    b - ((1.0 - u) * (b - a) * (b - c)).sqrt()
                };
                self.from_real(x)
            }
            Distribution::Weighted { weights } => {
                let total: f64 = weights.iter().sum();
                let target = u * total;
                let mut acc = 0.0;
                let mut index = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if target < acc {
                        index = i;
                        break;
                    }
                }
                match &self.domain {
                    Domain::Integer { low, .. } => Value::Int(low + index as i64),
                    _ => Value::Cat(index),
                }
            }
        }
    }

    /// Maps a unit-cube coordinate affinely onto the domain: integers are
    /// rounded to the nearest admissible value, categories index-mapped.
    pub fn from_unit(&self, u: f64) -> Value {
        let u = u.clamp(0.0, 1.0);
        match &self.domain {
            Domain::Integer { low, high } => {
                let x = *low as f64 + u * (*high as f64 - *low as f64);
                Value::Int((x.round() as i64).clamp(*low, *high))
            }
            Domain::Real { low, high } => Value::Real((low + u * (high - low)).clamp(*low, *high)),
            Domain::Categorical { values } => {
                let n = values.len();
                Value::Cat(((u * n as f64) as usize).min(n - 1))
            }
        }
    }

    /// Bounds of the real relaxation used by continuous optimizers.
    pub fn real_bounds(&self) -> (f64, f64) {
        match &self.domain {
            Domain::Integer { low, high } => (*low as f64, *high as f64),
            Domain::Real { low, high } => (*low, *high),
            Domain::Categorical { values } => (0.0, (values.len() - 1) as f64),
        }
    }

    /// Bounds of the box on which discrete values occupy unit cells
    /// (`[low - 0.5, high + 0.5]` for integers), so that volume fractions
    /// equal uniform probability mass.
    pub fn relaxed_bounds(&self) -> (f64, f64) {
        match &self.domain {
            Domain::Real { low, high } => (*low, *high),
            _ => {
                let (lo, hi) = self.real_bounds();
                (lo - 0.5, hi + 0.5)
            }
        }
    }

    /// Real-relaxation coordinate of a value.
    pub fn to_real(&self, value: Value) -> f64 {
        match value {
            Value::Int(v) => v as f64,
            Value::Real(v) => v,
            Value::Cat(i) => i as f64,
        }
    }

    /// Rounds and clamps a relaxed coordinate back into the domain.
    pub fn from_real(&self, x: f64) -> Value {
        let x = if x.is_nan() { self.real_bounds().0 } else { x };
        match &self.domain {
            Domain::Integer { low, high } => {
                let r = x.round().clamp(*low as f64, *high as f64);
                Value::Int((r as i64).clamp(*low, *high))
            }
            Domain::Real { low, high } => Value::Real(x.clamp(*low, *high)),
            Domain::Categorical { values } => {
                let r = x.round().clamp(0.0, (values.len() - 1) as f64);
                Value::Cat(r as usize)
            }
        }
    }

    pub fn check_value(&self, value: &Value) -> Result<(), SpaceError> {
        let ok = match (&self.domain, value) {
            (Domain::Integer { low, high }, Value::Int(v)) => (low..=high).contains(&v),
            (Domain::Real { low, high }, Value::Real(v)) => (low..=high).contains(&v),
            (Domain::Categorical { values }, Value::Cat(i)) => *i < values.len(),
            _ => return Err(SpaceError::TypeMismatch { name: self.name.clone() }),
        };
        if ok {
            Ok(())
        } else {
            Err(SpaceError::OutOfBounds {
                name: self.name.clone(),
                value: self.render(value),
            })
        }
    }

    /// Text form of a value: integers without a decimal point, reals with
    /// round-trip precision, categories by label.
    pub fn render(&self, value: &Value) -> String {
        match (value, &self.domain) {
            (Value::Int(v), _) => v.to_string(),
            (Value::Real(v), _) => format!("{v:?}"),
            (Value::Cat(i), Domain::Categorical { values }) if *i < values.len() => {
                values[*i].clone()
            }
            (Value::Cat(i), _) => format!("#{i}"),
        }
    }

    pub fn to_json(&self, value: &Value) -> serde_json::Value {
        match value {
            Value::Int(v) => serde_json::Value::from(*v),
            Value::Real(v) => serde_json::Value::from(*v),
            Value::Cat(_) => serde_json::Value::from(self.render(value)),
        }
    }

    pub fn from_json(&self, json: &serde_json::Value) -> Result<Value, SpaceError> {
        let mismatch = || SpaceError::TypeMismatch { name: self.name.clone() };
        let value = match &self.domain {
            Domain::Integer { .. } => Value::Int(json.as_i64().ok_or_else(mismatch)?),
            Domain::Real { .. } => Value::Real(json.as_f64().ok_or_else(mismatch)?),
            Domain::Categorical { values } => {
                let label = json.as_str().ok_or_else(mismatch)?;
                let index = values.iter().position(|v| v == label).ok_or_else(|| {
                    SpaceError::OutOfBounds {
                        name: self.name.clone(),
                        value: label.to_string(),
                    }
                })?;
                Value::Cat(index)
            }
        };
        self.check_value(&value)?;
        Ok(value)
    }
}

/// Checks every dimension invariant and name uniqueness.
pub fn validate_space(dimensions: &[Dimension]) -> Result<(), SpaceError> {
    if dimensions.is_empty() {
        return Err(SpaceError::Empty);
    }
    let mut names = HashSet::new();
    for dim in dimensions {
        dim.validate()?;
        if !names.insert(dim.name.as_str()) {
            return Err(SpaceError::DuplicateName { name: dim.name.clone() });
        }
    }
    Ok(())
}

/// Ordered, validated list of dimensions. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchSpace {
    #[serde(rename = "dimension")]
    dimensions: Vec<Dimension>,
}

#[derive(Deserialize)]
struct SpaceFile {
    #[serde(default)]
    dimension: Vec<Dimension>,
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let file = SpaceFile::deserialize(deserializer)?;
        SearchSpace::new(file.dimension).map_err(serde::de::Error::custom)
    }
}

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self, SpaceError> {
        validate_space(&dimensions)?;
        Ok(Self { dimensions })
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dim(&self) -> usize {
        self.dimensions.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SpaceError> {
        let file: SpaceFile = toml::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
        Self::new(file.dimension)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|cause| SpaceError::Io {
            path: path.display().to_string(),
            cause,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("search space serializes to TOML")
    }

    /// Stable 64-bit FNV-1a digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("search space serializes to JSON");
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in json.bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{hash:016x}")
    }

    pub fn validate_candidate(&self, candidate: &Candidate) -> Result<(), SpaceError> {
        if candidate.len() != self.dim() {
            return Err(SpaceError::LengthMismatch {
                expected: self.dim(),
                found: candidate.len(),
            });
        }
        for (dim, value) in self.dimensions.iter().zip(candidate.values()) {
            dim.check_value(value)?;
        }
        Ok(())
    }

    /// Canonical identity of a candidate. Real coordinates compare bitwise.
    pub fn candidate_key(&self, candidate: &Candidate) -> Result<CandidateKey, SpaceError> {
        if candidate.len() != self.dim() {
            return Err(SpaceError::LengthMismatch {
                expected: self.dim(),
                found: candidate.len(),
            });
        }
        let words = self
            .dimensions
            .iter()
            .zip(candidate.values())
            .map(|(dim, value)| match (&dim.domain, value) {
                (Domain::Integer { .. }, Value::Int(v)) => Ok(*v as u64),
                (Domain::Real { .. }, Value::Real(v)) => Ok(v.to_bits()),
                (Domain::Categorical { .. }, Value::Cat(i)) => Ok(*i as u64),
                _ => Err(SpaceError::TypeMismatch { name: dim.name.clone() }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CandidateKey(words))
    }

    /// Relaxed real coordinates of a candidate, one per dimension.
    pub fn to_reals(&self, candidate: &Candidate) -> Vec<f64> {
        self.dimensions
            .iter()
            .zip(candidate.values())
            .map(|(d, v)| d.to_real(*v))
            .collect()
    }

    /// Rounds and clamps a relaxed point into a valid candidate.
    pub fn from_reals(&self, point: &[f64]) -> Candidate {
        Candidate::new(
            self.dimensions
                .iter()
                .zip(point)
                .map(|(d, x)| d.from_real(*x))
                .collect(),
        )
    }

    pub fn candidate_to_json(&self, candidate: &Candidate) -> serde_json::Value {
        serde_json::Value::Array(
            self.dimensions
                .iter()
                .zip(candidate.values())
                .map(|(d, v)| d.to_json(v))
                .collect(),
        )
    }

    pub fn candidate_from_json(&self, json: &serde_json::Value) -> Result<Candidate, SpaceError> {
        let items = json
            .as_array()
            .ok_or_else(|| SpaceError::Parse("candidate must be a JSON array".into()))?;
        if items.len() != self.dim() {
            return Err(SpaceError::LengthMismatch {
                expected: self.dim(),
                found: items.len(),
            });
        }
        let values = self
            .dimensions
            .iter()
            .zip(items)
            .map(|(d, j)| d.from_json(j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Candidate::new(values))
    }
}

/// Draws one value of `dim`.
pub fn sample_dimension<R: Rng + ?Sized>(dim: &Dimension, rng: &mut R) -> Value {
    dim.sample(rng)
}

/// Point of the search space; coordinates align with the space's dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    values: Vec<Value>,
}

impl Candidate {
    pub fn new(values: Vec<Value>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn set(&mut self, index: usize, value: Value) {
        self.values[index] = value;
    }
}

impl std::ops::Index<usize> for Candidate {
    type Output = Value;

    fn index(&self, index: usize) -> &Value {
        &self.values[index]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CandidateKey(Vec<u64>);

impl fmt::Display for CandidateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(":")?;
            }
            write!(f, "{w:x}")?;
        }
        Ok(())
    }
}

/// The twelve-dimensional convolutional-network space: layer counts
/// `C` and `F`, filters `C1..C6` and dense widths `F1..F4`.
pub fn cnn_space() -> SearchSpace {
    let mut dims = vec![Dimension::integer("C", 3, 6), Dimension::integer("F", 1, 4)];
    dims.extend((1..=6).map(|i| Dimension::integer(format!("C{i}"), 100, 1024)));
    dims.extend((1..=4).map(|i| Dimension::integer(format!("F{i}"), 1024, 2048)));
    SearchSpace::new(dims).expect("static space is valid")
}
