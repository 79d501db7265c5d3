//! Objective adapters. Engine-visible scores are always maximized; a
//! minimize-direction objective reports `-f(x)`.

mod external;
pub mod functions;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Candidate, SearchSpace};

pub use external::{candidate_args, evaluate_external, parse_score};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("objective `{name}` expects {expected} values, got {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("exited with status {0:?}")]
    ExitStatus(Option<i32>),
    #[error("unparseable score line `{0}`")]
    Unparseable(String),
    #[error("cannot run command: {0}")]
    Spawn(String),
}

impl EvalError {
    /// Short machine-readable reason used in trial logs.
    pub fn reason(&self) -> String {
        match self {
            EvalError::Arity { .. } => "arity".into(),
            EvalError::Timeout(_) => "timeout".into(),
            EvalError::ExitStatus(Some(c)) => format!("exit-{c}"),
            EvalError::ExitStatus(None) => "signal".into(),
            EvalError::Unparseable(_) => "unparseable".into(),
            EvalError::Spawn(_) => "spawn".into(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("unknown builtin objective `{0}`")]
    UnknownBuiltin(String),
    #[error("malformed objective spec `{0}`: expected builtin:<name>[:c1,c2,..] or external:<command>")]
    Malformed(String),
    #[error("timeout must be positive")]
    NonPositiveTimeout,
    #[error("unknown direction `{0}` (expected maximize or minimize)")]
    UnknownDirection(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl FromStr for Direction {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maximize" | "max" => Ok(Direction::Maximize),
            "minimize" | "min" => Ok(Direction::Minimize),
            _ => Err(ObjectiveError::UnknownDirection(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Builtin {
    Sphere,
    Rastrigin,
    Rosenbrock,
    Branin,
    StyblinskiTang,
    /// Additive function on the unit cube with the given coefficients.
    AdditiveAnova(Vec<f64>),
    /// Accuracy-like surrogate on the twelve-dimensional CNN space.
    CnnSurrogate,
}

impl Builtin {
    pub const NAMES: [&'static str; 7] = [
        "sphere",
        "rastrigin",
        "rosenbrock",
        "branin",
        "styblinski-tang",
        "additive-anova",
        "cnn-surrogate",
    ];

    pub fn parse(name: &str, params: Option<&str>) -> Result<Self, ObjectiveError> {
        let b = match name {
            "sphere" => Builtin::Sphere,
            "rastrigin" => Builtin::Rastrigin,
            "rosenbrock" => Builtin::Rosenbrock,
            "branin" => Builtin::Branin,
            "styblinski-tang" => Builtin::StyblinskiTang,
            "cnn-surrogate" => Builtin::CnnSurrogate,
            "additive-anova" => {
                let params = params.unwrap_or("3,1");
                let coefficients = params
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| ObjectiveError::Malformed(format!("{name}:{params}")))?;
                return Ok(Builtin::AdditiveAnova(coefficients));
            }
            other => return Err(ObjectiveError::UnknownBuiltin(other.to_string())),
        };
        if params.is_some() {
            return Err(ObjectiveError::Malformed(format!("{name}:{}", params.unwrap_or(""))));
        }
        Ok(b)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Sphere => "sphere",
            Builtin::Rastrigin => "rastrigin",
            Builtin::Rosenbrock => "rosenbrock",
            Builtin::Branin => "branin",
            Builtin::StyblinskiTang => "styblinski-tang",
            Builtin::AdditiveAnova(_) => "additive-anova",
            Builtin::CnnSurrogate => "cnn-surrogate",
        }
    }

    /// Direction in which the function is naturally optimized.
    pub fn natural_direction(&self) -> Direction {
        match self {
            Builtin::AdditiveAnova(_) | Builtin::CnnSurrogate => Direction::Maximize,
            _ => Direction::Minimize,
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::AdditiveAnova(c) => {
                let c: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "additive-anova:{}", c.join(","))
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Closed-form value of a builtin at raw coordinates.
pub fn evaluate_builtin<T: crate::Scalar>(builtin: &Builtin, x: &[T]) -> Result<T, EvalError> {
    let arity = |expected: &str| EvalError::Arity {
        name: builtin.name().to_string(),
        expected: expected.to_string(),
        found: x.len(),
    };
    match builtin {
        Builtin::Sphere | Builtin::Rastrigin | Builtin::StyblinskiTang if x.is_empty() => {
            Err(arity("at least 1"))
        }
        Builtin::Sphere => Ok(functions::sphere(x)),
        Builtin::Rastrigin => Ok(functions::rastrigin(x)),
        Builtin::StyblinskiTang => Ok(functions::styblinski_tang(x)),
        Builtin::Rosenbrock if x.len() < 2 => Err(arity("at least 2")),
        Builtin::Rosenbrock => Ok(functions::rosenbrock(x)),
        Builtin::Branin if x.len() != 2 => Err(arity("2")),
        Builtin::Branin => Ok(functions::branin(x[0], x[1])),
        Builtin::AdditiveAnova(c) if c.len() != x.len() => Err(arity(&c.len().to_string())),
        Builtin::AdditiveAnova(c) => {
            let c: Vec<T> = c.iter().map(|v| T::of(*v)).collect();
            Ok(functions::additive_anova(&c, x))
        }
        Builtin::CnnSurrogate if x.len() != 12 => Err(arity("12")),
        Builtin::CnnSurrogate => Ok(functions::cnn_surrogate(x)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveKind {
    Builtin(Builtin),
    External { command: Vec<String>, timeout: Duration },
}

/// What to optimize and in which direction.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub direction: Direction,
}

impl ObjectiveSpec {
    pub fn builtin(builtin: Builtin) -> Self {
        let direction = builtin.natural_direction();
        Self {
            kind: ObjectiveKind::Builtin(builtin),
            direction,
        }
    }

    pub fn external(command: Vec<String>, timeout: Duration) -> Result<Self, ObjectiveError> {
        if timeout.is_zero() {
            return Err(ObjectiveError::NonPositiveTimeout);
        }
        if command.is_empty() {
            return Err(ObjectiveError::Malformed("external:".into()));
        }
        Ok(Self {
            kind: ObjectiveKind::External { command, timeout },
            direction: Direction::Maximize,
        })
    }

    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    /// Parses `builtin:<name>[:<params>]` or `external:<command line>`;
    /// the command line is split with POSIX shell quoting rules.
    pub fn parse(text: &str, timeout: Duration) -> Result<Self, ObjectiveError> {
        if let Some(rest) = text.strip_prefix("builtin:") {
            let (name, params) = match rest.split_once(':') {
                Some((n, p)) => (n, Some(p)),
                None => (rest, None),
            };
            Ok(Self::builtin(Builtin::parse(name, params)?))
        } else if let Some(rest) = text.strip_prefix("external:") {
            let words = shlex::split(rest).ok_or_else(|| ObjectiveError::Malformed(text.to_string()))?;
            Self::external(words, timeout)
        } else {
            Err(ObjectiveError::Malformed(text.to_string()))
        }
    }

    /// Rejects builtins that cannot be evaluated on `d` coordinates.
    pub fn check_arity(&self, d: usize) -> Result<(), EvalError> {
        match &self.kind {
            ObjectiveKind::Builtin(b) => evaluate_builtin::<f64>(b, &vec![0.0; d]).map(|_| ()),
            ObjectiveKind::External { .. } => Ok(()),
        }
    }

    /// Instantiates the objective.
    pub fn build(&self) -> SpecObjective {
        SpecObjective { spec: self.clone() }
    }
}

impl fmt::Display for ObjectiveSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ObjectiveKind::Builtin(b) => write!(f, "builtin:{b}")?,
            ObjectiveKind::External { command, .. } => {
                let quoted = shlex::try_join(command.iter().map(String::as_str))
                    .unwrap_or_else(|_| command.join(" "));
                write!(f, "external:{quoted}")?
            }
        }
        let dir = match self.direction {
            Direction::Maximize => "maximize",
            Direction::Minimize => "minimize",
        };
        write!(f, " ({dir})")
    }
}

/// Anything the engine can score. Scores are maximized; `Err` marks a
/// failed trial.
pub trait Objective {
    fn evaluate(&mut self, space: &SearchSpace, candidate: &Candidate) -> Result<f64, EvalError>;

    /// Label recorded in trial-log headers.
    fn describe(&self) -> String {
        "custom".to_string()
    }
}

impl<F> Objective for F
where
    F: FnMut(&SearchSpace, &Candidate) -> Result<f64, EvalError>,
{
    fn evaluate(&mut self, space: &SearchSpace, candidate: &Candidate) -> Result<f64, EvalError> {
        self(space, candidate)
    }
}

/// Objective built from an [`ObjectiveSpec`], with direction applied.
#[derive(Clone, Debug)]
pub struct SpecObjective {
    spec: ObjectiveSpec,
}

impl SpecObjective {
    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    /// Raw function value, before direction handling.
    pub fn raw(&self, space: &SearchSpace, candidate: &Candidate) -> Result<f64, EvalError> {
        match &self.spec.kind {
            ObjectiveKind::Builtin(b) => evaluate_builtin(b, &space.to_reals(candidate)),
            ObjectiveKind::External { command, timeout } => {
                evaluate_external(command, candidate, space, *timeout)
            }
        }
    }
}

impl Objective for SpecObjective {
    fn evaluate(&mut self, space: &SearchSpace, candidate: &Candidate) -> Result<f64, EvalError> {
        let raw = self.raw(space, candidate)?;
        Ok(match self.spec.direction {
            Direction::Maximize => raw,
            // subtraction keeps a zero minimum at +0.0
            Direction::Minimize => 0.0 - raw,
        })
    }

    fn describe(&self) -> String {
        self.spec.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Value};
    use proptest::prelude::*;

    fn unit_space(d: usize) -> SearchSpace {
        SearchSpace::new((0..d).map(|i| Dimension::real(format!("x{i}"), -5.0, 5.0)).collect()).unwrap()
    }

    #[test]
    fn parse_specs() {
        let t = Duration::from_secs(5);
        let s = ObjectiveSpec::parse("builtin:rastrigin", t).unwrap();
        assert_eq!(s.kind, ObjectiveKind::Builtin(Builtin::Rastrigin));
        assert_eq!(s.direction, Direction::Minimize);
        let s = ObjectiveSpec::parse("builtin:additive-anova:3,1", t).unwrap();
        assert_eq!(s.kind, ObjectiveKind::Builtin(Builtin::AdditiveAnova(vec![3.0, 1.0])));
        let s = ObjectiveSpec::parse("external:python 'train it.py' --epochs 3", t).unwrap();
        assert_eq!(
            s.kind,
            ObjectiveKind::External {
                command: vec!["python".into(), "train it.py".into(), "--epochs".into(), "3".into()],
                timeout: t
            }
        );
        assert!(matches!(
            ObjectiveSpec::parse("builtin:nope", t),
            Err(ObjectiveError::UnknownBuiltin(_))
        ));
        assert!(ObjectiveSpec::parse("rastrigin", t).is_err());
        assert_eq!(
            ObjectiveSpec::parse("external:x", Duration::ZERO),
            Err(ObjectiveError::NonPositiveTimeout)
        );
    }

    #[test]
    fn arity_is_checked() {
        assert!(matches!(evaluate_builtin(&Builtin::Branin, &[1.0f64]), Err(EvalError::Arity { .. })));
        assert!(matches!(
            evaluate_builtin(&Builtin::AdditiveAnova(vec![3.0, 1.0]), &[0.1f64, 0.2, 0.3]),
            Err(EvalError::Arity { .. })
        ));
        assert!(evaluate_builtin(&Builtin::Sphere, &[0.0f64; 7]).is_ok());
    }

    #[test]
    fn external_spec_scores_through_the_protocol() {
        let spec = ObjectiveSpec::external(
            vec!["sh".into(), "-c".into(), "echo 0.5".into(), "obj".into()],
            Duration::from_secs(10),
        )
        .unwrap();
        let space = unit_space(1);
        let c = Candidate::new(vec![Value::Real(1.0)]);
        assert_eq!(spec.build().evaluate(&space, &c), Ok(0.5));
        let neg = spec.with_direction(Direction::Minimize);
        assert_eq!(neg.build().evaluate(&space, &c), Ok(-0.5));
    }

    proptest! {
        #[test]
        fn minimize_wraps_by_exact_negation(x in prop::collection::vec(-5.0f64..5.0, 3)) {
            let space = unit_space(3);
            let c = Candidate::new(x.iter().map(|v| Value::Real(*v)).collect());
            let mut obj = ObjectiveSpec::builtin(Builtin::Rastrigin).build();
            let score = obj.evaluate(&space, &c).unwrap();
            prop_assert_eq!(score, -functions::rastrigin(&x));
        }
    }
}
