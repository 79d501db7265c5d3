//! Subprocess objective protocol.
//!
//! The command is run with one extra argument per dimension, in space
//! order, of the form `name=value`. Integers are printed without a decimal
//! point, reals with round-trip precision (always containing `.` or an
//! exponent), categories by label. Standard input is closed and standard
//! error is inherited. The process must exit with status 0 within the
//! timeout; the last non-blank line of standard output, trimmed, is parsed
//! as a decimal floating-point score and must be finite. Anything else is a
//! failed trial.

use std::io::Read;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use wait_timeout::ChildExt;

use super::EvalError;
use crate::space::{Candidate, SearchSpace};

/// Command-line arguments encoding `candidate`.
pub fn candidate_args(space: &SearchSpace, candidate: &Candidate) -> Vec<String> {
    space
        .dimensions()
        .iter()
        .zip(candidate.values())
        .map(|(d, v)| format!("{}={}", d.name, d.render(v)))
        .collect()
}

/// Score from a process's standard output.
pub fn parse_score(stdout: &str) -> Result<f64, EvalError> {
    let line = stdout
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .ok_or_else(|| EvalError::Unparseable(String::new()))?;
    match line.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(EvalError::Unparseable(line.to_string())),
    }
}

/// Runs `command` on `candidate` and returns the raw score it reports.
pub fn evaluate_external(
    command: &[String],
    candidate: &Candidate,
    space: &SearchSpace,
    timeout: Duration,
) -> Result<f64, EvalError> {
    let (program, fixed) = command
        .split_first()
        .ok_or_else(|| EvalError::Spawn("empty command".into()))?;
    let mut child = Command::new(program)
        .args(fixed)
        .args(candidate_args(space, candidate))
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| EvalError::Spawn(format!("{program}: {e}")))?;

    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });

    let status = match child.wait_timeout(timeout) {
        Ok(Some(status)) => status,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            // grandchildren may still hold the pipe; leave the reader detached
            return Err(EvalError::Timeout(timeout));
        }
        Err(e) => return Err(EvalError::Spawn(e.to_string())),
    };
    let output = reader
        .join()
        .map_err(|_| EvalError::Spawn("stdout reader panicked".into()))?
        .map_err(|e| EvalError::Spawn(format!("reading stdout: {e}")))?;
    if !status.success() {
        return Err(EvalError::ExitStatus(status.code()));
    }
    parse_score(&output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Value};

    fn space() -> SearchSpace {
        SearchSpace::new(vec![
            Dimension::integer("layers", 1, 8),
            Dimension::real("lr", 0.0, 1.0),
            Dimension::categorical("act", ["relu", "tanh"]),
        ])
        .unwrap()
    }

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into(), "objective".into()]
    }

    #[test]
    fn arguments_render_each_kind() {
        let c = Candidate::new(vec![Value::Int(4), Value::Real(1.0), Value::Cat(1)]);
        assert_eq!(candidate_args(&space(), &c), vec!["layers=4", "lr=1.0", "act=tanh"]);
    }

    #[test]
    fn score_is_last_non_blank_line() {
        assert_eq!(parse_score("epoch 1\nepoch 2\n0.75\n\n"), Ok(0.75));
        assert_eq!(parse_score("  -1e-3 "), Ok(-0.001));
        assert!(matches!(parse_score("done"), Err(EvalError::Unparseable(_))));
        assert!(matches!(parse_score(""), Err(EvalError::Unparseable(_))));
        assert!(matches!(parse_score("NaN"), Err(EvalError::Unparseable(_))));
    }

    #[test]
    fn echo_command_reports_score() {
        let c = Candidate::new(vec![Value::Int(2), Value::Real(0.5), Value::Cat(0)]);
        let s = evaluate_external(&sh("echo 0.5"), &c, &space(), Duration::from_secs(10));
        assert_eq!(s, Ok(0.5));
    }

    #[test]
    fn arguments_reach_the_process() {
        let c = Candidate::new(vec![Value::Int(3), Value::Real(0.25), Value::Cat(0)]);
        let script = r#"for a in "$@"; do case "$a" in layers=*) echo "${a#layers=}";; esac; done"#;
        let s = evaluate_external(&sh(script), &c, &space(), Duration::from_secs(10));
        assert_eq!(s, Ok(3.0));
    }

    #[test]
    fn failures() {
        let c = Candidate::new(vec![Value::Int(2), Value::Real(0.5), Value::Cat(0)]);
        let t = Duration::from_secs(10);
        assert_eq!(evaluate_external(&sh("exit 1"), &c, &space(), t), Err(EvalError::ExitStatus(Some(1))));
        assert!(matches!(
            evaluate_external(&sh("echo oops"), &c, &space(), t),
            Err(EvalError::Unparseable(_))
        ));
        assert!(matches!(
            evaluate_external(&["/nonexistent/trainer".to_string()], &c, &space(), t),
            Err(EvalError::Spawn(_))
        ));
        let slow = evaluate_external(&sh("sleep 5; echo 1"), &c, &space(), Duration::from_millis(200));
        assert!(matches!(slow, Err(EvalError::Timeout(_))));
    }
}
