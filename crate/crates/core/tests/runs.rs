use std::time::Duration;

use wrs_core::engine::{TrialStatus, LOG_FORMAT};
use wrs_core::objectives::{Builtin, ObjectiveSpec};
use wrs_core::reporting::{compare, summarize};
use wrs_core::{run, Dimension, RunConfig, SearchSpace, Strategy, TrialLog};

fn space() -> SearchSpace {
    SearchSpace::from_toml_str(
        r#"
        [[dimension]]
        name = "x0"
        kind = "real"
        low = -5.0
        high = 10.0

        [[dimension]]
        name = "x1"
        kind = "real"
        low = 0.0
        high = 15.0
        "#,
    )
    .unwrap()
}

#[test]
fn log_files_round_trip_for_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let space = space();
    for strategy in Strategy::ALL {
        let mut obj = ObjectiveSpec::builtin(Builtin::Branin).build();
        let out = run(&space, &mut obj, &RunConfig::new(strategy, 80, 30, 4)).unwrap();
        let path = dir.path().join(format!("{strategy}.jsonl"));
        out.log.write(&path).unwrap();
        let back = TrialLog::read(&path).unwrap();
        assert_eq!(back, out.log);
        assert_eq!(back.header.format, LOG_FORMAT);
        assert_eq!(back.header.objective, "builtin:branin (minimize)");
        let best = back.best().unwrap();
        assert_eq!(Some(best.score), out.best.as_ref().map(|b| b.score));
        assert!(best.score <= -0.397887 + 1e-9);
    }
}

#[test]
fn weighted_run_summarizes() {
    let space = space();
    let mut obj = ObjectiveSpec::builtin(Builtin::Branin).build();
    let out = run(&space, &mut obj, &RunConfig::new(Strategy::Wrs, 300, 110, 17)).unwrap();
    let report = summarize(&out.log, 100, 5).unwrap();
    assert_eq!(report.all.count, 300);
    assert_eq!(report.last.count, 100);
    assert!(report.fit.is_some());
    let fit = report.fit.unwrap();
    assert_eq!((fit.x_min, fit.x_max), (1.0, 300.0));
    let table = compare(&[out.log], 100, 5).unwrap().to_text(3);
    assert!(table.starts_with("Strategy"));
}

#[test]
fn external_objective_failures_are_logged_and_cached() {
    let space = SearchSpace::new(vec![Dimension::integer("n", 0, 3)]).unwrap();
    let script = r#"for a in "$@"; do v="${a#n=}"; done; if [ "$v" = 0 ]; then exit 3; fi; echo "$v""#;
    let command = vec!["sh".to_string(), "-c".to_string(), script.to_string(), "obj".to_string()];
    let spec = ObjectiveSpec::external(command, Duration::from_secs(20)).unwrap();
    let out = run(&space, &mut spec.build(), &RunConfig::new(Strategy::Rs, 12, 0, 2)).unwrap();
    assert_eq!(out.log.records.len(), 12);
    assert!(out.objective_calls <= 4);
    for r in &out.log.records {
        let n = match r.candidate[0] {
            wrs_core::Value::Int(n) => n,
            _ => unreachable!(),
        };
        if n == 0 {
            assert_eq!(r.score, f64::NEG_INFINITY);
            assert_eq!(r.reason.as_deref(), Some("exit-3"));
        } else {
            assert_eq!(r.score, n as f64);
            assert_ne!(r.status, TrialStatus::Failed);
        }
    }
}

#[test]
fn seeds_change_the_run() {
    let space = space();
    let cfg = |seed| RunConfig::new(Strategy::Wrs, 60, 20, seed);
    let a = run(&space, &mut ObjectiveSpec::builtin(Builtin::Branin).build(), &cfg(1)).unwrap();
    let b = run(&space, &mut ObjectiveSpec::builtin(Builtin::Branin).build(), &cfg(2)).unwrap();
    assert_ne!(a.log.records, b.log.records);
}

#[test]
fn timing_is_only_recorded_on_request() {
    let space = space();
    let mut cfg = RunConfig::new(Strategy::Rs, 5, 0, 1);
    let plain = run(&space, &mut ObjectiveSpec::builtin(Builtin::Branin).build(), &cfg).unwrap();
    assert!(!plain.log.to_jsonl().contains("wall_ms"));
    cfg.record_timing = true;
    let timed = run(&space, &mut ObjectiveSpec::builtin(Builtin::Branin).build(), &cfg).unwrap();
    assert!(timed.log.records.iter().all(|r| r.wall_time.is_some()));
    assert!(TrialLog::parse(&timed.log.to_jsonl()).is_ok());
}
