use std::fmt::Write as _;

use serde_json::json;

use super::{summarize, ReportError, RunReport, WindowStats};
use crate::engine::TrialLog;

/// One summary row per log, ordered by strategy then seed (input order
/// breaks ties), plus any caveats about the comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub reports: Vec<RunReport>,
    pub window: usize,
    pub warnings: Vec<String>,
}

pub fn compare(logs: &[TrialLog], window: usize, degree: usize) -> Result<Comparison, ReportError> {
    if logs.is_empty() {
        return Err(ReportError::NoLogs);
    }
    let mut reports = logs
        .iter()
        .map(|l| summarize(l, window, degree))
        .collect::<Result<Vec<_>, _>>()?;
    reports.sort_by_key(|r| (r.strategy, r.seed));

    let mut warnings = Vec::new();
    let mut budgets: Vec<u64> = reports.iter().map(|r| r.budget).collect();
    budgets.sort_unstable();
    budgets.dedup();
    if budgets.len() > 1 {
        let list: Vec<String> = budgets.iter().map(u64::to_string).collect();
        warnings.push(format!(
            "budget mismatch: runs used N = {}; rows are not a same-budget comparison",
            list.join(", ")
        ));
    }
    for r in &reports {
        if r.all.failed > 0 {
            warnings.push(format!(
                "{} seed {}: {} failed trial(s) excluded from best/mean/sd",
                r.strategy.label(),
                r.seed,
                r.all.failed
            ));
        }
    }
    Ok(Comparison {
        reports,
        window,
        warnings,
    })
}

fn num(x: Option<f64>, precision: usize) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.precision$}"))
}

fn pair(all: Option<f64>, last: Option<f64>, precision: usize) -> String {
    format!("{}({})", num(all, precision), num(last, precision))
}

fn cells(r: &RunReport, precision: usize) -> [String; 6] {
    let (a, l): (&WindowStats, &WindowStats) = (&r.all, &r.last);
    [
        r.strategy.label().to_string(),
        r.seed.to_string(),
        r.budget.to_string(),
        pair(a.best, l.best, precision),
        pair(a.mean, l.mean, precision),
        pair(a.sd, l.sd, precision),
    ]
}

fn csv_num(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

impl Comparison {
    /// Fixed-width table: each statistic over all trials with the trailing
    /// window in parentheses.
    pub fn to_text(&self, precision: usize) -> String {
        let head = ["Strategy", "Seed", "N", "Best", "Average", "SD"].map(String::from);
        let rows: Vec<[String; 6]> = self.reports.iter().map(|r| cells(r, precision)).collect();
        let mut widths = head.clone().map(|h| h.len());
        for row in &rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        for row in std::iter::once(&head).chain(&rows) {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            writeln!(out, "{}", line.join("  ").trim_end()).unwrap();
        }
        writeln!(
            out,
            "values over all trials, in parentheses over the last {} (population SD)",
            self.window
        )
        .unwrap();
        for w in &self.warnings {
            writeln!(out, "warning: {w}").unwrap();
        }
        out
    }

    /// CSV with columns `strategy,best,best_lastW,mean,mean_lastW,sd,sd_lastW,budget,seed`.
    pub fn to_csv(&self) -> String {
        let w = self.window;
        let mut out =
            format!("strategy,best,best_last{w},mean,mean_last{w},sd,sd_last{w},budget,seed\n");
        for r in &self.reports {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.strategy.tag(),
                csv_num(r.all.best),
                csv_num(r.last.best),
                csv_num(r.all.mean),
                csv_num(r.last.mean),
                csv_num(r.all.sd),
                csv_num(r.last.sd),
                r.budget,
                r.seed
            )
            .unwrap();
        }
        out
    }
}

/// Fit coefficients with their normalization, for external plotting.
pub fn fits_json(reports: &[RunReport]) -> serde_json::Value {
    let fits: Vec<serde_json::Value> = reports
        .iter()
        .map(|r| {
            json!({
                "strategy": r.strategy,
                "seed": r.seed,
                "budget": r.budget,
                "basis": "sum_j c_j t^j, t = (2x - (x_min + x_max)) / (x_max - x_min), x = iteration",
                "fit": r.fit,
            })
        })
        .collect();
    json!({ "fits": fits })
}
