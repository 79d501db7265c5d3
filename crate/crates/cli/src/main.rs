use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use wrs_core::engine::{EngineError, Strategy, TrialLog};
use wrs_core::importance::{
    fit_forest, main_effect_fractions, weights_to_probabilities, ForestConfig, ImportanceError,
    DEFAULT_P_MIN,
};
use wrs_core::objectives::{Direction, ObjectiveSpec};
use wrs_core::reporting::{compare, fits_json, Comparison, DEFAULT_DEGREE, DEFAULT_WINDOW};
use wrs_core::{run, RunConfig, SearchSpace};

#[derive(Parser)]
#[command(name = "wrs", version, about = "Weighted random search for hyperparameter optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and write its trial log.
    Run(RunArgs),
    /// Summarize one trial log.
    Report(ReportArgs),
    /// Tabulate several trial logs side by side.
    Compare(CompareArgs),
    /// Estimate per-dimension importance from a trial log.
    Importance(ImportanceArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Search-space definition (TOML).
    #[arg(long)]
    space: PathBuf,
    /// `builtin:<name>[:<params>]` or `external:<command line>`.
    #[arg(long)]
    objective: String,
    /// wrs, rs, sobol, nelder-mead (nm) or pso.
    #[arg(long, default_value = "wrs")]
    strategy: String,
    /// Total number of trials.
    #[arg(long, default_value_t = 300)]
    budget: u64,
    /// Random-search trials before importance estimation (wrs only).
    #[arg(long, default_value_t = 110)]
    init: u64,
    /// RNG seed; a fresh one is generated and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial-log path [default: wrs-<strategy>-<seed>.jsonl].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Change-probability override `name=p`; `*=p` sets every dimension.
    #[arg(long = "prob", value_name = "NAME=P")]
    probs: Vec<String>,
    /// Minimum fresh-sample override `name=k`; `*=k` sets every dimension.
    #[arg(long = "kmin", value_name = "NAME=K")]
    kmins: Vec<String>,
    /// Lower clamp for change probabilities.
    #[arg(long, default_value_t = DEFAULT_P_MIN)]
    p_min: f64,
    /// Per-trial timeout for external objectives, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    timeout: f64,
    /// maximize or minimize [default: the objective's natural direction].
    #[arg(long)]
    direction: Option<String>,
    /// Particle-swarm population size.
    #[arg(long, default_value_t = 20)]
    swarm_size: usize,
    /// Trees in the importance forest.
    #[arg(long, default_value_t = 30)]
    trees: usize,
    /// Store per-trial wall-clock time in the log.
    #[arg(long)]
    record_timing: bool,
}

#[derive(Args)]
struct WindowArgs {
    /// Trailing-window length for the parenthesized statistics.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Degree of the score-trend polynomial.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    degree: usize,
    /// Decimals shown in the text table.
    #[arg(long, default_value_t = 2)]
    precision: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    log: PathBuf,
    #[command(flatten)]
    table: WindowArgs,
    /// Write fit coefficients and their normalization as JSON.
    #[arg(long)]
    fit: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(required = true)]
    logs: Vec<PathBuf>,
    #[command(flatten)]
    table: WindowArgs,
    /// Write fit coefficients of every log as JSON.
    #[arg(long)]
    fit: Option<PathBuf>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    log: PathBuf,
    /// Trials to use: all, rs (initial phase) or wrs.
    #[arg(long, default_value = "all")]
    phase: String,
    #[arg(long, default_value_t = 30)]
    trees: usize,
    /// Forest seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_P_MIN)]
    p_min: f64,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Error carrying its exit status: 1 for runtime failures, 2 for usage or
/// configuration errors.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: error.into() }
}

fn parse_overrides<V: std::str::FromStr>(items: &[String], flag: &str) -> Result<BTreeMap<String, V>, Failure> {
    items
        .iter()
        .map(|item| {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| usage(anyhow!("--{flag} expects NAME=VALUE, got `{item}`")))?;
            let value = value
                .trim()
                .parse()
                .map_err(|_| usage(anyhow!("--{flag}: cannot parse value in `{item}`")))?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)
}

fn cmd_run(args: RunArgs) -> Outcome {
    let space = SearchSpace::from_path(&args.space).map_err(usage)?;
    if !(args.timeout > 0.0 && args.timeout.is_finite()) {
        return Err(usage(anyhow!("--timeout must be a positive number of seconds")));
    }
    let mut spec = ObjectiveSpec::parse(&args.objective, Duration::from_secs_f64(args.timeout)).map_err(usage)?;
    if let Some(d) = &args.direction {
        spec = spec.with_direction(d.parse::<Direction>().map_err(usage)?);
    }
    spec.check_arity(space.dim()).map_err(usage)?;
    let strategy: Strategy = args.strategy.parse().map_err(usage)?;
    let seed = args.seed.unwrap_or_else(rand::random);
    if args.seed.is_none() {
        eprintln!("seed: {seed}");
    }
    let mut config = RunConfig::new(strategy, args.budget, args.init, seed);
    config.record_timing = args.record_timing;
    let settings = &mut config.settings;
    settings.p_min = args.p_min;
    settings.prob_overrides = parse_overrides(&args.probs, "prob")?;
    settings.kmin_overrides = parse_overrides(&args.kmins, "kmin")?;
    settings.pso.swarm_size = args.swarm_size;
    settings.forest = ForestConfig { n_trees: args.trees, ..ForestConfig::default() };
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(format!("wrs-{}-{seed}.jsonl", strategy.tag())));

    let mut objective = spec.build();
    let outcome = match run(&space, &mut objective, &config) {
        Ok(o) => o,
        Err(EngineError::AllTrialsFailed { phase, log }) => {
            log.write(&out).map_err(runtime)?;
            return Err(runtime(anyhow!(
                "all {} trials of the {phase} phase failed; partial log written to {}",
                log.records.len(),
                out.display()
            )));
        }
        Err(e @ EngineError::Importance(_)) => return Err(runtime(e)),
        Err(e) => return Err(usage(e)),
    };
    outcome.log.write(&out).map_err(runtime)?;
    for w in &outcome.log.header.warnings {
        eprintln!("warning: {w}");
    }
    let Some(best) = outcome.best else {
        return Err(runtime(anyhow!("all {} trials failed; log written to {}", args.budget, out.display())));
    };
    let coords: Vec<String> = space
        .dimensions()
        .iter()
        .zip(best.candidate.values())
        .map(|(d, v)| format!("{}={}", d.name, d.render(v)))
        .collect();
    println!("best {} at iteration {}: {}", best.score, best.iteration, coords.join(" "));
    let failed = outcome.log.records.iter().filter(|r| r.is_failed()).count();
    println!(
        "{} {} trials ({} objective calls, {} failed), seed {seed}, log {}",
        strategy.label(),
        outcome.log.records.len(),
        outcome.objective_calls,
        failed,
        out.display()
    );
    Ok(())
}

fn read_log(path: &Path) -> Result<TrialLog, Failure> {
    TrialLog::read(path)
        .with_context(|| format!("reading trial log {}", path.display()))
        .map_err(runtime)
}

fn emit_table(cmp: &Comparison, args: &WindowArgs, fit: Option<&Path>) -> Outcome {
    print!("{}", cmp.to_text(args.precision));
    if let Some(path) = &args.csv {
        write_file(path, &cmp.to_csv())?;
    }
    if let Some(path) = fit {
        let json = pretty(&fits_json(&cmp.reports));
        write_file(path, &json)?;
    }
    Ok(())
}

fn pretty(v: &impl std::fmt::Display) -> String {
    format!("{v:#}\n")
}

fn check_window(args: &WindowArgs) -> Outcome {
    if args.window == 0 {
        return Err(usage(anyhow!("--window must be at least 1")));
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Outcome {
    check_window(&args.table)?;
    let log = read_log(&args.log)?;
    let n = log.records.len();
    if args.table.window > n {
        eprintln!("warning: window {} exceeds the {n} trials in the log; using {n}", args.table.window);
    }
    let window = args.table.window.min(n.max(1));
    let cmp = compare(std::slice::from_ref(&log), window, args.table.degree).map_err(runtime)?;
    emit_table(&cmp, &args.table, args.fit.as_deref())?;
    let report = &cmp.reports[0];
    if let (Some(best), Some(iteration)) = (log.best(), report.best_iteration) {
        let coords: Vec<String> = log
            .space()
            .dimensions()
            .iter()
            .zip(best.candidate.values())
            .map(|(d, v)| format!("{}={}", d.name, d.render(v)))
            .collect();
        println!("best at iteration {iteration}: {}", coords.join(" "));
    }
    if report.fit.is_none() {
        eprintln!("warning: too few successful trials for a degree-{} fit", args.table.degree);
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Outcome {
    check_window(&args.table)?;
    let logs = args.logs.iter().map(|p| read_log(p)).collect::<Result<Vec<_>, _>>()?;
    let cmp = compare(&logs, args.table.window, args.table.degree).map_err(runtime)?;
    emit_table(&cmp, &args.table, args.fit.as_deref())
}

fn cmd_importance(args: ImportanceArgs) -> Outcome {
    let phase = match args.phase.as_str() {
        "all" => None,
        other => Some(other.parse::<Strategy>().map_err(usage)?),
    };
    if args.trees == 0 {
        return Err(usage(anyhow!("--trees must be at least 1")));
    }
    let log = read_log(&args.log)?;
    let space = log.space();
    let trials: Vec<_> = log
        .records
        .iter()
        .filter(|r| phase.is_none_or(|p| r.phase == p))
        .cloned()
        .collect();
    let config = ForestConfig { n_trees: args.trees, ..ForestConfig::default() };
    let explain = |e: ImportanceError| match e {
        ImportanceError::ZeroVariance => runtime(anyhow!(
            "zero variance: every usable trial has the same score, so importance is undefined"
        )),
        other => runtime(other),
    };
    let forest = fit_forest::<f64>(&trials, space, &config, args.seed).map_err(explain)?;
    let weights = main_effect_fractions(&forest).map_err(explain)?;
    let probs = weights_to_probabilities(&weights.fractions, args.p_min).map_err(explain)?;

    let names: Vec<&str> = space.dimensions().iter().map(|d| d.name.as_str()).collect();
    let w_cells: Vec<String> = weights.fractions.iter().map(|w| format!("{w:.2}")).collect();
    let p_cells: Vec<String> = probs.iter().map(|p| format!("{p:.2}")).collect();
    let widths: Vec<usize> = (0..names.len())
        .map(|i| names[i].len().max(w_cells[i].len()).max(p_cells[i].len()))
        .collect();
    let mut text = String::new();
    for (label, cells) in [
        ("", names.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
        ("weight", w_cells),
        ("probability", p_cells),
    ] {
        let row: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        writeln!(text, "{label:<11}  {}", row.join("  ")).unwrap();
    }
    writeln!(
        text,
        "interactions {:.2}% of variance; {} trials used",
        weights.interaction(),
        trials.iter().filter(|r| r.status == wrs_core::engine::TrialStatus::Evaluated && !r.is_failed()).count()
    )
    .unwrap();
    print!("{text}");
    if let Some(path) = &args.csv {
        let mut csv = format!("row,{}\n", names.join(","));
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        writeln!(csv, "weight,{}", join(&weights.fractions)).unwrap();
        writeln!(csv, "probability,{}", join(&probs)).unwrap();
        write_file(path, &csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Report(a) => cmd_report(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Importance(a) => cmd_importance(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
