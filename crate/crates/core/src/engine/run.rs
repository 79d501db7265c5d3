use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::log::{LogHeader, ProfileRecord, TrialLog, LOG_FORMAT};
use super::{
    evaluate_with_cache, update_best, BestState, EngineError, EvalCache, RunConfig, Strategy,
    TrialRecord, TrialStatus,
};
use crate::importance::{fit_forest, main_effect_fractions, min_samples_schedule, weights_to_probabilities, ImportanceError};
use crate::objectives::Objective;
use crate::samplers::{
    pso_step, rs_step, sobol_step, wrs_step, ChangeProfile, NelderMead, ParticleSwarm, SobolSequence,
};
use crate::space::{Candidate, Domain, SearchSpace};

const VALUE_STREAM: u64 = 0;
const COIN_STREAM: u64 = 1;
const FOREST_STREAM: u64 = 2;
const STRATEGY_STREAM: u64 = 3;

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Evaluates candidates one budget unit at a time and keeps the trial
/// records, the incumbent and the evaluation cache.
pub struct TrialRunner<'a, O: Objective + ?Sized> {
    space: &'a SearchSpace,
    objective: &'a mut O,
    cache: EvalCache,
    records: Vec<TrialRecord>,
    best: Option<BestState>,
    budget: u64,
    record_timing: bool,
    objective_calls: u64,
}

impl<'a, O: Objective + ?Sized> TrialRunner<'a, O> {
    pub fn new(space: &'a SearchSpace, objective: &'a mut O, budget: u64, record_timing: bool) -> Self {
        Self {
            space,
            objective,
            cache: EvalCache::new(),
            records: Vec::new(),
            best: None,
            budget,
            record_timing,
            objective_calls: 0,
        }
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.records.len() as u64
    }

    pub fn best(&self) -> Option<&BestState> {
        self.best.as_ref()
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    /// Number of times the objective itself was called (cache misses).
    pub fn objective_calls(&self) -> u64 {
        self.objective_calls
    }

    /// Spends one unit of budget on `candidate`.
    pub fn trial(&mut self, candidate: Candidate, phase: Strategy) -> Result<&TrialRecord, EngineError> {
        if self.remaining() == 0 {
            return Err(EngineError::Config("budget exhausted".into()));
        }
        let start = Instant::now();
        let eval = evaluate_with_cache(&mut *self.objective, self.space, &candidate, &mut self.cache)?;
        let elapsed = start.elapsed();
        if eval.status != TrialStatus::CachedHit {
            self.objective_calls += 1;
        }
        let mut record = TrialRecord {
            iteration: self.records.len() as u64 + 1,
            candidate,
            score: eval.score,
            phase,
            status: eval.status,
            best_score: f64::NEG_INFINITY,
            reason: eval.reason,
            wall_time: self.record_timing.then_some(elapsed),
        };
        self.best = update_best(self.best.take(), &record);
        record.best_score = self.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.score);
        self.records.push(record);
        Ok(self.records.last().expect("just pushed"))
    }

    fn into_records(self) -> (Vec<TrialRecord>, Option<BestState>, u64) {
        (self.records, self.best, self.objective_calls)
    }
}

pub struct RunOutcome {
    /// `None` when every trial failed.
    pub best: Option<BestState>,
    pub log: TrialLog,
    pub objective_calls: u64,
}

/// `n` plain random-search trials drawn from `values`.
pub fn run_rs_phase<O, R>(
    runner: &mut TrialRunner<'_, O>,
    n: u64,
    phase: Strategy,
    values: &mut R,
) -> Result<(), EngineError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    for _ in 0..n.min(runner.remaining()) {
        let c = rs_step(runner.space, values);
        runner.trial(c, phase)?;
    }
    Ok(())
}

fn header(space: &SearchSpace, objective: String, config: &RunConfig) -> LogHeader {
    LogHeader {
        format: LOG_FORMAT.into(),
        strategy: config.strategy,
        budget: config.budget,
        init: if config.strategy == Strategy::Wrs { config.init } else { 0 },
        seed: config.seed,
        objective,
        space_digest: space.digest(),
        space: space.clone(),
        settings: config.settings.clone(),
        profile: None,
        warnings: Vec::new(),
    }
}

fn finish<O: Objective + ?Sized>(runner: TrialRunner<'_, O>, header: LogHeader) -> RunOutcome {
    let (records, best, objective_calls) = runner.into_records();
    RunOutcome {
        best,
        log: TrialLog { header, records },
        objective_calls,
    }
}

/// Applies `*` then per-name overrides.
fn with_overrides<V: Copy>(
    space: &SearchSpace,
    base: Vec<V>,
    overrides: &std::collections::BTreeMap<String, V>,
) -> Vec<V> {
    let mut out = base;
    if let Some(all) = overrides.get("*") {
        out.iter_mut().for_each(|v| *v = *all);
    }
    for (name, v) in overrides {
        if let Some(i) = space.index_of(name) {
            out[i] = *v;
        }
    }
    out
}

/// Weighted random search: `init` random-search trials, importance
/// estimation on them, then weighted steps around the incumbent until the
/// budget is spent.
pub fn run_wrs<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &mut O,
    config: &RunConfig,
) -> Result<RunOutcome, EngineError> {
    config.validate(space)?;
    let settings = &config.settings;
    let mut header = header(space, objective.describe(), config);
    let mut values = stream(config.seed, VALUE_STREAM);
    let mut coin = stream(config.seed, COIN_STREAM);
    let forest_seed = stream(config.seed, FOREST_STREAM).next_u64();

    let mut runner = TrialRunner::new(space, objective, config.budget, config.record_timing);
    run_rs_phase(&mut runner, config.init, Strategy::Rs, &mut values)?;
    if config.init > 0 && runner.best().is_none() {
        let phase = Strategy::Rs;
        let partial = finish(runner, header);
        return Err(EngineError::AllTrialsFailed { phase, log: Box::new(partial.log) });
    }

    let d = space.dim();
    let estimate = fit_forest::<f64>(runner.records(), space, &settings.forest, forest_seed)
        .and_then(|forest| main_effect_fractions(&forest))
        .and_then(|w| {
            let p = weights_to_probabilities(&w.fractions, settings.p_min)?;
            Ok((w, p))
        });
    let (weights, interaction, probs) = match estimate {
        Ok((w, p)) => {
            let interaction = w.interaction();
            (w.fractions, interaction, p)
        }
        Err(
            e @ (ImportanceError::TooFewTrials { .. }
            | ImportanceError::ZeroVariance
            | ImportanceError::AllZeroWeights),
        ) => {
            header.warnings.push(format!(
                "importance unavailable ({e}); every dimension is resampled on every step"
            ));
            (vec![0.0; d], 0.0, vec![1.0; d])
        }
        Err(e) => return Err(e.into()),
    };
    let probs = with_overrides(space, probs, &settings.prob_overrides);
    if !probs.contains(&1.0) {
        return Err(EngineError::Config(
            "after overrides no dimension has change probability 1".into(),
        ));
    }
    let k_mins = with_overrides(
        space,
        min_samples_schedule(&probs, config.init, config.budget)?,
        &settings.kmin_overrides,
    );
    let counts = vec![runner.records().len() as u64; d];
    let mut profile = ChangeProfile::new(probs.clone(), k_mins.clone())?.with_gen_counts(counts)?;
    header.profile = Some(ProfileRecord {
        weights,
        interaction,
        probabilities: probs,
        k_mins,
    });

    while runner.remaining() > 0 {
        let c = match runner.best() {
            Some(best) => {
                let incumbent = best.candidate.clone();
                wrs_step(space, &incumbent, &mut profile, &mut coin, &mut values)?
            }
            None => {
                profile.record_full_resample();
                rs_step(space, &mut values)
            }
        };
        runner.trial(c, Strategy::Wrs)?;
    }
    Ok(finish(runner, header))
}

/// Spread below which a Nelder–Mead simplex counts as collapsed.
fn resolution(space: &SearchSpace) -> Vec<f64> {
    space
        .dimensions()
        .iter()
        .map(|d| match &d.domain {
            Domain::Real { low, high } => ((high - low) * 1e-9).max(f64::MIN_POSITIVE),
            _ => 0.5,
        })
        .collect()
}

fn bounds(space: &SearchSpace) -> (Vec<f64>, Vec<f64>) {
    space.dimensions().iter().map(|d| d.relaxed_bounds()).unzip()
}

/// Runs one of the non-weighted strategies over the whole budget.
pub fn run_baseline<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &mut O,
    config: &RunConfig,
) -> Result<RunOutcome, EngineError> {
    config.validate(space)?;
    let header = header(space, objective.describe(), config);
    let mut runner = TrialRunner::new(space, objective, config.budget, config.record_timing);
    let phase = config.strategy;
    match config.strategy {
        Strategy::Wrs => {
            return Err(EngineError::Config("weighted random search is not a baseline".into()))
        }
        Strategy::Rs => {
            let mut values = stream(config.seed, VALUE_STREAM);
            run_rs_phase(&mut runner, config.budget, phase, &mut values)?;
        }
        Strategy::Sobol => {
            let mut seq = SobolSequence::new(space.dim())?;
            while runner.remaining() > 0 {
                let c = sobol_step(&mut seq, space)?;
                runner.trial(c, phase)?;
            }
        }
        Strategy::NelderMead => {
            let mut rng = stream(config.seed, STRATEGY_STREAM);
            let (lower, upper) = bounds(space);
            let res = resolution(space);
            let cfg = &config.settings.nelder_mead;
            let restart = |rng: &mut ChaCha8Rng| {
                let start = space.to_reals(&rs_step(space, rng));
                NelderMead::new(lower.clone(), upper.clone(), res.clone(), start, cfg.clone())
            };
            let mut nm = restart(&mut rng)?;
            while runner.remaining() > 0 {
                let c = space.from_reals(&nm.ask());
                let score = runner.trial(c, phase)?.score;
                nm.tell(score)?;
                if nm.is_converged() {
                    nm = restart(&mut rng)?;
                }
            }
        }
        Strategy::Pso => {
            let mut rng = stream(config.seed, STRATEGY_STREAM);
            let (lower, upper) = bounds(space);
            let mut swarm = ParticleSwarm::new(lower, upper, config.settings.pso.clone(), &mut rng)?;
            let mut batch: Vec<Candidate> =
                swarm.positions().iter().map(|x| space.from_reals(x)).collect();
            loop {
                let mut scores = Vec::with_capacity(batch.len());
                for c in batch {
                    if runner.remaining() == 0 {
                        break;
                    }
                    scores.push(runner.trial(c, phase)?.score);
                }
                swarm.tell(&scores)?;
                if runner.remaining() == 0 {
                    break;
                }
                batch = pso_step(&mut swarm, space, &mut rng)?;
            }
        }
    }
    Ok(finish(runner, header))
}

/// Runs `config.strategy` on `objective`.
pub fn run<O: Objective + ?Sized>(
    space: &SearchSpace,
    objective: &mut O,
    config: &RunConfig,
) -> Result<RunOutcome, EngineError> {
    match config.strategy {
        Strategy::Wrs => run_wrs(space, objective, config),
        _ => run_baseline(space, objective, config),
    }
}
