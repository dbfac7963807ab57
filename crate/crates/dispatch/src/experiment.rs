//! Training, noise-free evaluation and reporting of one configuration.

use std::path::Path;

use mg_dispatch_core::baselines::{
    forecaster_train, ilqg_plan, ForecastReport, Forecaster, IlqgController, MpcController, MyopicController,
};
use mg_dispatch_core::drl::{run_episode, train, Controller, EpisodeTrace, Observability, TrainOutput};
use mg_dispatch_core::profile::{DayProfile, EpisodeSource};
use mg_dispatch_core::rng::{stream, TAG_EVAL};
use mg_dispatch_core::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::config::{Algorithm, Case, RunConfig};
use crate::dataset::Dataset;
use crate::error::{io, Error, Result};
use crate::trace::{save_curve, save_trace};

/// Everything shared by the runs of one configuration.
pub struct Prepared {
    /// The configuration with data-derived input bounds filled in.
    pub cfg: RunConfig,
    pub dataset: Dataset,
    pub source: EpisodeSource,
    pub test_day: DayProfile,
    /// Initial charges of the evaluation episodes, identical for every
    /// algorithm and seed.
    pub eval_socs: Vec<f64>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    let dataset = Dataset::build(&cfg)?;
    let source = dataset.source(cfg.case, cfg.data.train_days, cfg.eval.initial_soc)?;
    if cfg.data.bounds_from_data {
        cfg.grid.bounds = dataset.bounds(&source);
    }
    let test_day = dataset.test_day()?;
    let mut rng = stream(cfg.eval.seed, TAG_EVAL);
    let eval_socs = (0..cfg.eval.episodes)
        .map(|_| cfg.eval.initial_soc.sample(&cfg.grid.battery, &mut rng))
        .collect::<mg_dispatch_core::Result<Vec<_>>>()?;
    Ok(Prepared { cfg, dataset, source, test_day, eval_socs })
}

/// Per-episode results of a noise-free evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    pub c_dg: Vec<f64>,
    pub c_us: Vec<f64>,
}

impl Evaluation {
    pub fn mean_return(&self) -> f64 {
        stats::mean(&self.returns)
    }
}

pub fn evaluate(ctrl: &mut dyn Controller, prep: &Prepared) -> Result<Evaluation> {
    let mut ev = Evaluation::default();
    for &soc in &prep.eval_socs {
        let tr = run_episode(ctrl, &prep.test_day, soc, &prep.cfg.grid)?;
        ev.returns.push(tr.ret);
        ev.c_dg.push(tr.total_c_dg());
        ev.c_us.push(tr.total_c_us());
    }
    Ok(ev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Mean noise-free return over the evaluation episodes.
    pub mean_return: Option<f64>,
    /// Mean day-total generation cost ($).
    pub mean_c_dg: Option<f64>,
    /// Mean day-total unbalance (kWh).
    pub mean_c_us: Option<f64>,
    pub failed: bool,
    pub error: Option<String>,
    pub forecast: Option<ForecastReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoSummary {
    pub algorithm: Algorithm,
    pub runs: Vec<RunRecord>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    /// Sample standard deviation of the per-run means.
    pub std_error: Option<f64>,
    pub mean_c_dg: Option<f64>,
    pub mean_c_us: Option<f64>,
    pub failed_runs: usize,
}

impl AlgoSummary {
    pub fn from_runs(algorithm: Algorithm, runs: Vec<RunRecord>) -> Self {
        let ok: Vec<&RunRecord> = runs.iter().filter(|r| !r.failed).collect();
        let pick = |f: fn(&RunRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
        let rets = pick(|r| r.mean_return);
        let some = |v: f64| v.is_finite().then_some(v);
        let (max, mean, std_error) = if rets.is_empty() {
            (None, None, None)
        } else {
            let std = if rets.len() > 1 { some(stats::sample_std(&rets)) } else { Some(0.0) };
            (some(stats::max(&rets)), some(stats::mean(&rets)), std)
        };
        let avg = |v: Vec<f64>| if v.is_empty() { None } else { some(stats::mean(&v)) };
        Self {
            algorithm,
            failed_runs: runs.len() - ok.len(),
            max,
            mean,
            std_error,
            mean_c_dg: avg(pick(|r| r.mean_c_dg)),
            mean_c_us: avg(pick(|r| r.mean_c_us)),
            runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config_hash: String,
    pub case: Case,
    pub eval_episodes: usize,
    pub algorithms: Vec<AlgoSummary>,
}

impl MetricsReport {
    pub fn get(&self, a: Algorithm) -> Option<&AlgoSummary> {
        self.algorithms.iter().find(|s| s.algorithm == a)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Result of one (algorithm, seed) job, kept in memory for artifacts.
pub struct RunOutput {
    pub algorithm: Algorithm,
    pub record: RunRecord,
    pub trained: Option<TrainOutput>,
    pub evaluation: Option<Evaluation>,
    /// Episode from the configured showcase charge.
    pub showcase: Option<EpisodeTrace>,
}

fn forecaster(prep: &Prepared, seed: u64) -> Result<(Forecaster, ForecastReport)> {
    let c = &prep.cfg;
    let hist = prep.dataset.history(c.data.forecast_days);
    Ok(forecaster_train(hist, c.grid.horizon.t_steps, c.grid.bounds, &c.forecast, seed)?)
}

/// A controller for `algo`, training it first when it learns.
pub fn build_controller<'a>(
    prep: &'a Prepared,
    algo: Algorithm,
    seed: u64,
    trained: Option<&'a TrainOutput>,
) -> Result<(Box<dyn Controller + 'a>, Option<ForecastReport>)> {
    let c = &prep.cfg;
    let grid = c.grid;
    let obs = algo.observability();
    Ok(match algo {
        Algorithm::FhDdpg | Algorithm::Ddpg | Algorithm::FhRdpg | Algorithm::Rdpg => {
            let t = trained.ok_or_else(|| Error::Config(format!("{algo} needs a trained bundle")))?;
            (Box::new(t.bundle.controller()), None)
        }
        Algorithm::Myopic | Algorithm::MyopicPomdp => (Box::new(MyopicController { cfg: grid, observability: obs }), None),
        Algorithm::Ilqg => (Box::new(IlqgController::full(&prep.test_day, grid, c.planner)), None),
        Algorithm::IlqgPomdp => (Box::new(IlqgController::lagged(&prep.test_day, grid, c.planner)), None),
        Algorithm::MpcIlqg | Algorithm::MpcIlqgPomdp => {
            let (f, report) = forecaster(prep, seed)?;
            let past = prep.dataset.past().to_vec();
            (Box::new(MpcController::new(f, past, grid, c.planner, obs)), Some(report))
        }
    })
}

/// Trains (when needed) and evaluates one algorithm with one seed. Training
/// divergence is recorded as a failed run; other errors propagate.
pub fn run_one(prep: &Prepared, algo: Algorithm, seed: u64) -> Result<RunOutput> {
    let trained = match algo.learner() {
        Some(l) => match train(l, &prep.source, &prep.cfg.grid, &prep.cfg.train_config(l), seed) {
            Ok(t) => Some(t),
            Err(e @ mg_dispatch_core::Error::Diverged { .. }) => {
                let record = RunRecord {
                    seed,
                    mean_return: None,
                    mean_c_dg: None,
                    mean_c_us: None,
                    failed: true,
                    error: Some(e.to_string()),
                    forecast: None,
                };
                return Ok(RunOutput { algorithm: algo, record, trained: None, evaluation: None, showcase: None });
            }
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    let (mut ctrl, forecast) = build_controller(prep, algo, seed, trained.as_ref())?;
    let ev = evaluate(ctrl.as_mut(), prep)?;
    let showcase = run_episode(ctrl.as_mut(), &prep.test_day, prep.cfg.eval.trace_soc, &prep.cfg.grid)?;
    drop(ctrl);
    let record = RunRecord {
        seed,
        mean_return: Some(ev.mean_return()),
        mean_c_dg: Some(stats::mean(&ev.c_dg)),
        mean_c_us: Some(stats::mean(&ev.c_us)),
        failed: false,
        error: None,
        forecast,
    };
    Ok(RunOutput { algorithm: algo, record, trained, evaluation: Some(ev), showcase: Some(showcase) })
}

/// Worker count from `MG_DISPATCH_THREADS`, or the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var("MG_DISPATCH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every job on a pool of [`thread_count`] workers; results keep the
/// job order.
pub fn run_jobs(prep: &Prepared, jobs: &[(Algorithm, u64)]) -> Result<Vec<RunOutput>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(|&(a, s)| run_one(prep, a, s)).collect())
}

/// Runs the configured algorithms over all seeds. Deterministic policies are
/// evaluated once and their record repeated for every seed.
pub fn run_experiment(cfg: &RunConfig) -> Result<(MetricsReport, Vec<RunOutput>, Prepared)> {
    let prep = prepare(cfg)?;
    let algos = prep.cfg.algorithms();
    let mut jobs = Vec::new();
    for &a in &algos {
        if a.seeded() {
            jobs.extend(prep.cfg.seeds.iter().map(|&s| (a, s)));
        } else {
            jobs.push((a, prep.cfg.seeds[0]));
        }
    }
    let outputs = run_jobs(&prep, &jobs)?;
    let mut summaries = Vec::new();
    for &a in &algos {
        let runs: Vec<RunRecord> = if a.seeded() {
            outputs.iter().filter(|o| o.algorithm == a).map(|o| o.record.clone()).collect()
        } else {
            let base = &outputs.iter().find(|o| o.algorithm == a).expect("job ran").record;
            prep.cfg.seeds.iter().map(|&seed| RunRecord { seed, ..base.clone() }).collect()
        };
        summaries.push(AlgoSummary::from_runs(a, runs));
    }
    let report = MetricsReport {
        config_hash: cfg.hash(),
        case: prep.cfg.case,
        eval_episodes: prep.cfg.eval.episodes,
        algorithms: summaries,
    };
    Ok((report, outputs, prep))
}

pub fn run_tag(algo: Algorithm, seed: u64) -> String {
    if algo.seeded() {
        format!("{}_seed{seed}", algo.name())
    } else {
        algo.name().to_string()
    }
}

/// Writes `report.json`, curves, traces, checkpoints and planner diagnostics.
pub fn write_artifacts(dir: &Path, report: &MetricsReport, outputs: &[RunOutput], prep: &Prepared) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join("report.json");
    std::fs::write(&path, report.to_json()).map_err(io(&path))?;
    let hash = &report.config_hash;
    for o in outputs {
        let tag = run_tag(o.algorithm, o.record.seed);
        if let Some(t) = &o.trained {
            save_curve(&dir.join(format!("curve_{tag}.csv")), &t.curve)?;
            let ck = dir.join("checkpoints").join(&tag);
            checkpoint::save(&ck, o.algorithm, o.record.seed, hash, &t.bundle, Some(&t.critics))?;
        }
        if let Some(s) = &o.showcase {
            save_trace(&dir.join(format!("trace_{tag}.csv")), s)?;
        }
        if matches!(o.algorithm, Algorithm::Ilqg | Algorithm::IlqgPomdp) {
            write_planner_records(dir, o.algorithm, prep)?;
        }
    }
    Ok(())
}

/// Iteration records of the planner from the showcase charge.
fn write_planner_records(dir: &Path, algo: Algorithm, prep: &Prepared) -> Result<()> {
    let c = &prep.cfg;
    let exo = if algo.observability() == Observability::Full {
        prep.test_day.day().to_vec()
    } else {
        prep.test_day.lagged_day()
    };
    let plan = ilqg_plan(c.eval.trace_soc, &exo, &c.grid, &c.planner)?;
    let path = dir.join(format!("planner_{}.csv", algo.name()));
    let f = std::fs::File::create(&path).map_err(io(&path))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let mut go = || -> csv::Result<()> {
        w.write_record(["stage", "iter", "cost", "mu", "alpha"])?;
        for r in &plan.records {
            w.write_record([r.stage.to_string(), r.iter.to_string(), r.cost.to_string(), r.mu.to_string(), r.alpha.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    go().map_err(|e| Error::Io { path: path.clone(), source: e.into() })
}
