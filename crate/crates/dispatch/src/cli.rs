//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mg_dispatch_core::drl::{run_episode, Controller};
use mg_dispatch_core::stats;

use crate::calibration::{correlation, qvalue_calibration, save_calibration};
use crate::checkpoint;
use crate::config::{Algorithm, Case, RunConfig};
use crate::error::{io, Error, Result};
use crate::experiment::{
    build_controller, evaluate, prepare, run_experiment, run_one, write_artifacts, AlgoSummary, MetricsReport,
    RunRecord,
};
use crate::series::{parse_timestamp, ExogenousSeries};
use crate::sweep::sweep_k_ratio;
use crate::trace::save_trace;

#[derive(Debug, Parser)]
#[command(name = "mg-dispatch", version, about = "Isolated-microgrid energy dispatch experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replace the configured seed list by this single seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Case I, II, III or IV.
    #[arg(long)]
    pub case: Option<Case>,
    /// Run only this algorithm.
    #[arg(long)]
    pub algo: Option<Algorithm>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and evaluate, writing report, curves, traces and checkpoints.
    Train(Common),
    /// Evaluate a saved checkpoint on the configured test day.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint directory written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Export one episode trace from a checkpoint or a non-learning policy.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Checkpoint directory written by `train`.
        #[arg(long, conflicts_with = "algo")]
        checkpoint: Option<PathBuf>,
        /// Initial battery charge in kWh (defaults to eval.trace_soc).
        #[arg(long)]
        soc: Option<f64>,
    },
    /// Re-run one algorithm for each configured k2/k1 ratio.
    Sweep(Common),
    /// Compare critic estimates with realised returns-to-go.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint directory written by `train`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Write a synthetic load/PV series as CSV.
    SynthData {
        /// Run configuration supplying the start time, step length and curve shape.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Whole days to generate.
        #[arg(long, default_value_t = 21)]
        days: usize,
        /// Output CSV file.
        #[arg(long, default_value = "synth.csv")]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = load_config(self.config.as_deref())?;
        if let Some(case) = self.case {
            c.case = case;
            if self.algo.is_none() {
                c.algorithms.retain(|a| a.observability() == case.observability());
            }
        }
        if let Some(s) = self.seed {
            c.seeds = vec![s];
        }
        if let Some(a) = self.algo {
            c.algorithms = vec![a];
            c.sweep.algorithm = a;
        }
        Ok(c)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io(parent))?;
    }
    std::fs::write(path, text).map_err(io(path))
}

fn summary_line(s: &AlgoSummary) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"));
    format!(
        "{:<15} mean {:>11} max {:>11} std {:>9} C_DG {:>11} C_US {:>9} failed {}",
        s.algorithm.name(),
        f(s.mean),
        f(s.max),
        f(s.std_error),
        f(s.mean_c_dg),
        f(s.mean_c_us),
        s.failed_runs
    )
}

fn cmd_train(common: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = common.resolve()?;
    let (report, outputs, prep) = run_experiment(&cfg)?;
    write_artifacts(&common.out, &report, &outputs, &prep)?;
    for s in &report.algorithms {
        let _ = writeln!(out, "{}", summary_line(s));
    }
    let _ = writeln!(out, "wrote {}", common.out.join("report.json").display());
    Ok(())
}

fn cmd_evaluate(common: &Common, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let cfg = common.resolve()?;
    let ck = checkpoint::load(dir)?;
    let prep = prepare(&cfg)?;
    let mut ctrl = ck.bundle.controller();
    let ev = evaluate(&mut ctrl, &prep)?;
    let record = RunRecord {
        seed: ck.manifest.seed,
        mean_return: Some(ev.mean_return()),
        mean_c_dg: Some(stats::mean(&ev.c_dg)),
        mean_c_us: Some(stats::mean(&ev.c_us)),
        failed: false,
        error: None,
        forecast: None,
    };
    let report = MetricsReport {
        config_hash: cfg.hash(),
        case: cfg.case,
        eval_episodes: cfg.eval.episodes,
        algorithms: vec![AlgoSummary::from_runs(ck.manifest.algorithm, vec![record])],
    };
    write_text(&common.out.join("report.json"), &report.to_json())?;
    let _ = writeln!(out, "{}", summary_line(&report.algorithms[0]));
    Ok(())
}

fn cmd_trace(common: &Common, dir: Option<&Path>, soc: Option<f64>, out: &mut dyn Write) -> Result<()> {
    let cfg = common.resolve()?;
    let prep = prepare(&cfg)?;
    let soc = soc.unwrap_or(prep.cfg.eval.trace_soc);
    let (trace, name) = match dir {
        Some(d) => {
            let ck = checkpoint::load(d)?;
            let t = run_episode(&mut ck.bundle.controller(), &prep.test_day, soc, &ck.bundle.grid)?;
            (t, ck.manifest.algorithm.name().to_string())
        }
        None => {
            let algo = common.algo.ok_or_else(|| Error::Config("trace needs --checkpoint or --algo".into()))?;
            if let Some(l) = algo.learner() {
                // Learners need training first; run a single seed.
                let seed = prep.cfg.seeds[0];
                let o = run_one(&prep, algo, seed)?;
                let t = o.trained.as_ref().ok_or_else(|| {
                    Error::Config(format!("{l:?} training failed: {}", o.record.error.clone().unwrap_or_default()))
                })?;
                let tr = run_episode(&mut t.bundle.controller(), &prep.test_day, soc, &prep.cfg.grid)?;
                (tr, format!("{}_seed{seed}", algo.name()))
            } else {
                let (mut ctrl, _) = build_controller(&prep, algo, prep.cfg.seeds[0], None)?;
                let ctrl: &mut dyn Controller = ctrl.as_mut();
                (run_episode(ctrl, &prep.test_day, soc, &prep.cfg.grid)?, algo.name().to_string())
            }
        }
    };
    std::fs::create_dir_all(&common.out).map_err(io(&common.out))?;
    let path = common.out.join(format!("trace_{name}.csv"));
    save_trace(&path, &trace)?;
    let _ = writeln!(out, "return {:.4}; wrote {}", trace.ret, path.display());
    Ok(())
}

fn cmd_sweep(common: &Common, out: &mut dyn Write) -> Result<()> {
    let cfg = common.resolve()?;
    let points = sweep_k_ratio(&cfg, Some(&common.out))?;
    for p in &points {
        let _ = writeln!(out, "ratio {:>8.0e}  {}", p.ratio, summary_line(&p.summary));
    }
    Ok(())
}

fn cmd_calibrate(common: &Common, dir: &Path, out: &mut dyn Write) -> Result<()> {
    let cfg = common.resolve()?;
    let ck = checkpoint::load(dir)?;
    let critics = ck
        .critics
        .as_ref()
        .ok_or_else(|| Error::Checkpoint { path: dir.to_path_buf(), detail: "no critics stored".into() })?;
    let prep = prepare(&cfg)?;
    let points = qvalue_calibration(&ck.bundle, critics, &prep.test_day, &prep.eval_socs, &ck.bundle.grid)?;
    std::fs::create_dir_all(&common.out).map_err(io(&common.out))?;
    let path = common.out.join("calibration.csv");
    save_calibration(&path, &points)?;
    let _ = writeln!(out, "{} points, correlation {:.4}; wrote {}", points.len(), correlation(&points), path.display());
    Ok(())
}

fn cmd_synth(config: Option<&Path>, seed: u64, days: usize, path: &Path, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(config)?;
    if days == 0 {
        return Err(Error::Config("--days must be at least 1".into()));
    }
    let start = parse_timestamp(&cfg.data.synth_start)
        .ok_or_else(|| Error::Config(format!("bad data.synth_start `{}`", cfg.data.synth_start)))?;
    let series = ExogenousSeries::synthetic(seed, days, start, cfg.grid.horizon.delta_t, &cfg.data.shape)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io(parent))?;
    }
    series.save(path)?;
    let _ = writeln!(out, "wrote {} rows to {}", series.len(), path.display());
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Train(c) => cmd_train(c, out),
        Command::Evaluate { common, checkpoint } => cmd_evaluate(common, checkpoint, out),
        Command::Trace { common, checkpoint, soc } => cmd_trace(common, checkpoint.as_deref(), *soc, out),
        Command::Sweep(c) => cmd_sweep(c, out),
        Command::Calibrate { common, checkpoint } => cmd_calibrate(common, checkpoint, out),
        Command::SynthData { config, seed, days, out: path } => cmd_synth(config.as_deref(), *seed, *days, path, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a failed run, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}
