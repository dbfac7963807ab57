//! Run configuration read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mg_dispatch_core::baselines::{ForecastConfig, SmoothingConfig};
use mg_dispatch_core::drl::{Learner, NetShape, Observability, TrainConfig};
use mg_dispatch_core::profile::{InitialSoc, ProfileShape};
use mg_dispatch_core::MicrogridConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io, Error, Result};

/// The four evaluation settings: observability crossed with where the
/// training days come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    /// Full state, train and test on the same day.
    I,
    /// Lagged observations, same day.
    II,
    /// Full state, train on past days, test on a held-out day.
    III,
    /// Lagged observations, past days.
    IV,
}

impl Case {
    pub fn observability(self) -> Observability {
        match self {
            Case::I | Case::III => Observability::Full,
            Case::II | Case::IV => Observability::Partial,
        }
    }

    pub fn same_day(self) -> bool {
        matches!(self, Case::I | Case::II)
    }

    pub fn default_algorithms(self) -> Vec<Algorithm> {
        use Algorithm::*;
        match self.observability() {
            Observability::Full => vec![FhDdpg, Ddpg, Myopic, Ilqg, MpcIlqg],
            Observability::Partial => vec![FhRdpg, Rdpg, MyopicPomdp, IlqgPomdp, MpcIlqgPomdp],
        }
    }
}

impl std::str::FromStr for Case {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Case::I),
            "II" | "2" => Ok(Case::II),
            "III" | "3" => Ok(Case::III),
            "IV" | "4" => Ok(Case::IV),
            _ => Err(format!("unknown case `{s}` (expected I, II, III or IV)")),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Every dispatch policy the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    FhDdpg,
    Ddpg,
    FhRdpg,
    Rdpg,
    Myopic,
    MyopicPomdp,
    Ilqg,
    IlqgPomdp,
    MpcIlqg,
    MpcIlqgPomdp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::FhDdpg,
        Algorithm::Ddpg,
        Algorithm::FhRdpg,
        Algorithm::Rdpg,
        Algorithm::Myopic,
        Algorithm::MyopicPomdp,
        Algorithm::Ilqg,
        Algorithm::IlqgPomdp,
        Algorithm::MpcIlqg,
        Algorithm::MpcIlqgPomdp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FhDdpg => "fh-ddpg",
            Algorithm::Ddpg => "ddpg",
            Algorithm::FhRdpg => "fh-rdpg",
            Algorithm::Rdpg => "rdpg",
            Algorithm::Myopic => "myopic",
            Algorithm::MyopicPomdp => "myopic-pomdp",
            Algorithm::Ilqg => "ilqg",
            Algorithm::IlqgPomdp => "ilqg-pomdp",
            Algorithm::MpcIlqg => "mpc-ilqg",
            Algorithm::MpcIlqgPomdp => "mpc-ilqg-pomdp",
        }
    }

    pub fn learner(self) -> Option<Learner> {
        match self {
            Algorithm::FhDdpg => Some(Learner::FhDdpg),
            Algorithm::Ddpg => Some(Learner::Ddpg),
            Algorithm::FhRdpg => Some(Learner::FhRdpg),
            Algorithm::Rdpg => Some(Learner::Rdpg),
            _ => None,
        }
    }

    pub fn observability(self) -> Observability {
        match self {
            Algorithm::FhDdpg | Algorithm::Ddpg | Algorithm::Myopic | Algorithm::Ilqg | Algorithm::MpcIlqg => {
                Observability::Full
            }
            _ => Observability::Partial,
        }
    }

    /// Whether two runs with different seeds can differ.
    pub fn seeded(self) -> bool {
        self.learner().is_some() || matches!(self, Algorithm::MpcIlqg | Algorithm::MpcIlqgPomdp)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let k = s.trim().to_ascii_lowercase();
        Algorithm::ALL.into_iter().find(|a| a.name() == k).ok_or_else(|| {
            let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
            format!("unknown algorithm `{s}` (expected one of {})", names.join(", "))
        })
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Base hyper-parameter set for the learners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Smaller networks and fewer episodes, a few minutes per run on one core.
    #[default]
    Desk,
    /// The published network sizes and rates.
    Published,
}

/// Field-by-field overrides of a preset [`TrainConfig`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub actor: Option<NetShape>,
    pub critic: Option<NetShape>,
    pub actor_lr: Option<f64>,
    pub critic_lr: Option<f64>,
    pub batch: Option<usize>,
    pub buffer: Option<usize>,
    pub warmup: Option<usize>,
    pub episodes: Option<usize>,
    pub reward_scale: Option<f64>,
    pub soft_update: Option<f64>,
    pub ou_theta: Option<f64>,
    pub ou_sigma: Option<f64>,
    pub eval_period: Option<usize>,
    pub curve_episodes: Option<usize>,
    pub train_soc: Option<InitialSoc>,
    pub lr_floor: Option<f64>,
}

impl TrainOverrides {
    pub fn apply(&self, c: &mut TrainConfig) {
        macro_rules! take {
            ($($f:ident),*) => {$(if let Some(v) = &self.$f { c.$f = v.clone(); })*};
        }
        take!(
            actor,
            critic,
            actor_lr,
            critic_lr,
            batch,
            buffer,
            warmup,
            episodes,
            reward_scale,
            soft_update,
            ou_theta,
            ou_sigma,
            eval_period,
            curve_episodes,
            train_soc,
            lr_floor
        );
    }
}

/// Where the exogenous data comes from. Without `csv` a synthetic series is
/// generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub csv: Option<PathBuf>,
    /// First timestamp of the test day; defaults to the last whole day.
    pub test_day: Option<String>,
    /// Days before the test day used for training in cases III and IV.
    pub train_days: usize,
    /// Days before the test day the forecaster learns from.
    pub forecast_days: usize,
    pub synth_seed: u64,
    /// Timestamp of the first synthetic record.
    pub synth_start: String,
    pub shape: ProfileShape,
    /// Replace `grid.bounds` by the range of the data the case can see.
    pub bounds_from_data: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            csv: None,
            test_day: None,
            train_days: 7,
            forecast_days: 14,
            synth_seed: 1,
            synth_start: "2017-07-01T00:00:00".into(),
            shape: ProfileShape::default(),
            bounds_from_data: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Noise-free test episodes per run.
    pub episodes: usize,
    /// Seed of the initial charges, shared by every algorithm and run.
    pub seed: u64,
    pub initial_soc: InitialSoc,
    /// Initial charge of the exported showcase trace.
    pub trace_soc: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 100, seed: 12345, initial_soc: InitialSoc::Uniform, trace_soc: 500.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Values of k2 / k1. k1 stays at its configured value and k2 is set to
    /// `ratio * k1`.
    pub ratios: Vec<f64>,
    pub algorithm: Algorithm,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { ratios: vec![1e1, 1e2, 1e3, 1e4, 1e5], algorithm: Algorithm::FhDdpg }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub case: Case,
    /// Empty means every algorithm that fits the case.
    pub algorithms: Vec<Algorithm>,
    pub seeds: Vec<u64>,
    pub preset: Preset,
    pub grid: MicrogridConfig,
    pub data: DataConfig,
    pub eval: EvalConfig,
    pub train: BTreeMap<Learner, TrainOverrides>,
    pub planner: SmoothingConfig,
    pub forecast: ForecastConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: Case::I,
            algorithms: Vec::new(),
            seeds: vec![1, 2, 3, 4, 5],
            preset: Preset::Desk,
            grid: MicrogridConfig::default(),
            data: DataConfig::default(),
            eval: EvalConfig::default(),
            train: BTreeMap::new(),
            planner: SmoothingConfig::default(),
            forecast: ForecastConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io(path))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Algorithms to run, in a fixed order.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        if self.algorithms.is_empty() {
            self.case.default_algorithms()
        } else {
            self.algorithms.clone()
        }
    }

    pub fn train_config(&self, learner: Learner) -> TrainConfig {
        let mut c = match self.preset {
            Preset::Desk => TrainConfig::desk(learner),
            Preset::Published => TrainConfig::published(learner),
        };
        if let Some(o) = self.train.get(&learner) {
            o.apply(&mut c);
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.planner.validate()?;
        self.forecast.validate()?;
        self.eval.initial_soc.validate(&self.grid.battery)?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.eval.episodes == 0 {
            return Err(Error::Config("eval.episodes must be at least 1".into()));
        }
        if !(self.eval.trace_soc >= self.grid.battery.e_min && self.eval.trace_soc <= self.grid.battery.e_max) {
            return Err(Error::Config("eval.trace_soc outside the battery range".into()));
        }
        if !self.case.same_day() && self.data.train_days == 0 {
            return Err(Error::Config(format!("case {} needs data.train_days >= 1", self.case)));
        }
        let mut seen = Vec::new();
        for a in self.algorithms() {
            if a.observability() != self.case.observability() {
                return Err(Error::Config(format!(
                    "algorithm {a} does not fit case {} ({:?} observability)",
                    self.case,
                    self.case.observability()
                )));
            }
            if seen.contains(&a) {
                return Err(Error::Config(format!("algorithm {a} listed twice")));
            }
            seen.push(a);
            if let Some(l) = a.learner() {
                self.train_config(l).validate()?;
            }
        }
        if self.sweep.ratios.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Config("sweep ratios must be positive".into()));
        }
        Ok(())
    }

    /// Canonical JSON of the whole configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialises")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
