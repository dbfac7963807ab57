//! Isolated-microgrid energy dispatch.
//!
//! This crate holds everything that is pure computation: the diesel/PV/battery
//! dynamics and reward, MDP and POMDP input construction, day profiles,
//! small dense and recurrent networks with exact gradients, the stationary and
//! finite-horizon (backward-induction) actor-critic trainers, and the
//! non-learning baselines (myopic, iLQG, receding-horizon iLQG).
//!
//! It is `no_std` with `alloc`. File formats, configuration and the command
//! line live in the `mg-dispatch` companion crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod baselines;
pub mod drl;
mod error;
pub mod grid;
pub mod math;
pub mod nn;
pub mod profile;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{
    Action, BatteryParams, DgParams, ExoBounds, HorizonConfig, MicrogridConfig, Observation, RewardWeights,
    State, StepOutcome,
};
pub use profile::{DayProfile, Exo};
