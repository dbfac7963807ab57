//! Replay memory, exploration noise, policy execution and the four
//! actor-critic learners.

mod agent;
mod buffer;
mod config;
mod encode;
mod noise;
mod policy;
mod train;

pub use buffer::ReplayBuffer;
pub use config::{Learner, NetShape, TrainConfig};
pub use encode::{Encoded, Normalizer};
pub use noise::OuProcess;
pub use policy::{
    run_episode, BundleController, BundleKind, Controller, EpisodeTrace, Observability, PolicyBundle, PolicyInput,
    TraceRow,
};
pub use train::{train, CriticSet, CurvePoint, TrainOutput};

#[cfg(test)]
mod tests;
