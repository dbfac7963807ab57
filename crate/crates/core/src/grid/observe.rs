use alloc::collections::VecDeque;

use crate::profile::Exo;

/// What a partially observing agent sees at the start of a step: the previous
/// step's load and PV, and the current battery charge.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    pub p_load_prev: f64,
    pub p_pv_prev: f64,
    pub soc: f64,
}

impl Observation {
    pub fn lagged(&self) -> Exo {
        Exo { load: self.p_load_prev, pv: self.p_pv_prev }
    }
}

pub fn make_observation(prev_exo: Exo, soc: f64) -> Observation {
    Observation { p_load_prev: prev_exo.load, p_pv_prev: prev_exo.pv, soc }
}

/// Sliding window of `tau` lagged load/PV pairs ending in the current
/// observation. Oldest pair first.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    window: VecDeque<Exo>,
    head: Observation,
}

impl History {
    /// `window` holds the `tau - 1` pairs preceding the head's lagged pair, oldest first.
    pub fn new(window: impl IntoIterator<Item = Exo>, head: Observation) -> Self {
        Self { window: window.into_iter().collect(), head }
    }

    pub fn tau(&self) -> usize {
        self.window.len() + 1
    }

    pub fn head(&self) -> &Observation {
        &self.head
    }

    pub fn window(&self) -> impl Iterator<Item = &Exo> {
        self.window.iter()
    }

    /// All `tau` load/PV pairs, oldest first, the head's pair last.
    pub fn pairs(&self) -> impl Iterator<Item = Exo> + '_ {
        self.window.iter().copied().chain(core::iter::once(self.head.lagged()))
    }

    /// Drops the oldest pair and the current charge, demotes the head's pair
    /// into the window and installs `next` as the head.
    pub fn advance(&self, next: Observation) -> Self {
        let mut window = self.window.clone();
        if !window.is_empty() {
            window.pop_front();
            window.push_back(self.head.lagged());
        }
        Self { window, head: next }
    }
}
