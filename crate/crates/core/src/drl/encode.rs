use alloc::vec::Vec;

use crate::grid::{BatteryParams, ExoBounds, History, State};
use crate::profile::Exo;

/// Min-max scaling of network inputs to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(deny_unknown_fields))]
pub struct Normalizer {
    pub bounds: ExoBounds,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Normalizer {
    pub fn new(bounds: ExoBounds, bat: &BatteryParams) -> Self {
        Self { bounds, soc_min: bat.e_min, soc_max: bat.e_max }
    }

    pub fn load(&self, v: f64) -> f64 {
        (v - self.bounds.load_min) / (self.bounds.load_max - self.bounds.load_min)
    }

    pub fn pv(&self, v: f64) -> f64 {
        (v - self.bounds.pv_min) / (self.bounds.pv_max - self.bounds.pv_min)
    }

    pub fn soc(&self, v: f64) -> f64 {
        (v - self.soc_min) / (self.soc_max - self.soc_min)
    }

    fn pair(&self, e: Exo) -> [f64; 2] {
        [self.load(e.load), self.pv(e.pv)]
    }

    /// Feed-forward input of a full state.
    pub fn state(&self, s: &State) -> Encoded {
        let mut main = Vec::with_capacity(3);
        main.extend_from_slice(&self.pair(s.exo()));
        main.push(self.soc(s.soc));
        Encoded { main, side: Vec::new() }
    }

    /// Recurrent input of a history: the pairs oldest first as the sequence,
    /// the current charge as a side input.
    pub fn history(&self, h: &History) -> Encoded {
        let mut main = Vec::with_capacity(2 * h.tau());
        for p in h.pairs() {
            main.extend_from_slice(&self.pair(p));
        }
        Encoded { main, side: alloc::vec![self.soc(h.head().soc)] }
    }
}

/// A network-ready policy input: the main input plus features injected
/// after the recurrent layers (empty for feed-forward nets).
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub main: Vec<f64>,
    pub side: Vec<f64>,
}
