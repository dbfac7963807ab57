use rand_distr::{Distribution, StandardNormal};

use crate::math::sqrt;
use crate::rng::Rng;

/// Ornstein-Uhlenbeck exploration noise reverting to zero.
#[derive(Debug, Clone)]
pub struct OuProcess {
    pub theta: f64,
    pub sigma: f64,
    x: f64,
    rng: Rng,
}

impl OuProcess {
    pub fn new(theta: f64, sigma: f64, rng: Rng) -> Self {
        Self { theta, sigma, x: 0.0, rng }
    }

    pub fn value(&self) -> f64 {
        self.x
    }

    pub fn set(&mut self, x: f64) {
        self.x = x;
    }

    pub fn reset(&mut self) {
        self.x = 0.0;
    }

    pub fn sample(&mut self, dt: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.x += -self.theta * self.x * dt + self.sigma * sqrt(dt) * z;
        self.x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn noiseless_process_decays() {
        let mut p = OuProcess::new(0.15, 0.0, stream(0, 4));
        p.set(1.0);
        assert!((p.sample(1.0) - 0.85).abs() < 1e-15);
        p.reset();
        for _ in 0..10 {
            assert_eq!(p.sample(1.0), 0.0);
        }
    }

    #[test]
    fn seeded_sequence_repeats() {
        let run = || {
            let mut p = OuProcess::new(0.15, 0.5, stream(9, 4));
            (0..20).map(|_| p.sample(1.0)).collect::<alloc::vec::Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
