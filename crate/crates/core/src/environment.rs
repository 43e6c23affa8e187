//! Online reward sampling.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{ActionVector, InterferenceInstance};
use crate::rng;

/// Draws `Y = X* a + eps` with `eps ~ N(0, noise_std^2 I)`.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: Arc<InterferenceInstance>,
    noise_std: f64,
    rng: ChaCha8Rng,
}

impl Environment {
    pub const DEFAULT_NOISE_STD: f64 = 1.0;

    pub fn new(instance: Arc<InterferenceInstance>, noise_std: f64, seed: u64) -> Self {
        assert!(noise_std >= 0.0 && noise_std.is_finite(), "noise_std must be finite and >= 0");
        Self {
            instance,
            noise_std,
            rng: rng::stream(seed, 0),
        }
    }

    pub fn instance(&self) -> &InterferenceInstance {
        &self.instance
    }

    pub fn shared_instance(&self) -> Arc<InterferenceInstance> {
        Arc::clone(&self.instance)
    }

    pub fn dim(&self) -> usize {
        self.instance.dim()
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    /// Reward vector for one round. Advances the noise stream by `d` draws
    /// even when `noise_std` is zero.
    pub fn step(&mut self, a: &ActionVector) -> Vec<f64> {
        let d = self.dim();
        assert_eq!(a.len(), d, "action dimension mismatch");
        let x = self.instance.effects();
        let signs = a.as_slice();
        let mut y = Vec::with_capacity(d);
        for i in 0..d {
            let mut mean = 0.0;
            for (j, &s) in signs.iter().enumerate() {
                mean += x[(i, j)] * f64::from(s);
            }
            let eps: f64 = self.rng.sample(StandardNormal);
            y.push(mean + self.noise_std * eps);
        }
        y
    }
}

/// `Z = 1^T Y`.
pub fn aggregate(y: &[f64]) -> f64 {
    y.iter().sum()
}
