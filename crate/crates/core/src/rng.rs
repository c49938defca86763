//! Deterministic, label-addressed random streams.
//!
//! A stream is keyed by `(seed, label)`. Child streams are derived by
//! extending the label, never by consuming parent state, so any partition of
//! work (per panel, per azimuth block, per sweep cell) sees the same numbers
//! regardless of execution order or worker count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    label: String,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        let label = label.into();
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed,
            label,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Child stream `<label>/<sub>`; independent of how much of `self` was consumed.
    pub fn derive(&self, sub: impl std::fmt::Display) -> Self {
        Self::new(self.seed, format!("{}/{}", self.label, sub))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Zero-mean normal with standard deviation `sigma`, resampled until it
    /// falls within `±limit·sigma`.
    pub fn truncated_normal(&mut self, sigma: f64, limit: f64) -> f64 {
        if sigma == 0.0 {
            return 0.0;
        }
        loop {
            let z = self.standard_normal();
            if z.abs() <= limit {
                return z * sigma;
            }
        }
    }

    pub fn poisson(&mut self, lambda: f64) -> u64 {
        if lambda <= 0.0 || !lambda.is_finite() {
            return 0;
        }
        let dist = Poisson::new(lambda).expect("positive finite lambda");
        let draw: f64 = dist.sample(&mut self.rng);
        draw as u64
    }
}
