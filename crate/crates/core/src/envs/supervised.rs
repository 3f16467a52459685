use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::market::tail_multiplier;
use crate::error::{Error, Result};
use crate::models::{Dataset, SupervisedKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Gaussian noise scaled by an independent `chi2(3) / 3` draw.
    HeavyTail,
}

fn default_task() -> SupervisedKind {
    SupervisedKind::LinearRegression
}

fn default_dim() -> usize {
    5
}

fn default_samples() -> usize {
    2000
}

fn default_sigma() -> f64 {
    0.5
}

/// Synthetic regression / classification data. Features are i.i.d. `N(0, 1)`.
/// Regression labels are `theta . f + noise`; classification labels are
/// `1{theta . f + noise > 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisedSpec {
    #[serde(default = "default_task")]
    pub task: SupervisedKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Generated from `seed` when empty.
    #[serde(default)]
    pub true_theta: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SupervisedSpec {
    fn default() -> Self {
        Self {
            task: default_task(),
            dim: default_dim(),
            samples: default_samples(),
            noise: NoiseKind::default(),
            sigma: default_sigma(),
            true_theta: Vec::new(),
            seed: 0,
        }
    }
}

impl SupervisedSpec {
    /// Fills in `true_theta` and validates.
    pub fn resolve(&self) -> Result<SupervisedSpec> {
        let mut spec = self.clone();
        if spec.dim == 0 || spec.samples == 0 {
            return Err(Error::Config("dim and samples must be at least 1".into()));
        }
        if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "sigma must be >= 0, got {}",
                spec.sigma
            )));
        }
        if spec.true_theta.is_empty() {
            // separate stream so the parameter does not shift the feature draws
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(1);
            spec.true_theta = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
        }
        if spec.true_theta.len() != spec.dim {
            return Err(Error::DimensionMismatch {
                expected: spec.dim,
                got: spec.true_theta.len(),
            });
        }
        if let Some(index) = spec.true_theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(spec)
    }

    /// `n` rows drawn from `rng`; the true parameter still comes from `seed`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        let spec = self.resolve()?;
        let d = spec.dim;
        let mut features = Vec::with_capacity(n * d);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let start = features.len();
            features.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let signal: f64 = features[start..]
                .iter()
                .zip(&spec.true_theta)
                .map(|(f, t)| f * t)
                .sum();
            let z: f64 = rng.sample(StandardNormal);
            let noise = match spec.noise {
                NoiseKind::Gaussian => spec.sigma * z,
                NoiseKind::HeavyTail => spec.sigma * z * tail_multiplier(rng),
            };
            let y = signal + noise;
            labels.push(match spec.task {
                SupervisedKind::LinearRegression => y,
                SupervisedKind::LogisticClassification => f64::from(u8::from(y > 0.0)),
            });
        }
        Dataset::new(features, labels, d)
    }

    /// The full dataset of `samples` rows, a pure function of the spec.
    pub fn generate(&self) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.sample(self.samples, &mut rng)
    }
}
