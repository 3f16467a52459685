use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial multiplier applied to each draw's deviation from its component mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// Scale by an independent `chi2(3) / 3` draw (mean 1, second moment 5/3).
    #[default]
    ChiSquare3,
    /// No multiplier: plain Gaussian mixture.
    Gaussian,
}

/// One mixture component: mean and a factor `L` with covariance `L L^T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    /// `assets` rows, each with the same number of factor loadings (possibly zero).
    pub factor: Vec<Vec<f64>>,
}

fn default_mixtures() -> usize {
    20
}

fn default_ridge() -> f64 {
    0.01
}

/// Heavy-tailed Gaussian-mixture market. When `components` is empty they are
/// generated from `seed`: means i.i.d. `N(0, 1)`, factor entries i.i.d.
/// `N(0, 1/K)`, so each covariance is `L L^T + ridge * I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub assets: usize,
    #[serde(default = "default_mixtures")]
    pub mixtures: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tail: TailKind,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<MixtureComponent>,
}

impl MarketSpec {
    pub fn generated(assets: usize, mixtures: usize, seed: u64) -> Self {
        Self {
            assets,
            mixtures,
            seed,
            tail: TailKind::ChiSquare3,
            ridge: default_ridge(),
            components: Vec::new(),
        }
    }

    /// Fills in generated components (if absent) and validates shapes.
    pub fn resolve(&self) -> Result<MarketSpec> {
        let mut spec = self.clone();
        if spec.assets == 0 {
            return Err(Error::Config("market needs at least one asset".into()));
        }
        if !(spec.ridge >= 0.0 && spec.ridge.is_finite()) {
            return Err(Error::Config(format!(
                "ridge must be >= 0, got {}",
                spec.ridge
            )));
        }
        if spec.components.is_empty() {
            if spec.mixtures == 0 {
                return Err(Error::Config(
                    "market needs at least one mixture component".into(),
                ));
            }
            let k = spec.assets;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let scale = 1.0 / (k as f64).sqrt();
            spec.components = (0..spec.mixtures)
                .map(|_| {
                    let mean = (0..k)
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    let factor = (0..k)
                        .map(|_| {
                            (0..k)
                                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                                .collect()
                        })
                        .collect();
                    MixtureComponent { mean, factor }
                })
                .collect();
        }
        spec.mixtures = spec.components.len();
        for (c, comp) in spec.components.iter().enumerate() {
            if comp.mean.len() != spec.assets || comp.factor.len() != spec.assets {
                return Err(Error::Config(format!(
                    "component {c}: mean and factor need {} rows",
                    spec.assets
                )));
            }
            let width = comp.factor[0].len();
            if comp.factor.iter().any(|row| row.len() != width) {
                return Err(Error::Config(format!(
                    "component {c}: ragged factor matrix"
                )));
            }
            let finite = comp
                .mean
                .iter()
                .chain(comp.factor.iter().flatten())
                .all(|v| v.is_finite());
            if !finite {
                return Err(Error::Config(format!("component {c}: non-finite entry")));
            }
        }
        Ok(spec)
    }
}

/// A resolved market ready for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    spec: MarketSpec,
    ridge_std: f64,
}

impl Market {
    pub fn new(spec: &MarketSpec) -> Result<Self> {
        let spec = spec.resolve()?;
        let ridge_std = spec.ridge.sqrt();
        Ok(Self { spec, ridge_std })
    }

    /// `K = means.len()` independent Gaussian assets, no tail multiplier.
    pub fn gaussian(means: Vec<f64>, stds: Vec<f64>) -> Self {
        let k = means.len();
        let factor = (0..k)
            .map(|i| {
                let mut row = vec![0.0; k];
                row[i] = stds[i];
                row
            })
            .collect();
        let spec = MarketSpec {
            assets: k,
            mixtures: 1,
            seed: 0,
            tail: TailKind::Gaussian,
            ridge: 0.0,
            components: vec![MixtureComponent {
                mean: means,
                factor,
            }],
        };
        Self::new(&spec).expect("valid gaussian market")
    }

    pub fn spec(&self) -> &MarketSpec {
        &self.spec
    }

    pub fn assets(&self) -> usize {
        self.spec.assets
    }

    /// One return vector: pick a component uniformly, draw its Gaussian, then
    /// scale the deviation from the component mean by the tail multiplier.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let comp = &self.spec.components[rng.random_range(0..self.spec.components.len())];
        let k = self.spec.assets;
        let width = comp.factor[0].len();
        let g: Vec<f64> = (0..width).map(|_| rng.sample(StandardNormal)).collect();
        let mut dev: Vec<f64> = comp
            .factor
            .iter()
            .map(|row| row.iter().zip(&g).map(|(l, z)| l * z).sum())
            .collect();
        if self.ridge_std > 0.0 {
            for d in dev.iter_mut().take(k) {
                *d += self.ridge_std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let scale = match self.spec.tail {
            TailKind::ChiSquare3 => tail_multiplier(rng),
            TailKind::Gaussian => 1.0,
        };
        comp.mean
            .iter()
            .zip(&dev)
            .map(|(m, d)| m + scale * d)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.sample_row(rng)).collect()
    }
}

/// `chi2(3) / 3`.
pub fn tail_multiplier<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let chi = ChiSquared::new(3.0).expect("valid degrees of freedom");
    chi.sample(rng) / 3.0
}
