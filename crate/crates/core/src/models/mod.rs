//! Parameterized stochastic outcomes `X_theta` and their gradient payloads.
//!
//! Two transports are supported. Pathwise models expose the realization
//! explicitly so the outcome can be differentiated at a frozen draw; score
//! models (policies) carry `grad log p_theta` of each sampled trajectory.

mod checkpoint;
mod policy;
mod portfolio;
mod supervised;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::Checkpoint;
pub use policy::{sample_trajectories, score_row, EpisodicEnv, TabularPolicy, Trajectory};
pub use portfolio::{softmax, Parameterization, PortfolioModel};
pub use supervised::{Dataset, SupervisedKind, SupervisedModel};

/// Parameter vector of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(index) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(theta))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(p: ParamVector) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    Pathwise,
    Score,
}

/// `N` realizations of `X_theta` with one gradient row per realization.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeBatch {
    values: Vec<f64>,
    grads: Vec<f64>,
    dim: usize,
    mode: GradMode,
}

impl OutcomeBatch {
    /// `grads` is row-major `values.len() x dim`.
    pub fn new(values: Vec<f64>, grads: Vec<f64>, dim: usize, mode: GradMode) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if grads.len() != values.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: values.len() * dim,
                got: grads.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if dim > 0 {
            if let Some(pos) = grads.iter().position(|g| !g.is_finite()) {
                return Err(Error::NonFinite { index: pos / dim });
            }
        }
        Ok(Self {
            values,
            grads,
            dim,
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> GradMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grad(&self, i: usize) -> &[f64] {
        &self.grads[i * self.dim..(i + 1) * self.dim]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// A model whose sampling randomness does not depend on `theta`, so each
/// outcome can be differentiated along a frozen realization.
pub trait PathwiseModel {
    type Realization;

    fn dim(&self) -> usize;

    fn initial_theta(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Self::Realization>;

    fn outcome(&self, theta: &[f64], realization: &Self::Realization) -> f64;

    /// Writes `d x / d theta` at the realization into `out`.
    fn jacobian_row(&self, theta: &[f64], realization: &Self::Realization, out: &mut [f64]);

    /// Maps a raw iterate back onto the feasible set.
    fn project(&self, _theta: &mut [f64]) {}

    /// Values and Jacobian rows on a common set of realizations.
    fn evaluate(&self, theta: &[f64], realizations: &[Self::Realization]) -> Result<OutcomeBatch> {
        let d = self.dim();
        if theta.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: theta.len(),
            });
        }
        let mut values = Vec::with_capacity(realizations.len());
        let mut grads = vec![0.0; realizations.len() * d];
        for (i, r) in realizations.iter().enumerate() {
            values.push(self.outcome(theta, r));
            self.jacobian_row(theta, r, &mut grads[i * d..(i + 1) * d]);
        }
        OutcomeBatch::new(values, grads, d, GradMode::Pathwise)
    }

    fn sample_outcomes<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<OutcomeBatch> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let realizations = self.draw(n, rng);
        self.evaluate(theta, &realizations)
    }

    /// Outcome values only; skips the Jacobian.
    fn sample_values<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let values: Vec<f64> = self
            .draw(n, rng)
            .iter()
            .map(|r| self.outcome(theta, r))
            .collect();
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(values)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
