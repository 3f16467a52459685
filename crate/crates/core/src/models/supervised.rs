use std::io::BufRead;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dot, PathwiseModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupervisedKind {
    /// Squared error of a linear predictor.
    LinearRegression,
    /// Cross-entropy of a logistic classifier, labels in {0, 1}.
    LogisticClassification,
}

/// Fixed finite dataset, features stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if features.len() != labels.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * dim,
                got: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: pos / dim.max(1),
            });
        }
        if let Some(index) = labels.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    /// Reads CSV rows where the last column is the label. A first line that
    /// does not parse as numbers is treated as a header.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut dim = None;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if lineno == 0 => continue,
                Err(e) => return Err(Error::Config(format!("line {}: {e}", lineno + 1))),
            };
            if row.len() < 2 {
                return Err(Error::Config(format!(
                    "line {}: need at least one feature and a label",
                    lineno + 1
                )));
            }
            let d = row.len() - 1;
            match dim {
                None => dim = Some(d),
                Some(expected) if expected != d => {
                    return Err(Error::Config(format!(
                        "line {}: expected {} columns, found {}",
                        lineno + 1,
                        expected + 1,
                        row.len()
                    )))
                }
                _ => {}
            }
            features.extend_from_slice(&row[..d]);
            labels.push(row[d]);
        }
        Self::new(features, labels, dim.unwrap_or(0))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

/// Outcome `x = -loss(f_theta(feature), label)`, minibatches drawn with
/// replacement from a fixed dataset.
#[derive(Debug, Clone)]
pub struct SupervisedModel {
    kind: SupervisedKind,
    data: Dataset,
}

impl SupervisedModel {
    pub fn new(kind: SupervisedKind, data: Dataset) -> Self {
        Self { kind, data }
    }

    pub fn kind(&self) -> SupervisedKind {
        self.kind
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn loss(&self, theta: &[f64], i: usize) -> f64 {
        let z = dot(theta, self.data.features(i));
        let y = self.data.label(i);
        match self.kind {
            SupervisedKind::LinearRegression => (z - y).powi(2),
            SupervisedKind::LogisticClassification => softplus(z) - y * z,
        }
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl PathwiseModel for SupervisedModel {
    type Realization = usize;

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n)
            .map(|_| rng.random_range(0..self.data.len()))
            .collect()
    }

    fn outcome(&self, theta: &[f64], &i: &usize) -> f64 {
        -self.loss(theta, i)
    }

    fn jacobian_row(&self, theta: &[f64], &i: &usize, out: &mut [f64]) {
        let f = self.data.features(i);
        let z = dot(theta, f);
        let y = self.data.label(i);
        let scale = match self.kind {
            SupervisedKind::LinearRegression => -2.0 * (z - y),
            SupervisedKind::LogisticClassification => -(sigmoid(z) - y),
        };
        for (o, fj) in out.iter_mut().zip(f) {
            *o = scale * fj;
        }
    }
}
