use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{dot, PathwiseModel};
use crate::envs::Market;

/// How the allocation `w(theta)` in the simplex is obtained from `theta`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameterization {
    /// `w = softmax(theta)`; unconstrained iterates.
    #[default]
    Softmax,
    /// `w = theta`, projected onto the simplex after every step. The outcome
    /// is linear (hence concave) in `theta`.
    SimplexProjection,
}

/// Total return `X_theta = sum_i w_i(theta) R_i` of an allocation over a market.
#[derive(Debug, Clone)]
pub struct PortfolioModel {
    market: Market,
    parameterization: Parameterization,
}

impl PortfolioModel {
    pub fn new(market: Market, parameterization: Parameterization) -> Self {
        Self {
            market,
            parameterization,
        }
    }

    pub fn market(&self) -> &Market {
        &self.market
    }

    pub fn parameterization(&self) -> Parameterization {
        self.parameterization
    }

    pub fn weights(&self, theta: &[f64]) -> Vec<f64> {
        match self.parameterization {
            Parameterization::Softmax => softmax(theta),
            Parameterization::SimplexProjection => theta.to_vec(),
        }
    }
}

impl PathwiseModel for PortfolioModel {
    type Realization = Vec<f64>;

    fn dim(&self) -> usize {
        self.market.assets()
    }

    fn initial_theta(&self) -> Vec<f64> {
        let k = self.dim();
        match self.parameterization {
            Parameterization::Softmax => vec![0.0; k],
            Parameterization::SimplexProjection => vec![1.0 / k as f64; k],
        }
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        self.market.sample(n, rng)
    }

    fn outcome(&self, theta: &[f64], returns: &Vec<f64>) -> f64 {
        dot(&self.weights(theta), returns)
    }

    fn jacobian_row(&self, theta: &[f64], returns: &Vec<f64>, out: &mut [f64]) {
        match self.parameterization {
            Parameterization::Softmax => {
                // d(w.r)/d theta_j = w_j (r_j - w.r)
                let w = softmax(theta);
                let x = dot(&w, returns);
                for ((o, wj), rj) in out.iter_mut().zip(&w).zip(returns) {
                    *o = wj * (rj - x);
                }
            }
            Parameterization::SimplexProjection => out.copy_from_slice(returns),
        }
    }

    fn project(&self, theta: &mut [f64]) {
        if self.parameterization == Parameterization::SimplexProjection {
            project_simplex(theta);
        }
    }
}

pub fn softmax(theta: &[f64]) -> Vec<f64> {
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = theta.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    w
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}
