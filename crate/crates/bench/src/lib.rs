//! Shared inputs for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochdom_core::envs::{Market, MarketSpec};
use stochdom_core::models::{Parameterization, PortfolioModel};

/// Two samples of length `n` with some repeated values, and a Gaussian-ish
/// spread so that the gap has many candidate maximizers.
pub fn sample_pair(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |shift: f64| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let v: f64 = (0..4).map(|_| rng.random::<f64>()).sum::<f64>() - 2.0;
                if rng.random::<f64>() < 0.2 {
                    (v * 8.0).round() / 8.0 + shift
                } else {
                    v + shift
                }
            })
            .collect()
    };
    let xs = draw(0.05);
    let ys = draw(0.0);
    (xs, ys)
}

pub fn portfolio(assets: usize) -> PortfolioModel {
    let market = Market::new(&MarketSpec::generated(assets, 10, 0)).expect("valid market");
    PortfolioModel::new(market, Parameterization::Softmax)
}
