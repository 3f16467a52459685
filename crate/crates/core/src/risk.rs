//! Risk and robustness metrics of an outcome batch (larger outcomes are better).

use serde::{Deserialize, Serialize};

use crate::dominance::check_batch;
use crate::error::{Error, Result};

/// Largest batch accepted by [`dro_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 12;

pub fn mean(samples: &[f64]) -> Result<f64> {
    check_batch(samples)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Unbiased sample variance; 0 for a single sample.
pub fn variance(samples: &[f64]) -> Result<f64> {
    let m = mean(samples)?;
    let n = samples.len();
    if n == 1 {
        return Ok(0.0);
    }
    Ok(samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64)
}

/// Lower-middle order statistic for even lengths.
pub fn median(samples: &[f64]) -> Result<f64> {
    check_batch(samples)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Mean absolute deviation from the sample median.
pub fn mad(samples: &[f64]) -> Result<f64> {
    let med = median(samples)?;
    Ok(samples.iter().map(|x| (x - med).abs()).sum::<f64>() / samples.len() as f64)
}

/// Worst-case mean over the l-infinity ball of radius `rho / n` around the
/// empirical distribution: `mean - rho * mad`.
pub fn dro_value(samples: &[f64], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(mean(samples)? - rho * mad(samples)?)
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::InvalidRho(rho))
    }
}

/// Exhaustive minimum over the vertices of the perturbation polytope: `h`
/// coordinates get `+rho/n`, `h` others get `-rho/n`, with `h = floor(n/2)`.
/// Exponential in `n`; meant as a test oracle.
pub fn dro_bruteforce(samples: &[f64], rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let m = mean(samples)?;
    let n = samples.len();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::TooLarge {
            n,
            max: BRUTEFORCE_MAX_N,
        });
    }
    let h = n / 2;
    if h == 0 {
        return Ok(m);
    }
    // Each coordinate gets +1, -1 or 0.
    let mut best = f64::NEG_INFINITY;
    let mut signs = vec![0i8; n];
    enumerate_vertices(samples, h, 0, 0, 0, &mut signs, &mut best);
    Ok(m - rho / n as f64 * best)
}

// Maximizes sum_{+} x - sum_{-} x over sign patterns with exactly h of each.
fn enumerate_vertices(
    xs: &[f64],
    h: usize,
    i: usize,
    plus: usize,
    minus: usize,
    signs: &mut [i8],
    best: &mut f64,
) {
    let n = xs.len();
    if plus + minus + (n - i) < 2 * h || plus > h || minus > h {
        return;
    }
    if i == n {
        let total: f64 = xs
            .iter()
            .zip(signs.iter())
            .map(|(x, &s)| f64::from(s) * x)
            .sum();
        if total > *best {
            *best = total;
        }
        return;
    }
    for s in [1i8, -1, 0] {
        signs[i] = s;
        let (p, q) = match s {
            1 => (plus + 1, minus),
            -1 => (plus, minus + 1),
            _ => (plus, minus),
        };
        enumerate_vertices(xs, h, i + 1, p, q, signs, best);
    }
    signs[i] = 0;
}

/// Half the mean absolute deviation from the sample mean.
pub fn semideviation1(samples: &[f64]) -> Result<f64> {
    let m = mean(samples)?;
    Ok(0.5 * samples.iter().map(|x| (x - m).abs()).sum::<f64>() / samples.len() as f64)
}

/// Mean of the worst `ceil(alpha * n)` outcomes (lower tail).
pub fn cvar(samples: &[f64], alpha: f64) -> Result<f64> {
    check_batch(samples)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = tail_count(samples.len(), alpha);
    Ok(sorted[..k].iter().sum::<f64>() / k as f64)
}

/// `ceil(alpha * n)` clamped to `[1, n]`, robust to `alpha * n` landing a hair
/// above an integer.
pub(crate) fn tail_count(n: usize, alpha: f64) -> usize {
    let raw = alpha * n as f64;
    let k = (raw - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Mean over standard deviation with a zero risk-free rate.
pub fn sharpe(samples: &[f64]) -> Result<f64> {
    let sd = variance(samples)?.sqrt();
    if sd == 0.0 {
        return Err(Error::ZeroStd);
    }
    Ok(mean(samples)? / sd)
}

/// Summary metrics of one batch, serialized as a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
    /// `None` for a constant batch.
    pub sharpe: Option<f64>,
    pub mad: f64,
    pub semidev1: f64,
    pub cvar_05: f64,
    pub cvar_10: f64,
    pub cvar_25: f64,
    pub dro_005: f64,
    pub dro_010: f64,
    pub dro_050: f64,
}

impl MetricReport {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let variance = variance(samples)?;
        let sharpe = match sharpe(samples) {
            Ok(s) => Some(s),
            Err(Error::ZeroStd) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            mean: mean(samples)?,
            variance,
            std: variance.sqrt(),
            sharpe,
            mad: mad(samples)?,
            semidev1: semideviation1(samples)?,
            cvar_05: cvar(samples, 0.05)?,
            cvar_10: cvar(samples, 0.10)?,
            cvar_25: cvar(samples, 0.25)?,
            dro_005: dro_value(samples, 0.05)?,
            dro_010: dro_value(samples, 0.10)?,
            dro_050: dro_value(samples, 0.50)?,
        })
    }
}
