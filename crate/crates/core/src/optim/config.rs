use serde::{Deserialize, Serialize};

use crate::dominance::{Interval, Order};
use crate::error::{Error, Result};

/// How the dominance interval `[a, b]` is fixed. Rules other than `Explicit`
/// are evaluated once on the pooled initial batch and then frozen.
///
/// The lower endpoint must sit above the bottom of the outcome support: with
/// no mass below `a`, `F2(a) = 0` for every iterate and no gap can ever be
/// negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IntervalRule {
    Explicit {
        a: f64,
        b: f64,
    },
    /// Empirical quantiles (linear interpolation) of the pooled initial batch.
    Quantile {
        lo: f64,
        hi: f64,
    },
    /// `a = min + lo * range`, `b = min + hi * range` over the pooled initial
    /// batch. `lo = -0.1, hi = 1.1` pads the sample range by 10% on each side.
    Range {
        lo: f64,
        hi: f64,
    },
}

impl Default for IntervalRule {
    fn default() -> Self {
        IntervalRule::Quantile { lo: 0.1, hi: 0.9 }
    }
}

impl IntervalRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntervalRule::Explicit { a, b } => Interval::new(a, b).map(|_| ()),
            IntervalRule::Quantile { lo, hi } => {
                if (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "quantile rule needs 0 <= lo < hi <= 1, got [{lo}, {hi}]"
                    )))
                }
            }
            IntervalRule::Range { lo, hi } => {
                if lo.is_finite() && hi.is_finite() && lo < hi {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "range rule needs finite lo < hi, got [{lo}, {hi}]"
                    )))
                }
            }
        }
    }

    pub fn resolve(&self, pooled: &[f64]) -> Result<Interval> {
        self.validate()?;
        crate::dominance::check_batch(pooled)?;
        let mut sorted = pooled.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (a, b) = match *self {
            IntervalRule::Explicit { a, b } => (a, b),
            IntervalRule::Quantile { lo, hi } => (quantile(&sorted, lo), quantile(&sorted, hi)),
            IntervalRule::Range { lo, hi } => {
                let min = sorted[0];
                let range = sorted[sorted.len() - 1] - min;
                (min + lo * range, min + hi * range)
            }
        };
        if !(a < b) {
            return Err(Error::Config(format!(
                "interval rule {self:?} gives an empty interval [{a}, {b}] on the initial batch; set an explicit interval"
            )));
        }
        Interval::new(a, b)
    }
}

/// Linearly interpolated quantile of sorted data.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn default_order() -> Order {
    Order::Second
}
fn default_epsilon() -> f64 {
    0.01
}
fn default_batch() -> usize {
    512
}
fn default_tbar_max() -> usize {
    200
}
fn default_step_scale() -> f64 {
    0.1
}

/// Hyperparameters of the nested-loop optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LsdConfig {
    /// Dominance order of the objective; only 2 is supported for optimization.
    #[serde(default = "default_order")]
    pub k: Order,
    #[serde(default)]
    pub interval: IntervalRule,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Batch size `N` of every sample draw.
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Outer-loop cap. When absent it is `ceil(4 C / epsilon + 1)`.
    #[serde(default)]
    pub t_max: Option<usize>,
    /// Bound `C` on the gap; defaults to the `F2` range over `[a, b]` of the
    /// pooled initial batch.
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default = "default_tbar_max")]
    pub tbar_max: usize,
    /// `c` in the inner step size `c / sqrt(tbar + 1)`.
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    /// Reuse reference samples across inner iterations.
    #[serde(default)]
    pub replay: bool,
    /// Replay buffer size in samples; defaults to `8 * batch`.
    #[serde(default)]
    pub replay_capacity: Option<usize>,
    /// Subtract the batch mean of `u(R)` in score-function updates.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for LsdConfig {
    fn default() -> Self {
        Self {
            k: default_order(),
            interval: IntervalRule::default(),
            epsilon: default_epsilon(),
            batch: default_batch(),
            t_max: None,
            c: None,
            tbar_max: default_tbar_max(),
            step_scale: default_step_scale(),
            replay: false,
            replay_capacity: None,
            baseline: false,
            seed: 0,
        }
    }
}

impl LsdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k != Order::Second {
            return Err(Error::UnsupportedOrder(self.k.into()));
        }
        self.interval.validate()?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.batch == 0
            || self.tbar_max == 0
            || self.t_max == Some(0)
            || self.replay_capacity == Some(0)
        {
            return Err(Error::Config(
                "batch, tbar_max, t_max and replay_capacity must be >= 1".into(),
            ));
        }
        if let Some(c) = self.c {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::Config(format!("c must be >= 0, got {c}")));
            }
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config(format!(
                "step_scale must be > 0, got {}",
                self.step_scale
            )));
        }
        Ok(())
    }

    /// `ceil(4 C / epsilon + 1)`.
    pub fn outer_cap(&self, c: f64) -> usize {
        self.t_max
            .unwrap_or_else(|| (4.0 * c / self.epsilon + 1.0).ceil() as usize)
    }
}

/// Inner step size `scale / sqrt(tbar + 1)`; shared by every optimizer.
pub fn step_size(scale: f64, tbar: usize) -> f64 {
    scale / ((tbar + 1) as f64).sqrt()
}

fn default_steps() -> usize {
    500
}

/// Settings of the stochastic-gradient baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_step_scale")]
    pub step_scale: f64,
    /// Subtract the batch-mean return in policy-gradient updates.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            batch: default_batch(),
            step_scale: default_step_scale(),
            baseline: false,
            seed: 0,
        }
    }
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch == 0 {
            return Err(Error::Config("steps and batch must be >= 1".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config(format!(
                "step_scale must be > 0, got {}",
                self.step_scale
            )));
        }
        Ok(())
    }
}
