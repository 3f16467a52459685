use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{step_size, BaselineConfig};
use super::lsd::{norm, weighted_descent, Episodic, OutcomeSource, Pathwise};
use crate::error::{Error, Result};
use crate::models::{EpisodicEnv, OutcomeBatch, ParamVector, PathwiseModel, TabularPolicy};
use crate::risk::tail_count;

/// One ascent step of a baseline optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub step: usize,
    /// Mean outcome of the batch the step was computed on.
    pub batch_mean: f64,
    pub step_size: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineTrace {
    pub records: Vec<BaselineRecord>,
}

impl BaselineTrace {
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Stochastic ascent `theta -= step * g(batch)` where `g` is a descent direction.
fn ascend<S, F>(
    src: &S,
    theta0: Vec<f64>,
    cfg: &BaselineConfig,
    mut direction: F,
) -> Result<(ParamVector, BaselineTrace)>
where
    S: OutcomeSource,
    F: FnMut(&OutcomeBatch) -> Vec<f64>,
{
    cfg.validate()?;
    if theta0.len() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            got: theta0.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = ParamVector::new(theta0)?.into_inner();
    let mut trace = BaselineTrace::default();
    for s in 0..cfg.steps {
        let batch = src.batch(&theta, cfg.batch, &mut rng)?;
        let g = direction(&batch);
        let grad_norm = norm(&g);
        if !grad_norm.is_finite() {
            return Err(Error::NonFinite { index: s });
        }
        let step = step_size(cfg.step_scale, s);
        for (th, gj) in theta.iter_mut().zip(&g) {
            *th -= step * gj;
        }
        src.project(&mut theta);
        let batch_mean = batch.values().iter().sum::<f64>() / batch.len() as f64;
        trace.records.push(BaselineRecord {
            step: s,
            batch_mean,
            step_size: step,
            grad_norm,
        });
    }
    Ok((ParamVector::new(theta)?, trace))
}

/// Descent direction of `-(mean(x) - lambda * var(x))` using the unbiased
/// sample variance.
fn mean_variance_direction(batch: &OutcomeBatch, lambda: f64) -> Vec<f64> {
    let n = batch.len();
    let g_mean = weighted_descent(batch, &vec![1.0; n]);
    if n < 2 {
        return g_mean;
    }
    let xs = batch.values();
    let xbar = xs.iter().sum::<f64>() / n as f64;
    // d var / d theta = 2/(N-1) sum (x_i - xbar) dx_i; weighted_descent negates and divides by N
    let scale = 2.0 * n as f64 / (n - 1) as f64;
    let w: Vec<f64> = xs.iter().map(|x| scale * (x - xbar)).collect();
    let g_var = weighted_descent(batch, &w);
    g_mean
        .iter()
        .zip(&g_var)
        .map(|(m, v)| m - lambda * v)
        .collect()
}

/// Risk-neutral stochastic gradient ascent on the mean outcome.
pub fn sgd_erm_fit<M: PathwiseModel>(
    model: &M,
    config: &BaselineConfig,
) -> Result<(ParamVector, BaselineTrace)> {
    mean_variance_fit(model, 0.0, config)
}

/// Stochastic gradient ascent on `mean(x) - lambda * var(x)`.
pub fn mean_variance_fit<M: PathwiseModel>(
    model: &M,
    lambda: f64,
    config: &BaselineConfig,
) -> Result<(ParamVector, BaselineTrace)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    ascend(&Pathwise(model), model.initial_theta(), config, |b| {
        mean_variance_direction(b, lambda)
    })
}

fn check_policy<E: EpisodicEnv>(policy: &TabularPolicy, env: &E) -> Result<()> {
    if policy.states() != env.num_states() || policy.actions() != env.num_actions() {
        return Err(Error::DimensionMismatch {
            expected: env.num_states() * env.num_actions(),
            got: policy.dim(),
        });
    }
    Ok(())
}

/// REINFORCE: `theta += (step / N) sum_i R_i grad log pi(tau_i)`, optionally
/// with the batch-mean return subtracted.
pub fn reinforce_fit<E: EpisodicEnv>(
    policy: &TabularPolicy,
    env: &E,
    config: &BaselineConfig,
) -> Result<(ParamVector, BaselineTrace)> {
    check_policy(policy, env)?;
    let baseline = config.baseline;
    ascend(
        &Episodic { env },
        policy.logits().to_vec(),
        config,
        |batch| {
            let mut w = batch.values().to_vec();
            if baseline {
                let mean = w.iter().sum::<f64>() / w.len() as f64;
                for wi in &mut w {
                    *wi -= mean;
                }
            }
            weighted_descent(batch, &w)
        },
    )
}

/// Per-sample weights of the CVaR policy gradient. With `q` the
/// `ceil(alpha N)`-th smallest return and `T = {i : R_i <= q}`, the estimate
/// is `(1/|T|) sum_{i in T} ((R_i - q) + q) grad log pi(tau_i)`: the tail
/// term plus the quantile term. Returned as weights for a `1/N` average.
pub fn cvar_weights(returns: &[f64], alpha: f64) -> Result<Vec<f64>> {
    crate::dominance::check_batch(returns)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let n = returns.len();
    let mut sorted = returns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = sorted[tail_count(n, alpha) - 1];
    let tail = returns.iter().filter(|&&r| r <= q).count();
    let scale = n as f64 / tail as f64;
    Ok(returns
        .iter()
        // (r - q) + q, kept as r so the alpha = 1 case is exactly the mean weight
        .map(|&r| if r <= q { scale * r } else { 0.0 })
        .collect())
}

/// Policy-gradient ascent on the empirical lower-tail CVaR of returns.
pub fn cvar_pg_fit<E: EpisodicEnv>(
    policy: &TabularPolicy,
    env: &E,
    alpha: f64,
    config: &BaselineConfig,
) -> Result<(ParamVector, BaselineTrace)> {
    check_policy(policy, env)?;
    cvar_weights(&[0.0], alpha)?;
    ascend(
        &Episodic { env },
        policy.logits().to_vec(),
        config,
        |batch| {
            let w =
                cvar_weights(batch.values(), alpha).expect("validated alpha and finite returns");
            weighted_descent(batch, &w)
        },
    )
}
