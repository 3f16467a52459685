use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::{step_size, LsdConfig};
use super::trace::{InnerRecord, LsdTrace, OuterUpdate, Termination};
use crate::dominance::{
    dominance_gap, empirical_f2, solve_utility, Interval, Order, PiecewiseUtility,
};
use crate::error::{Error, Result};
use crate::models::{
    sample_trajectories, EpisodicEnv, GradMode, OutcomeBatch, ParamVector, PathwiseModel,
    TabularPolicy,
};

/// Anything that can draw outcome batches at a parameter value.
pub(crate) trait OutcomeSource {
    fn dim(&self) -> usize;
    fn batch(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<OutcomeBatch>;
    fn values(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    fn project(&self, _theta: &mut [f64]) {}
}

pub(crate) struct Pathwise<'a, M>(pub &'a M);

impl<M: PathwiseModel> OutcomeSource for Pathwise<'_, M> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn batch(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<OutcomeBatch> {
        self.0.sample_outcomes(theta, n, rng)
    }

    fn values(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        self.0.sample_values(theta, n, rng)
    }

    fn project(&self, theta: &mut [f64]) {
        self.0.project(theta)
    }
}

pub(crate) struct Episodic<'a, E> {
    pub env: &'a E,
}

impl<E: EpisodicEnv> Episodic<'_, E> {
    fn policy(&self, theta: &[f64]) -> Result<TabularPolicy> {
        TabularPolicy::from_logits(
            self.env.num_states(),
            self.env.num_actions(),
            theta.to_vec(),
        )
    }
}

impl<E: EpisodicEnv> OutcomeSource for Episodic<'_, E> {
    fn dim(&self) -> usize {
        self.env.num_states() * self.env.num_actions()
    }

    fn batch(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<OutcomeBatch> {
        Ok(sample_trajectories(&self.policy(theta)?, self.env, n, rng)?.0)
    }

    fn values(&self, theta: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let policy = self.policy(theta)?;
        Ok((0..n).map(|_| self.env.rollout(&policy, rng).ret).collect())
    }
}

/// `-(1/N) sum_i w_i g_i` over the gradient rows of a batch.
pub(crate) fn weighted_descent(batch: &OutcomeBatch, weights: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; batch.dim()];
    for (i, w) in weights.iter().enumerate() {
        if *w != 0.0 {
            for (gj, rj) in g.iter_mut().zip(batch.grad(i)) {
                *gj += w * rj;
            }
        }
    }
    let scale = -1.0 / batch.len() as f64;
    for gj in &mut g {
        *gj *= scale;
    }
    g
}

/// Subgradient of `theta -> -mean(u(x_i(theta)))`.
///
/// Pathwise batches weight each Jacobian row by `u'(x_i)` (right derivative).
/// Score batches use the log-derivative form and weight each score row by
/// `u(x_i)`.
pub fn lsd_subgradient(batch: &OutcomeBatch, u: &PiecewiseUtility) -> Vec<f64> {
    let weights: Vec<f64> = match batch.mode() {
        GradMode::Pathwise => batch.values().iter().map(|&x| u.deriv(x)).collect(),
        GradMode::Score => batch.values().iter().map(|&x| u.eval(x)).collect(),
    };
    weighted_descent(batch, &weights)
}

fn score_subgradient_with_baseline(batch: &OutcomeBatch, u: &PiecewiseUtility) -> Vec<f64> {
    let mut weights: Vec<f64> = batch.values().iter().map(|&x| u.eval(x)).collect();
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    for w in &mut weights {
        *w -= mean;
    }
    weighted_descent(batch, &weights)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Interval and outer cap fixed from the pooled initial batch.
fn calibrate<S: OutcomeSource>(
    src: &S,
    theta0: &[f64],
    cfg: &LsdConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Interval, f64, usize)> {
    let mut pooled = src.values(theta0, cfg.batch, rng)?;
    pooled.extend(src.values(theta0, cfg.batch, rng)?);
    let interval = cfg.interval.resolve(&pooled)?;
    let c = match cfg.c {
        Some(c) => c,
        None => empirical_f2(&pooled, interval.b)? - empirical_f2(&pooled, interval.a)?,
    };
    Ok((interval, c, cfg.outer_cap(c)))
}

/// Reference samples kept across inner iterations when replay is on.
struct ReplayBuffer {
    capacity: usize,
    values: VecDeque<f64>,
}

impl ReplayBuffer {
    fn push(&mut self, fresh: &[f64]) {
        for &x in fresh {
            if self.values.len() == self.capacity {
                self.values.pop_front();
            }
            self.values.push_back(x);
        }
    }
}

fn run_lsd<S: OutcomeSource>(
    src: &S,
    theta0: Vec<f64>,
    cfg: &LsdConfig,
) -> Result<(ParamVector, LsdTrace)> {
    cfg.validate()?;
    if theta0.len() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            got: theta0.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (interval, c, t_max) = calibrate(src, &theta0, cfg, &mut rng)?;
    let n = cfg.batch;
    let threshold = -cfg.epsilon / 2.0;
    let mut trace = LsdTrace {
        interval,
        epsilon: cfg.epsilon,
        c,
        t_max,
        tbar_max: cfg.tbar_max,
        step_scale: cfg.step_scale,
        records: Vec::new(),
        updates: Vec::new(),
        termination: Termination::BudgetExhausted,
    };
    let mut replay = cfg.replay.then(|| ReplayBuffer {
        capacity: cfg.replay_capacity.unwrap_or(8 * n),
        values: VecDeque::new(),
    });

    let mut theta_ref = ParamVector::new(theta0)?.into_inner();
    for t in 0..t_max {
        let mut theta = theta_ref.clone();
        if let Some(buf) = replay.as_mut() {
            buf.values.clear();
        }
        let mut updated = false;
        for tbar in 0..cfg.tbar_max {
            let batch = src.batch(&theta, n, &mut rng)?;
            let fresh_ref = src.values(&theta_ref, n, &mut rng)?;
            let reference: Vec<f64> = match replay.as_mut() {
                Some(buf) => {
                    buf.push(&fresh_ref);
                    buf.values.iter().copied().collect()
                }
                None => fresh_ref,
            };
            let (u, _) = solve_utility(batch.values(), &reference, interval)?;
            let g = if cfg.baseline && batch.mode() == GradMode::Score {
                score_subgradient_with_baseline(&batch, &u)
            } else {
                lsd_subgradient(&batch, &u)
            };
            let grad_norm = norm(&g);
            if !grad_norm.is_finite() {
                trace.termination = Termination::Aborted;
                return Err(Error::NonFiniteGradient {
                    t,
                    tbar,
                    trace: Box::new(trace),
                });
            }
            let step = step_size(cfg.step_scale, tbar);
            for (th, gj) in theta.iter_mut().zip(&g) {
                *th -= step * gj;
            }
            src.project(&mut theta);

            // Progress check on a fresh pair of batches.
            let x_new = src.values(&theta, n, &mut rng)?;
            let x_ref = src.values(&theta_ref, n, &mut rng)?;
            let gap_check = dominance_gap(Order::Second, &x_new, &x_ref, interval)?.value;
            trace.records.push(InnerRecord {
                t,
                tbar,
                gap_check,
                step,
                grad_norm,
            });
            if gap_check <= threshold {
                trace.updates.push(OuterUpdate { t, tbar, gap_check });
                theta_ref = theta;
                updated = true;
                break;
            }
        }
        if !updated {
            trace.termination = Termination::NonDominanceCertified;
            return Ok((ParamVector::new(theta_ref)?, trace));
        }
    }
    Ok((ParamVector::new(theta_ref)?, trace))
}

/// Nested-loop optimizer for pathwise models, started at `model.initial_theta()`.
pub fn lsd_fit<M: PathwiseModel>(model: &M, config: &LsdConfig) -> Result<(ParamVector, LsdTrace)> {
    run_lsd(&Pathwise(model), model.initial_theta(), config)
}

/// As [`lsd_fit`] from a given starting point.
pub fn lsd_fit_from<M: PathwiseModel>(
    model: &M,
    theta0: &[f64],
    config: &LsdConfig,
) -> Result<(ParamVector, LsdTrace)> {
    run_lsd(&Pathwise(model), theta0.to_vec(), config)
}

/// Policy-gradient variant: same control flow with score-function updates
/// `theta += (step / N) sum_i u(R_i) grad log pi(tau_i)`.
pub fn lsd_pg<E: EpisodicEnv>(
    policy: &TabularPolicy,
    env: &E,
    config: &LsdConfig,
) -> Result<(ParamVector, LsdTrace)> {
    if policy.states() != env.num_states() || policy.actions() != env.num_actions() {
        return Err(Error::DimensionMismatch {
            expected: env.num_states() * env.num_actions(),
            got: policy.dim(),
        });
    }
    run_lsd(&Episodic { env }, policy.logits().to_vec(), config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    RandomPerturbation,
    SgdImproved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    /// `Omega_2(X_probe, X_out)` on fresh batches.
    pub gap: f64,
}

/// How candidate competitors of a certified output are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub random: usize,
    /// Standard deviation of the Gaussian perturbation of `theta`.
    pub perturbation: f64,
    pub sgd: usize,
    /// Mean-ascent steps taken by each improved probe.
    pub sgd_steps: usize,
    pub sgd_step_scale: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            random: 20,
            perturbation: 0.5,
            sgd: 5,
            sgd_steps: 20,
            sgd_step_scale: 0.5,
            seed: 0,
        }
    }
}

/// Gaps of perturbed and mean-improved parameters against a fitted output,
/// each measured on fresh batches of `config.batch` samples over the
/// interval of the fit. A certified output should have every gap `>= -epsilon`.
pub fn probe_certificate<M: PathwiseModel>(
    model: &M,
    theta_out: &[f64],
    interval: Interval,
    config: &LsdConfig,
    probes: &ProbeConfig,
) -> Result<Vec<ProbeResult>> {
    let src = Pathwise(model);
    let mut rng = ChaCha8Rng::seed_from_u64(probes.seed);
    let n = config.batch;
    let mut results = Vec::with_capacity(probes.random + probes.sgd);
    let mut gap_against = |theta: &[f64], kind, rng: &mut ChaCha8Rng| -> Result<()> {
        let x_probe = src.values(theta, n, rng)?;
        let x_out = src.values(theta_out, n, rng)?;
        let gap = dominance_gap(Order::Second, &x_probe, &x_out, interval)?.value;
        results.push(ProbeResult { kind, gap });
        Ok(())
    };
    for _ in 0..probes.random {
        let mut theta: Vec<f64> = theta_out
            .iter()
            .map(|t| t + probes.perturbation * rng.sample::<f64, _>(StandardNormal))
            .collect();
        model.project(&mut theta);
        gap_against(&theta, ProbeKind::RandomPerturbation, &mut rng)?;
    }
    for _ in 0..probes.sgd {
        let mut theta = theta_out.to_vec();
        for s in 0..probes.sgd_steps {
            let batch = src.batch(&theta, n, &mut rng)?;
            let g = weighted_descent(&batch, &vec![1.0; batch.len()]);
            let step = step_size(probes.sgd_step_scale, s);
            for (th, gj) in theta.iter_mut().zip(&g) {
                *th -= step * gj;
            }
            model.project(&mut theta);
        }
        gap_against(&theta, ProbeKind::SgdImproved, &mut rng)?;
    }
    Ok(results)
}
