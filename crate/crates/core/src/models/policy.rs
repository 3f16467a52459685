use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GradMode, OutcomeBatch};
use crate::error::{Error, Result};

/// Softmax policy with one logit per (state, action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularPolicy {
    states: usize,
    actions: usize,
    logits: Vec<f64>,
}

impl TabularPolicy {
    pub fn uniform(states: usize, actions: usize) -> Self {
        Self {
            states,
            actions,
            logits: vec![0.0; states * actions],
        }
    }

    pub fn from_logits(states: usize, actions: usize, logits: Vec<f64>) -> Result<Self> {
        if logits.len() != states * actions {
            return Err(Error::DimensionMismatch {
                expected: states * actions,
                got: logits.len(),
            });
        }
        if let Some(index) = logits.iter().position(|l| !l.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            states,
            actions,
            logits,
        })
    }

    /// Near-deterministic policy that puts `sharpness` extra logit on `choice[s]`.
    pub fn greedy(actions: usize, choice: &[usize], sharpness: f64) -> Self {
        let states = choice.len();
        let mut logits = vec![0.0; states * actions];
        for (s, &a) in choice.iter().enumerate() {
            logits[s * actions + a] = sharpness;
        }
        Self {
            states,
            actions,
            logits,
        }
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn dim(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn set_logits(&mut self, theta: &[f64]) {
        self.logits.copy_from_slice(theta);
    }

    pub fn probs(&self, state: usize) -> Vec<f64> {
        super::softmax(&self.logits[state * self.actions..(state + 1) * self.actions])
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        let p = self.probs(state);
        let mut u: f64 = rng.random();
        for (a, pa) in p.iter().enumerate() {
            if u < *pa {
                return a;
            }
            u -= pa;
        }
        self.actions - 1
    }
}

/// One episode: per-step states, actions, rewards and the discounted return.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub ret: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Episodic environment driven by a tabular policy.
pub trait EpisodicEnv {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn rollout<R: Rng + ?Sized>(&self, policy: &TabularPolicy, rng: &mut R) -> Trajectory;
}

/// `grad_theta log pi_theta(tau)`: entry `(s, a)` accumulates
/// `1{a_t = a} - pi(a | s_t)` over the steps visiting `s`.
pub fn score_row(policy: &TabularPolicy, trajectory: &Trajectory) -> Vec<f64> {
    let na = policy.actions();
    let mut row = vec![0.0; policy.dim()];
    for (&s, &a) in trajectory.states.iter().zip(&trajectory.actions) {
        let p = policy.probs(s);
        let base = s * na;
        for (b, pb) in p.iter().enumerate() {
            row[base + b] -= pb;
        }
        row[base + a] += 1.0;
    }
    row
}

/// `n` on-policy rollouts as a score-mode batch of returns.
pub fn sample_trajectories<E, R>(
    policy: &TabularPolicy,
    env: &E,
    n: usize,
    rng: &mut R,
) -> Result<(OutcomeBatch, Vec<Trajectory>)>
where
    E: EpisodicEnv + ?Sized,
    R: Rng + ?Sized,
{
    if policy.states() != env.num_states() || policy.actions() != env.num_actions() {
        return Err(Error::DimensionMismatch {
            expected: env.num_states() * env.num_actions(),
            got: policy.dim(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let trajectories: Vec<Trajectory> = (0..n).map(|_| env.rollout(policy, rng)).collect();
    let values = trajectories.iter().map(|t| t.ret).collect();
    let grads = trajectories
        .iter()
        .flat_map(|t| score_row(policy, t))
        .collect();
    let batch = OutcomeBatch::new(values, grads, policy.dim(), GradMode::Score)?;
    Ok((batch, trajectories))
}
