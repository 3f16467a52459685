use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EpisodicEnv, TabularPolicy, Trajectory};

/// Reward law of one bandit arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ArmReward {
    Fixed {
        value: f64,
    },
    Normal {
        mean: f64,
        std: f64,
    },
    /// `loss` with probability `prob`, otherwise `value`.
    Tail {
        value: f64,
        loss: f64,
        prob: f64,
    },
}

impl ArmReward {
    pub fn mean(&self) -> f64 {
        match *self {
            ArmReward::Fixed { value } => value,
            ArmReward::Normal { mean, .. } => mean,
            ArmReward::Tail { value, loss, prob } => prob * loss + (1.0 - prob) * value,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ArmReward::Fixed { value } => value.is_finite(),
            ArmReward::Normal { mean, std } => mean.is_finite() && std.is_finite() && std >= 0.0,
            ArmReward::Tail { value, loss, prob } => {
                value.is_finite() && loss.is_finite() && (0.0..=1.0).contains(&prob)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid arm {self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ArmReward::Fixed { value } => value,
            ArmReward::Normal { mean, std } => {
                Normal::new(mean, std).expect("validated std").sample(rng)
            }
            ArmReward::Tail { value, loss, prob } => {
                if rng.random::<f64>() < prob {
                    loss
                } else {
                    value
                }
            }
        }
    }
}

/// Single-state, single-step environment: the return is the arm's reward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bandit {
    pub arms: Vec<ArmReward>,
}

impl Bandit {
    pub fn new(arms: Vec<ArmReward>) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::Config("bandit needs at least one arm".into()));
        }
        for arm in &arms {
            arm.validate()?;
        }
        Ok(Self { arms })
    }
}

impl EpisodicEnv for Bandit {
    fn num_states(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        self.arms.len()
    }

    fn rollout<R: Rng + ?Sized>(&self, policy: &TabularPolicy, rng: &mut R) -> Trajectory {
        let action = policy.sample_action(0, rng);
        let reward = self.arms[action].sample(rng);
        Trajectory {
            states: vec![0],
            actions: vec![action],
            rewards: vec![reward],
            ret: reward,
        }
    }
}
