//! Data and environment generators: synthetic market, cliff gridworld,
//! bandits and synthetic supervised data.

mod bandit;
mod cliff;
mod market;
mod supervised;

use std::io::Write;

pub use bandit::{ArmReward, Bandit};
pub use cliff::{CliffSpec, MOVES};
pub use market::{tail_multiplier, Market, MarketSpec, MixtureComponent, TailKind};
pub use supervised::{NoiseKind, SupervisedSpec};

use crate::error::Result;
use crate::models::Trajectory;

/// Writes rollouts as CSV `episode,t,state,action,reward`.
pub fn write_rollouts_csv<W: Write>(mut out: W, trajectories: &[Trajectory]) -> Result<()> {
    writeln!(out, "episode,t,state,action,reward")?;
    for (ep, traj) in trajectories.iter().enumerate() {
        for (t, ((s, a), r)) in traj
            .states
            .iter()
            .zip(&traj.actions)
            .zip(&traj.rewards)
            .enumerate()
        {
            writeln!(out, "{ep},{t},{s},{a},{r}")?;
        }
    }
    Ok(())
}
