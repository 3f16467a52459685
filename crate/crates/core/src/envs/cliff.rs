use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{EpisodicEnv, TabularPolicy, Trajectory};

/// Up, right, down, left.
pub const MOVES: [(i64, i64); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

/// Slippery cliff gridworld. Cells are `[row, col]` with row 0 at the top.
///
/// The default is a 3 x 5 grid with start and goal in the bottom corners and
/// the bottom-row interior as cliff. With `slip = 0.1` and `gamma = 0.92` the
/// shortest (cliff-edge) route and the detour along the top row have expected
/// returns 0.4836 and 0.4736, while their fall probabilities are 0.098 and 0.030.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliffSpec {
    pub rows: usize,
    pub cols: usize,
    pub start: [usize; 2],
    pub goal: [usize; 2],
    pub cliff: Vec<[usize; 2]>,
    /// Probability that the chosen action is replaced by a uniformly random direction.
    pub slip: f64,
    pub gamma: f64,
    pub reward_fall: f64,
    pub reward_goal: f64,
    pub horizon: usize,
}

impl Default for CliffSpec {
    fn default() -> Self {
        Self::classic_bottom_row(3, 5, 0.1, 0.92)
    }
}

impl CliffSpec {
    /// Start and goal in the bottom corners, cliff along the bottom row between them.
    pub fn classic_bottom_row(rows: usize, cols: usize, slip: f64, gamma: f64) -> Self {
        let bottom = rows - 1;
        Self {
            rows,
            cols,
            start: [bottom, 0],
            goal: [bottom, cols - 1],
            cliff: (1..cols - 1).map(|c| [bottom, c]).collect(),
            slip,
            gamma,
            reward_fall: -1.0,
            reward_goal: 1.0,
            horizon: 200,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_grid = |c: &[usize; 2]| c[0] < self.rows && c[1] < self.cols;
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("grid must be nonempty".into()));
        }
        if !in_grid(&self.start) || !in_grid(&self.goal) || !self.cliff.iter().all(in_grid) {
            return Err(Error::Config(
                "start, goal and cliff cells must lie on the grid".into(),
            ));
        }
        if self.start == self.goal {
            return Err(Error::Config("start and goal coincide".into()));
        }
        if self.cliff.contains(&self.start) || self.cliff.contains(&self.goal) {
            return Err(Error::Config(
                "start and goal must not be cliff cells".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.slip) {
            return Err(Error::Config(format!(
                "slip must lie in [0, 1), got {}",
                self.slip
            )));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn state(&self, cell: [usize; 2]) -> usize {
        cell[0] * self.cols + cell[1]
    }

    pub fn cell(&self, state: usize) -> [usize; 2] {
        [state / self.cols, state % self.cols]
    }

    /// Border collisions leave the agent in place.
    pub fn step_cell(&self, cell: [usize; 2], direction: usize) -> [usize; 2] {
        let (dr, dc) = MOVES[direction];
        let r = cell[0] as i64 + dr;
        let c = cell[1] as i64 + dc;
        if r < 0 || c < 0 || r >= self.rows as i64 || c >= self.cols as i64 {
            cell
        } else {
            [r as usize, c as usize]
        }
    }

    fn is_cliff(&self, cell: [usize; 2]) -> bool {
        self.cliff.contains(&cell)
    }

    /// Expected discounted return and fall probability from the start state,
    /// by solving the absorbing chain of the policy (no horizon cap).
    pub fn evaluate_exact(&self, policy: &TabularPolicy) -> Result<(f64, f64)> {
        self.validate()?;
        let n = self.rows * self.cols;
        if policy.states() != n || policy.actions() != 4 {
            return Err(Error::DimensionMismatch {
                expected: n * 4,
                got: policy.dim(),
            });
        }
        let mut value_sys = vec![vec![0.0; n + 1]; n];
        let mut fall_sys = vec![vec![0.0; n + 1]; n];
        for s in 0..n {
            value_sys[s][s] = 1.0;
            fall_sys[s][s] = 1.0;
            let cell = self.cell(s);
            if self.is_cliff(cell) || cell == self.goal {
                continue;
            }
            let probs = policy.probs(s);
            for dir in 0..4 {
                // chosen with prob pi(dir|s), or slipped into with prob slip/4
                let p = (1.0 - self.slip) * probs[dir] + self.slip / 4.0;
                let next = self.step_cell(cell, dir);
                if self.is_cliff(next) {
                    value_sys[s][n] += p * self.reward_fall;
                    fall_sys[s][n] += p;
                } else if next == self.goal {
                    value_sys[s][n] += p * self.reward_goal;
                } else {
                    let ns = self.state(next);
                    value_sys[s][ns] -= self.gamma * p;
                    fall_sys[s][ns] -= p;
                }
            }
        }
        let start = self.state(self.start);
        let v = solve_dense(value_sys)?;
        let f = solve_dense(fall_sys)?;
        Ok((v[start], f[start]))
    }
}

// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut m: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("nonempty");
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::Config(
                "singular chain: policy never terminates".into(),
            ));
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = m[row][col] / m[col][col];
                if factor != 0.0 {
                    for k in col..=n {
                        m[row][k] -= factor * m[col][k];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

impl EpisodicEnv for CliffSpec {
    fn num_states(&self) -> usize {
        self.rows * self.cols
    }

    fn num_actions(&self) -> usize {
        4
    }

    fn rollout<R: Rng + ?Sized>(&self, policy: &TabularPolicy, rng: &mut R) -> Trajectory {
        let mut cell = self.start;
        let mut traj = Trajectory {
            states: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            ret: 0.0,
        };
        let mut discount = 1.0;
        for _ in 0..self.horizon {
            let s = self.state(cell);
            let action = policy.sample_action(s, rng);
            let slipped: f64 = rng.random();
            let direction = if slipped < self.slip {
                rng.random_range(0..4)
            } else {
                action
            };
            let next = self.step_cell(cell, direction);
            let (reward, done) = if self.is_cliff(next) {
                (self.reward_fall, true)
            } else if next == self.goal {
                (self.reward_goal, true)
            } else {
                (0.0, false)
            };
            traj.states.push(s);
            traj.actions.push(action);
            traj.rewards.push(reward);
            traj.ret += discount * reward;
            discount *= self.gamma;
            cell = next;
            if done {
                break;
            }
        }
        traj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Deterministic route: climb to `row` in column 0, run right, then descend.
    pub(crate) fn route(spec: &CliffSpec, row: usize) -> TabularPolicy {
        let choice: Vec<usize> = (0..spec.rows * spec.cols)
            .map(|s| {
                let [r, c] = spec.cell(s);
                if c == spec.cols - 1 {
                    2
                } else if r > row {
                    0
                } else if r < row {
                    2
                } else {
                    1
                }
            })
            .collect();
        TabularPolicy::greedy(4, &choice, 60.0)
    }

    #[test]
    fn deterministic_safe_route_return() {
        let spec = CliffSpec {
            slip: 0.0,
            ..CliffSpec::default()
        };
        let policy = route(&spec, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let traj = spec.rollout(&policy, &mut rng);
        // up 2, right 4, down 2
        assert_eq!(traj.len(), 8);
        assert!((traj.ret - spec.gamma.powi(7)).abs() < 1e-12);
    }

    #[test]
    fn stepping_into_cliff_ends_immediately() {
        let spec = CliffSpec {
            slip: 0.0,
            ..CliffSpec::default()
        };
        let policy = TabularPolicy::greedy(4, &[1; 15], 60.0);
        let traj = spec.rollout(&policy, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.ret, -1.0);
    }

    #[test]
    fn borders_keep_agent_in_place() {
        let spec = CliffSpec::default();
        assert_eq!(spec.step_cell([0, 0], 0), [0, 0]);
        assert_eq!(spec.step_cell([0, 0], 3), [0, 0]);
        assert_eq!(spec.step_cell([0, 4], 1), [0, 4]);
    }

    #[test]
    fn default_routes_are_balanced() {
        let spec = CliffSpec::default();
        spec.validate().unwrap();
        let (v_risky, f_risky) = spec.evaluate_exact(&route(&spec, 1)).unwrap();
        let (v_safe, f_safe) = spec.evaluate_exact(&route(&spec, 0)).unwrap();
        assert!((v_risky - v_safe).abs() < 0.05, "{v_risky} {v_safe}");
        assert!(v_risky > v_safe);
        assert!(f_risky > f_safe + 0.05);
    }

    #[test]
    fn validation() {
        let mut spec = CliffSpec::default();
        spec.cliff.push(spec.start);
        assert!(spec.validate().is_err());
        let spec = CliffSpec {
            slip: 1.0,
            ..CliffSpec::default()
        };
        assert!(spec.validate().is_err());
    }
}
