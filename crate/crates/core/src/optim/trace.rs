use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::step_size;
use crate::dominance::Interval;
use crate::error::Result;

/// One inner iteration of the nested loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerRecord {
    pub t: usize,
    pub tbar: usize,
    /// Gap of the fresh-sample progress check after the step.
    pub gap_check: f64,
    pub step: f64,
    pub grad_norm: f64,
}

/// The reference iterate was replaced at the end of inner iteration `(t, tbar)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterUpdate {
    pub t: usize,
    pub tbar: usize,
    pub gap_check: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A full inner loop found no iterate passing the progress check.
    NonDominanceCertified,
    /// `t_max` outer updates were spent.
    BudgetExhausted,
    /// The run stopped on an error before finishing.
    Aborted,
}

/// Everything needed to audit a run of the nested loop after the fact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsdTrace {
    pub interval: Interval,
    pub epsilon: f64,
    pub c: f64,
    pub t_max: usize,
    pub tbar_max: usize,
    pub step_scale: f64,
    pub records: Vec<InnerRecord>,
    pub updates: Vec<OuterUpdate>,
    pub termination: Termination,
}

impl LsdTrace {
    pub fn total_iterations(&self) -> usize {
        self.records.len()
    }

    /// Newline-delimited JSON, one inner record per line.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Checks the control-flow laws of the nested loop. Returns the first
    /// violation found.
    pub fn verify(&self) -> std::result::Result<(), String> {
        let threshold = -self.epsilon / 2.0;
        if self.records.len() > self.t_max * self.tbar_max {
            return Err(format!(
                "{} inner iterations exceed t_max * tbar_max = {}",
                self.records.len(),
                self.t_max * self.tbar_max
            ));
        }
        let mut updates = self.updates.iter().peekable();
        let mut expected = (0usize, 0usize);
        for (i, r) in self.records.iter().enumerate() {
            if (r.t, r.tbar) != expected {
                return Err(format!(
                    "record {i}: index ({}, {}) but expected {:?}",
                    r.t, r.tbar, expected
                ));
            }
            if r.step != step_size(self.step_scale, r.tbar) {
                return Err(format!("record {i}: step {} off the schedule", r.step));
            }
            if r.tbar >= self.tbar_max {
                return Err(format!("record {i}: tbar {} reaches tbar_max", r.tbar));
            }
            let updated = updates
                .peek()
                .is_some_and(|u| (u.t, u.tbar) == (r.t, r.tbar));
            if updated {
                let u = updates.next().expect("peeked");
                if u.gap_check != r.gap_check || !(r.gap_check <= threshold) {
                    return Err(format!(
                        "update at ({}, {}) without a passing check",
                        u.t, u.tbar
                    ));
                }
                expected = (r.t + 1, 0);
            } else {
                if r.gap_check <= threshold {
                    return Err(format!(
                        "record {i}: passing check did not update the reference"
                    ));
                }
                expected = (r.t, r.tbar + 1);
            }
        }
        if let Some(u) = updates.next() {
            return Err(format!(
                "update at ({}, {}) has no matching record",
                u.t, u.tbar
            ));
        }
        let n_updates = self.updates.len();
        let gap_sum: f64 = self.updates.iter().map(|u| u.gap_check).sum();
        if gap_sum > n_updates as f64 * threshold {
            return Err(format!(
                "checked gaps sum to {gap_sum}, above {n_updates} * -epsilon/2"
            ));
        }
        match self.termination {
            Termination::NonDominanceCertified => {
                let last_loop = self.records.iter().filter(|r| r.t == n_updates).count();
                if last_loop != self.tbar_max {
                    return Err(format!(
                        "certified after {last_loop} of {} inner iterations",
                        self.tbar_max
                    ));
                }
                if n_updates + 1 > self.t_max {
                    return Err(format!(
                        "certified with {n_updates} updates, cap is t_max - 1"
                    ));
                }
            }
            Termination::BudgetExhausted => {
                if n_updates != self.t_max {
                    return Err(format!(
                        "budget exhausted after {n_updates} of {} updates",
                        self.t_max
                    ));
                }
            }
            Termination::Aborted => {}
        }
        Ok(())
    }
}
