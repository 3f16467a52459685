//! Learning with stochastic dominance.
//!
//! Exact empirical dominance gaps and utility solver ([`dominance`]),
//! differentiable outcome models ([`models`]), the nested-loop optimizer and
//! baselines ([`optim`]), testbed generators ([`envs`]) and risk metrics
//! ([`risk`]).

pub mod dominance;
pub mod envs;
mod error;
pub mod models;
pub mod optim;
pub mod risk;

pub use dominance::{
    dominance_gap, empirical_f1, empirical_f2, l_hat, solve_utility, DominanceGap, EmpiricalCdf,
    Interval, Order, PiecewiseUtility,
};
pub use error::{Error, Result};
pub use models::{GradMode, OutcomeBatch, ParamVector, PathwiseModel};
pub use optim::{LsdConfig, LsdTrace};
pub use risk::MetricReport;
