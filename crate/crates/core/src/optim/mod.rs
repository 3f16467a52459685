//! The nested-loop dominance optimizer, its policy-gradient variant and the
//! risk-neutral and risk-aware baselines.

mod baselines;
mod config;
mod lsd;
mod trace;

pub use baselines::{
    cvar_pg_fit, cvar_weights, mean_variance_fit, reinforce_fit, sgd_erm_fit, BaselineRecord,
    BaselineTrace,
};
pub use config::{step_size, BaselineConfig, IntervalRule, LsdConfig};
pub use lsd::{
    lsd_fit, lsd_fit_from, lsd_pg, lsd_subgradient, probe_certificate, ProbeConfig, ProbeKind,
    ProbeResult,
};
pub use trace::{InnerRecord, LsdTrace, OuterUpdate, Termination};
