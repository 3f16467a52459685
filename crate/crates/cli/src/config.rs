//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stochdom_core::envs::{CliffSpec, MarketSpec, SupervisedSpec};
use stochdom_core::models::{Parameterization, SupervisedKind};
use stochdom_core::optim::{BaselineConfig, IntervalRule, LsdConfig};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Portfolio,
    Cliffwalk,
    Supervised,
    Compare,
}

impl ExperimentKind {
    /// LSD settings used for keys absent from the `lsd` section.
    pub fn default_lsd(self) -> LsdConfig {
        let base = LsdConfig::default();
        match self {
            // Returns lie in [-1, 1]; a left end above -1 keeps falls out of the
            // comparison window, otherwise F2(a) is zero for every policy.
            ExperimentKind::Cliffwalk => LsdConfig {
                interval: IntervalRule::Explicit { a: -0.5, b: 0.5 },
                step_scale: 20.0,
                ..base
            },
            ExperimentKind::Portfolio => LsdConfig {
                epsilon: 0.005,
                step_scale: 1.0,
                ..base
            },
            _ => base,
        }
    }

    /// Baseline optimizer settings used for keys absent from the `baseline` section.
    pub fn default_baseline(self) -> BaselineConfig {
        let base = BaselineConfig::default();
        match self {
            ExperimentKind::Cliffwalk => BaselineConfig {
                steps: 1000,
                step_scale: 20.0,
                baseline: true,
                ..base
            },
            // Portfolio returns have small gradients relative to their spread.
            ExperimentKind::Portfolio => BaselineConfig {
                step_scale: 30.0,
                ..base
            },
            _ => base,
        }
    }
}

/// One entry of the `methods` list. Parameterized baselines expand into one
/// run per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    Lsd,
    Sgd,
    Reinforce,
    MeanVariance(Vec<f64>),
    CvarPg(Vec<f64>),
}

/// A single optimizer run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Lsd,
    Sgd,
    Reinforce,
    MeanVariance(f64),
    CvarPg(f64),
}

impl Method {
    /// Label used in file names and the summary.
    pub fn label(&self) -> String {
        match self {
            Method::Lsd => "lsd".into(),
            Method::Sgd => "sgd".into(),
            Method::Reinforce => "reinforce".into(),
            Method::MeanVariance(l) => format!("mean_variance_{l}"),
            Method::CvarPg(a) => format!("cvar_pg_{a}"),
        }
    }

    fn allowed_in(&self, kind: ExperimentKind) -> bool {
        match kind {
            ExperimentKind::Portfolio | ExperimentKind::Supervised => {
                matches!(self, Method::Lsd | Method::Sgd | Method::MeanVariance(_))
            }
            ExperimentKind::Cliffwalk => {
                matches!(self, Method::Lsd | Method::Reinforce | Method::CvarPg(_))
            }
            ExperimentKind::Compare => false,
        }
    }
}

/// Inputs of the `compare` experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub x: PathBuf,
    pub y: PathBuf,
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_k")]
    pub k: u8,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_k() -> u8 {
    2
}

pub fn default_tol() -> f64 {
    0.02
}

fn default_eval_multiplier() -> usize {
    10
}

fn default_bins() -> usize {
    50
}

fn default_curve_points() -> usize {
    201
}

fn default_supervised_task() -> SupervisedKind {
    SupervisedKind::LinearRegression
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub lsd: LsdConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketSpec>,
    #[serde(default)]
    pub parameterization: Parameterization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliff: Option<CliffSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supervised: Option<SupervisedSpec>,
    /// Optional CSV dataset (last column = label) replacing the generated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Model kind used with `data`.
    #[serde(default = "default_supervised_task")]
    pub task: SupervisedKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
    /// Held-out batch size as a multiple of the training batch.
    #[serde(default = "default_eval_multiplier")]
    pub eval_multiplier: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Parses and validates; every failure is a configuration error carrying
    /// the file name and, for syntax and schema errors, the line and column.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let located = |e: serde_json::Error| {
            CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        };
        let mut config: ExperimentConfig = serde_json::from_str(text).map_err(located)?;
        // Second pass: overlay the given optimizer keys on the experiment's defaults.
        let raw: serde_json::Value = serde_json::from_str(text).map_err(located)?;
        let overlay_err = |e: serde_json::Error| CliError::Config(format!("{origin}: {e}"));
        config.lsd =
            overlay(config.experiment.default_lsd(), raw.get("lsd")).map_err(overlay_err)?;
        config.baseline = overlay(config.experiment.default_baseline(), raw.get("baseline"))
            .map_err(overlay_err)?;
        config
            .validate()
            .map_err(|msg| CliError::Config(format!("{origin}: {msg}")))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!(
                "unsupported version {}, expected {CONFIG_VERSION}",
                self.version
            ));
        }
        let section_ok = match self.experiment {
            ExperimentKind::Portfolio => {
                self.market.is_some() && self.cliff.is_none() && self.supervised.is_none()
            }
            ExperimentKind::Cliffwalk => self.market.is_none() && self.supervised.is_none(),
            ExperimentKind::Supervised => self.market.is_none() && self.cliff.is_none(),
            ExperimentKind::Compare => self.compare.is_some(),
        };
        if !section_ok {
            return Err(format!(
                "experiment {:?} needs its own spec section (portfolio: market; cliffwalk: cliff; supervised: supervised or data; compare: compare) and no other",
                self.experiment
            ));
        }
        if self.experiment == ExperimentKind::Compare {
            let c = self.compare.as_ref().expect("checked");
            if !(c.a.is_finite() && c.b.is_finite() && c.a < c.b) {
                return Err(format!("compare interval [{}, {}] is invalid", c.a, c.b));
            }
            if c.k != 1 && c.k != 2 {
                return Err(format!("compare order k must be 1 or 2, got {}", c.k));
            }
            return Ok(());
        }
        if self.methods.is_empty() {
            return Err("at least one method is required".into());
        }
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        for m in self.expand_methods() {
            if !m.allowed_in(self.experiment) {
                return Err(format!(
                    "method {} is not available for {:?}",
                    m.label(),
                    self.experiment
                ));
            }
            match m {
                Method::MeanVariance(l) if !(l >= 0.0 && l.is_finite()) => {
                    return Err(format!("mean_variance lambda must be >= 0, got {l}"))
                }
                Method::CvarPg(a) if !(a > 0.0 && a <= 1.0) => {
                    return Err(format!("cvar_pg alpha must lie in (0, 1], got {a}"))
                }
                _ => {}
            }
        }
        for spec in &self.methods {
            if let MethodSpec::MeanVariance(v) | MethodSpec::CvarPg(v) = spec {
                if v.is_empty() {
                    return Err("parameterized methods need at least one value".into());
                }
            }
        }
        self.lsd.validate().map_err(|e| format!("lsd: {e}"))?;
        self.baseline
            .validate()
            .map_err(|e| format!("baseline: {e}"))?;
        if let Some(m) = &self.market {
            m.resolve().map_err(|e| format!("market: {e}"))?;
        }
        if let Some(c) = &self.cliff {
            c.validate().map_err(|e| format!("cliff: {e}"))?;
        }
        if let Some(s) = &self.supervised {
            s.resolve().map_err(|e| format!("supervised: {e}"))?;
        }
        if self.eval_multiplier == 0 || self.bins == 0 || self.curve_points < 2 {
            return Err("eval_multiplier and bins must be >= 1, curve_points >= 2".into());
        }
        Ok(())
    }

    pub fn expand_methods(&self) -> Vec<Method> {
        let mut out = Vec::new();
        for spec in &self.methods {
            match spec {
                MethodSpec::Lsd => out.push(Method::Lsd),
                MethodSpec::Sgd => out.push(Method::Sgd),
                MethodSpec::Reinforce => out.push(Method::Reinforce),
                MethodSpec::MeanVariance(ls) => {
                    out.extend(ls.iter().map(|&l| Method::MeanVariance(l)))
                }
                MethodSpec::CvarPg(alphas) => out.extend(alphas.iter().map(|&a| Method::CvarPg(a))),
            }
        }
        out
    }

    /// The config with every default and generated quantity written out.
    pub fn resolved(&self) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        if let Some(m) = &cfg.market {
            cfg.market = Some(
                m.resolve()
                    .map_err(|e| CliError::Config(format!("market: {e}")))?,
            );
        }
        if cfg.experiment == ExperimentKind::Cliffwalk && cfg.cliff.is_none() {
            cfg.cliff = Some(CliffSpec::default());
        }
        if cfg.experiment == ExperimentKind::Supervised && cfg.data.is_none() {
            let spec = cfg.supervised.clone().unwrap_or_default();
            cfg.supervised = Some(
                spec.resolve()
                    .map_err(|e| CliError::Config(format!("supervised: {e}")))?,
            );
        }
        Ok(cfg)
    }
}

fn overlay<T: Serialize + serde::de::DeserializeOwned>(
    defaults: T,
    given: Option<&serde_json::Value>,
) -> serde_json::Result<T> {
    let Some(serde_json::Value::Object(given)) = given else {
        return Ok(defaults);
    };
    let mut merged = serde_json::to_value(defaults)?;
    let fields = merged.as_object_mut().expect("config is an object");
    for (k, v) in given {
        fields.insert(k.clone(), v.clone());
    }
    serde_json::from_value(merged)
}
