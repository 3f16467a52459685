//! Dominance comparison of two sample files.

use std::path::Path;

use serde::Serialize;
use stochdom_core::{dominance_gap, Interval, Order};

use crate::error::CliError;

/// Reads one real per line; blank lines are skipped.
pub fn read_samples(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_samples(&text, &path.display().to_string())
}

pub fn parse_samples(text: &str, origin: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|e| {
            CliError::Config(format!("{origin}:{}: cannot parse {line:?}: {e}", i + 1))
        })?;
        if !v.is_finite() {
            return Err(CliError::Config(format!(
                "{origin}:{}: non-finite value",
                i + 1
            )));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::Config(format!("{origin}: no samples")));
    }
    Ok(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    XDominates,
    YDominates,
    /// Both gaps exceed the tolerance.
    Incomparable,
    /// Both gaps are within the tolerance.
    Indistinguishable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::XDominates => "X dominates Y",
            Verdict::YDominates => "Y dominates X",
            Verdict::Incomparable => "incomparable",
            Verdict::Indistinguishable => "indistinguishable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub k: u8,
    pub a: f64,
    pub b: f64,
    pub tol: f64,
    /// `max F_X^k - F_Y^k`; at most `tol` when X is not worse than Y anywhere.
    pub gap_xy: f64,
    pub argmax_xy: Vec<f64>,
    pub gap_yx: f64,
    pub argmax_yx: Vec<f64>,
    pub verdict: Verdict,
}

pub fn compare(
    xs: &[f64],
    ys: &[f64],
    a: f64,
    b: f64,
    k: u8,
    tol: f64,
) -> Result<CompareReport, CliError> {
    let interval = Interval::new(a, b).map_err(|e| CliError::Config(e.to_string()))?;
    let order = Order::try_from(k).map_err(|e| CliError::Config(e.to_string()))?;
    let xy = dominance_gap(order, xs, ys, interval).map_err(|e| CliError::Run(e.to_string()))?;
    let yx = dominance_gap(order, ys, xs, interval).map_err(|e| CliError::Run(e.to_string()))?;
    let verdict = match (xy.value <= tol, yx.value <= tol) {
        (true, true) => Verdict::Indistinguishable,
        (true, false) => Verdict::XDominates,
        (false, true) => Verdict::YDominates,
        (false, false) => Verdict::Incomparable,
    };
    Ok(CompareReport {
        k,
        a,
        b,
        tol,
        gap_xy: xy.value,
        argmax_xy: xy.argmax(),
        gap_yx: yx.value,
        argmax_yx: yx.argmax(),
        verdict,
    })
}

impl std::fmt::Display for CompareReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "interval [{}, {}], order {}, tolerance {}",
            self.a, self.b, self.k, self.tol
        )?;
        writeln!(
            f,
            "Omega(X, Y) = {:.12e} at eta = {:?}",
            self.gap_xy, self.argmax_xy
        )?;
        writeln!(
            f,
            "Omega(Y, X) = {:.12e} at eta = {:?}",
            self.gap_yx, self.argmax_yx
        )?;
        write!(f, "verdict: {}", self.verdict)
    }
}
