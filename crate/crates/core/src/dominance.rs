//! Empirical distribution functions, the generalized dominance gap and the
//! exact second-order utility solver.
//!
//! For a sample batch `x_1..x_N` the first two distribution functions are
//!
//! ```text
//! F1(eta) = #{i : x_i <= eta} / N
//! F2(eta) = (1/N) * sum_i (eta - x_i)_+
//! ```
//!
//! `F2` is piecewise linear with kinks at the samples, so the difference of two
//! of them attains its maximum over `[a, b]` on the merged sample grid plus the
//! interval endpoints. Everything here is computed on that grid and is exact up
//! to floating-point rounding.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used to collect ties in the argmax set.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Closed interval `[a, b]` on which dominance is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let interval = Self { a, b };
        interval.validate()?;
        Ok(interval)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.is_finite() && self.b.is_finite() && self.a < self.b {
            Ok(())
        } else {
            Err(Error::InvalidInterval {
                a: self.a,
                b: self.b,
            })
        }
    }

    pub fn contains(&self, eta: f64) -> bool {
        self.a <= eta && eta <= self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Order `k` of the distribution function being compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    First,
    Second,
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }
}

impl From<Order> for u8 {
    fn from(order: Order) -> u8 {
        match order {
            Order::First => 1,
            Order::Second => 2,
        }
    }
}

pub(crate) fn check_batch(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Empirical CDF `F1(eta)`, right-continuous in `eta`.
pub fn empirical_f1(samples: &[f64], eta: f64) -> Result<f64> {
    check_batch(samples)?;
    let below = samples.iter().filter(|&&x| x <= eta).count();
    Ok(below as f64 / samples.len() as f64)
}

/// Empirical second distribution function `F2(eta) = mean((eta - x_i)_+)`.
pub fn empirical_f2(samples: &[f64], eta: f64) -> Result<f64> {
    check_batch(samples)?;
    let total: f64 = samples.iter().map(|&x| (eta - x).max(0.0)).sum();
    Ok(total / samples.len() as f64)
}

/// `F1` and `F2` of two batches tabulated on their merged grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    interval: Interval,
    grid: Vec<f64>,
    f1_x: Vec<f64>,
    f1_y: Vec<f64>,
    f2_x: Vec<f64>,
    f2_y: Vec<f64>,
}

impl EmpiricalCdf {
    /// Merges both batches with the interval endpoints and runs the forward
    /// recursion `F2(g_i) = F2(g_{i-1}) + (g_i - g_{i-1}) F1(g_{i-1})`.
    pub fn build(xs: &[f64], ys: &[f64], interval: Interval) -> Result<Self> {
        check_batch(xs)?;
        check_batch(ys)?;
        interval.validate()?;

        let mut sx = xs.to_vec();
        let mut sy = ys.to_vec();
        sx.sort_by(f64::total_cmp);
        sy.sort_by(f64::total_cmp);

        let mut grid = Vec::with_capacity(sx.len() + sy.len() + 2);
        grid.extend_from_slice(&sx);
        grid.extend_from_slice(&sy);
        grid.push(interval.a);
        grid.push(interval.b);
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let f1_x = step_counts(&grid, &sx);
        let f1_y = step_counts(&grid, &sy);
        let f2_x = integrate(&grid, &f1_x);
        let f2_y = integrate(&grid, &f1_y);

        Ok(Self {
            interval,
            grid,
            f1_x,
            f1_y,
            f2_x,
            f2_y,
        })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn f1_x(&self) -> &[f64] {
        &self.f1_x
    }

    pub fn f1_y(&self) -> &[f64] {
        &self.f1_y
    }

    pub fn f2_x(&self) -> &[f64] {
        &self.f2_x
    }

    pub fn f2_y(&self) -> &[f64] {
        &self.f2_y
    }

    /// `F_X^k - F_Y^k` at every grid point.
    pub fn difference(&self, order: Order) -> Vec<f64> {
        let (fx, fy) = match order {
            Order::First => (&self.f1_x, &self.f1_y),
            Order::Second => (&self.f2_x, &self.f2_y),
        };
        fx.iter().zip(fy).map(|(x, y)| x - y).collect()
    }

    /// Writes the curves as CSV with header `eta,f1_x,f1_y,f2_x,f2_y`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "eta,f1_x,f1_y,f2_x,f2_y")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid[i], self.f1_x[i], self.f1_y[i], self.f2_x[i], self.f2_y[i]
            )?;
        }
        Ok(())
    }
}

// Fraction of `sorted` that is <= each grid point. Duplicate samples fold into
// one increment.
fn step_counts(grid: &[f64], sorted: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    let mut j = 0;
    grid.iter()
        .map(|&eta| {
            while j < sorted.len() && sorted[j] <= eta {
                j += 1;
            }
            j as f64 / n
        })
        .collect()
}

fn integrate(grid: &[f64], f1: &[f64]) -> Vec<f64> {
    let mut f2 = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    for i in 0..grid.len() {
        if i > 0 {
            acc += (grid[i] - grid[i - 1]) * f1[i - 1];
        }
        f2.push(acc);
    }
    f2
}

/// Value of `max_{eta in [a,b]} F_X^k(eta) - F_Y^k(eta)` with its maximizers and
/// the uniform measure on them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceGap {
    pub order: Order,
    pub value: f64,
    /// Indices into `grid` of the maximizing points.
    pub maximizers: Vec<usize>,
    /// Weights over `grid`, supported on `maximizers`.
    pub mu_star: Vec<f64>,
    pub grid: Vec<f64>,
    /// Every sample lies at or above `b`, so both curves vanish on `[a, b]`
    /// and the measure is pinned to `b`.
    pub degenerate: bool,
}

impl DominanceGap {
    pub fn from_cdf(cdf: &EmpiricalCdf, order: Order) -> Self {
        let interval = cdf.interval();
        let grid = cdf.grid();
        let diff = cdf.difference(order);
        let candidates: Vec<usize> = (0..grid.len())
            .filter(|&i| interval.contains(grid[i]))
            .collect();
        let b_index = candidates
            .iter()
            .copied()
            .find(|&i| grid[i] == interval.b)
            .expect("grid contains b");

        // No sample strictly below b: both curves vanish on [a, b].
        let degenerate = order == Order::Second
            && cdf.f1_x()[b_index - 1] == 0.0
            && cdf.f1_y()[b_index - 1] == 0.0;

        let value = candidates
            .iter()
            .map(|&i| diff[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let maximizers: Vec<usize> = if degenerate {
            vec![b_index]
        } else {
            candidates
                .iter()
                .copied()
                .filter(|&i| diff[i] >= value - TIE_TOLERANCE)
                .collect()
        };
        let mut mu_star = vec![0.0; grid.len()];
        let w = 1.0 / maximizers.len() as f64;
        for &i in &maximizers {
            mu_star[i] = w;
        }

        Self {
            order,
            value,
            maximizers,
            mu_star,
            grid: grid.to_vec(),
            degenerate,
        }
    }

    /// Locations of the maximizers.
    pub fn argmax(&self) -> Vec<f64> {
        self.maximizers.iter().map(|&i| self.grid[i]).collect()
    }
}

/// Generalized dominance gap `Omega_k(X, Y)` over `interval`.
pub fn dominance_gap(
    order: Order,
    xs: &[f64],
    ys: &[f64],
    interval: Interval,
) -> Result<DominanceGap> {
    let cdf = EmpiricalCdf::build(xs, ys, interval)?;
    Ok(DominanceGap::from_cdf(&cdf, order))
}

/// Nondecreasing concave piecewise-linear utility
/// `u(x) = -sum_j mass_j (knot_j - x)_+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseUtility {
    knots: Vec<f64>,
    mass: Vec<f64>,
    /// Right derivative on `[knot_j, knot_{j+1})`, i.e. the mass strictly above `knot_j`.
    cum_slope: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseUtility {
    /// Builds the utility of a probability measure on sorted knots using the
    /// backward recursion of the solver.
    pub fn from_measure(knots: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidMeasure("no knots".into()));
        }
        if knots.len() != mass.len() {
            return Err(Error::DimensionMismatch {
                expected: knots.len(),
                got: mass.len(),
            });
        }
        if let Some(index) = knots.iter().position(|k| !k.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMeasure(
                "knots must be strictly increasing".into(),
            ));
        }
        if mass.iter().any(|&m| !(m >= 0.0) || !m.is_finite()) {
            return Err(Error::InvalidMeasure(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, not 1"
            )));
        }

        let m = knots.len();
        let mut cum_slope = vec![0.0; m];
        let mut values = vec![0.0; m];
        // Mass at or above knot i, accumulated from the top.
        let mut above = 0.0;
        for i in (0..m).rev() {
            cum_slope[i] = above;
            if i + 1 < m {
                values[i] = values[i + 1] - (knots[i + 1] - knots[i]) * cum_slope[i];
            }
            above += mass[i];
        }

        Ok(Self {
            knots,
            mass,
            cum_slope,
            values,
        })
    }

    /// `u(x) = -(eta - x)_+`.
    pub fn point_mass(eta: f64) -> Result<Self> {
        Self::from_measure(vec![eta], vec![1.0])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn cum_slope(&self) -> &[f64] {
        &self.cum_slope
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn total_mass(&self) -> f64 {
        self.cum_slope[0] + self.mass[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.knots.len();
        if x >= self.knots[m - 1] {
            return 0.0;
        }
        if x <= self.knots[0] {
            return self.values[0] - (self.knots[0] - x) * self.total_mass();
        }
        // knots[j] <= x < knots[j + 1]
        let j = self.knots.partition_point(|&k| k <= x) - 1;
        self.values[j] + (x - self.knots[j]) * self.cum_slope[j]
    }

    /// Right derivative `sum_j mass_j 1{knot_j > x}`.
    pub fn deriv(&self, x: f64) -> f64 {
        let j = self.knots.partition_point(|&k| k <= x);
        if j == 0 {
            self.total_mass()
        } else {
            self.cum_slope[j - 1]
        }
    }
}

/// Solves `max_{u in U_2} L(X, Y, u)` exactly; the optimal utility puts the
/// maximizing measure of the second-order gap on its knots.
pub fn solve_utility(
    xs: &[f64],
    ys: &[f64],
    interval: Interval,
) -> Result<(PiecewiseUtility, DominanceGap)> {
    let cdf = EmpiricalCdf::build(xs, ys, interval)?;
    let gap = DominanceGap::from_cdf(&cdf, Order::Second);
    let utility = PiecewiseUtility::from_measure(gap.grid.clone(), gap.mu_star.clone())?;
    Ok((utility, gap))
}

/// `L(X, Y, u) = -mean(u(xs)) + mean(u(ys))`.
pub fn l_hat(u: &PiecewiseUtility, xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_batch(xs)?;
    check_batch(ys)?;
    let mean = |s: &[f64]| s.iter().map(|&x| u.eval(x)).sum::<f64>() / s.len() as f64;
    Ok(mean(ys) - mean(xs))
}
