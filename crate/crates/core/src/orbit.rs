//! Forward orbits with accumulated log-derivatives.

use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    ReachedN,
    LeftDisc,
    Stagnated,
}

impl Truncation {
    pub fn as_str(self) -> &'static str {
        match self {
            Truncation::ReachedN => "reached_n",
            Truncation::LeftDisc => "left_disc",
            Truncation::Stagnated => "stagnated",
        }
    }
}

/// When to stop iterating before `n_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    pub stagnation_tol: f64,
    pub stagnation_steps: usize,
    /// Points with `|z| > 1 + escape_tol` raise an instability error.
    pub escape_tol: f64,
    /// Points with `|z| ≥ 1 − boundary_margin` end the orbit as having left the disc.
    pub boundary_margin: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { stagnation_tol: 1e-15, stagnation_steps: 3, escape_tol: 1e-12, boundary_margin: 0.0 }
    }
}

impl StopRule {
    /// Never stops on stagnation.
    pub fn no_stagnation() -> Self {
        StopRule { stagnation_tol: 0.0, ..Self::default() }
    }
}

/// `log|φ'(z_k)|` and `arg φ'(z_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogDeriv {
    pub log_mag: f64,
    pub arg: f64,
}

impl LogDeriv {
    pub fn of(d: C64) -> Self {
        if d == C64::new(0.0, 0.0) {
            LogDeriv { log_mag: f64::NEG_INFINITY, arg: 0.0 }
        } else {
            LogDeriv { log_mag: d.norm().ln(), arg: d.arg() }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub seed: C64,
    /// `z_0 … z_N`, all inside the open disc.
    pub points: Vec<C64>,
    /// Entry `k` describes `φ'(z_k)`; one shorter than `points`.
    pub step_log_deriv: Vec<LogDeriv>,
    pub truncation: Truncation,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> C64 {
        *self.points.last().expect("orbit always holds its seed")
    }

    /// `log|(φ^n)'(z_0)|` and the unwrapped argument, for `n ≤ steps`.
    pub fn cumulative_log_deriv(&self, n: usize) -> LogDeriv {
        let mut acc = LogDeriv { log_mag: 0.0, arg: 0.0 };
        for s in &self.step_log_deriv[..n] {
            acc.log_mag += s.log_mag;
            acc.arg += s.arg;
        }
        acc
    }

    /// `(φ^n)'(z_0)` reassembled from the ledger.
    pub fn composed_deriv(&self, n: usize) -> C64 {
        let l = self.cumulative_log_deriv(n);
        C64::from_polar(l.log_mag.exp(), l.arg)
    }
}

/// Iterates `map` from `z0` for up to `n_max` steps.
pub fn iterate(map: &MapExpr, z0: C64, n_max: usize, stop: StopRule) -> Result<Orbit> {
    if !(z0.norm() < 1.0) {
        return Err(Error::Domain(format!("seed {z0} is not in the open disc")));
    }
    let mut points = Vec::with_capacity(n_max.min(1 << 20) + 1);
    let mut logs = Vec::with_capacity(n_max.min(1 << 20));
    points.push(z0);
    let mut z = z0;
    let mut still = 0usize;
    let mut truncation = Truncation::ReachedN;
    for k in 0..n_max {
        let (w, d) = map.eval_deriv(z)?;
        let m = w.norm();
        if m > 1.0 + stop.escape_tol {
            return Err(Error::Instability { step: k + 1, modulus: m });
        }
        if m >= 1.0 - stop.boundary_margin {
            truncation = Truncation::LeftDisc;
            break;
        }
        logs.push(LogDeriv::of(d));
        points.push(w);
        if (w - z).norm() < stop.stagnation_tol {
            still += 1;
            if still >= stop.stagnation_steps {
                truncation = Truncation::Stagnated;
                break;
            }
        } else {
            still = 0;
        }
        z = w;
    }
    Ok(Orbit { seed: z0, points, step_log_deriv: logs, truncation })
}

/// `φ^n(z)` without bookkeeping.
pub fn nth_iterate(map: &MapExpr, z: C64, n: usize) -> Result<C64> {
    let mut w = z;
    for _ in 0..n {
        w = map.eval(w)?;
    }
    Ok(w)
}

/// `φ^n(z)` together with `(φ^n)'(z)`.
pub fn nth_iterate_deriv(map: &MapExpr, z: C64, n: usize) -> Result<(C64, C64)> {
    let mut w = z;
    let mut d = C64::new(1.0, 0.0);
    for _ in 0..n {
        let (v, dv) = map.eval_deriv(w)?;
        d *= dv;
        w = v;
    }
    Ok((w, d))
}
