//! Denjoy–Wolff point, multiplier, classification and hyperbolic step.

use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use crate::extrapolate::{aitken, richardson_limit};
use crate::grid::SampleGrid;
use crate::metric::{artanh, pseudo_disc};
use crate::orbit::{iterate, Orbit, StopRule, Truncation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeLabel {
    Identity,
    Elliptic,
    EllipticAutomorphism,
    Hyperbolic,
    Parabolic,
}

impl TypeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TypeLabel::Identity => "identity",
            TypeLabel::Elliptic => "elliptic",
            TypeLabel::EllipticAutomorphism => "elliptic-automorphism",
            TypeLabel::Hyperbolic => "hyperbolic",
            TypeLabel::Parabolic => "parabolic",
        }
    }

    pub fn is_elliptic(self) -> bool {
        matches!(self, TypeLabel::Elliptic | TypeLabel::EllipticAutomorphism)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DwKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DWReport {
    pub location: C64,
    pub kind: DwKind,
    /// Angular derivative at a boundary point, `|φ'(τ)|` at an interior one.
    pub multiplier: f64,
    pub multiplier_error: f64,
    pub type_label: TypeLabel,
    /// `|φ(τ) − τ|` for interior points, the multiplier extrapolation error otherwise.
    pub residual: f64,
    pub automorphism: bool,
    /// Largest distance between per-seed location estimates.
    pub seed_spread: f64,
    /// Parabolic by tolerance but with `1 − μ` not negligible.
    pub borderline: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwOptions {
    pub seeds: Vec<C64>,
    pub n_max: usize,
    pub agree_tol: f64,
    pub tol_mult: f64,
    pub automorphism_tol: f64,
    pub automorphism_pairs: usize,
    pub rng_seed: u64,
}

pub fn default_seeds() -> Vec<C64> {
    vec![
        C64::new(0.0, 0.0),
        C64::new(0.5, 0.0),
        C64::new(0.0, -0.5),
        C64::new(-0.4, 0.3),
        C64::new(0.2, 0.6),
    ]
}

impl Default for DwOptions {
    fn default() -> Self {
        DwOptions {
            seeds: default_seeds(),
            n_max: 16384,
            agree_tol: 1e-6,
            tol_mult: 1e-4,
            automorphism_tol: 1e-10,
            automorphism_pairs: 64,
            rng_seed: 7,
        }
    }
}

fn random_disc_point(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.gen::<f64>().sqrt();
    C64::from_polar(r, std::f64::consts::TAU * rng.gen::<f64>())
}

/// `max |φ(z) − z|` over a small grid.
pub fn identity_defect(map: &MapExpr) -> Result<f64> {
    let g = SampleGrid::new(16, 0.9, 1);
    let mut worst = 0.0f64;
    for z in g.points {
        worst = worst.max((map.eval(z)? - z).norm());
    }
    Ok(worst)
}

/// Schwarz–Pick equality on random pairs.
pub fn is_automorphism(map: &MapExpr, pairs: usize, tol: f64, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let z = random_disc_point(&mut rng, 0.9);
        let w = random_disc_point(&mut rng, 0.9);
        let before = pseudo_disc(z, w)?;
        let (fz, fw) = (map.eval(z)?, map.eval(w)?);
        if fz.norm() >= 1.0 || fw.norm() >= 1.0 {
            return Ok(false);
        }
        if (pseudo_disc(fz, fw)? - before).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Newton's method on `φ(z) − z`.
///
/// Accepts a root only when it is a genuine interior fixed point: inside
/// `|z| < 1 − 1e−9`, with pseudohyperbolic residual below `1e−10`, and,
/// unless `automorphism` is set, attracting with `|φ'| ≤ 1 − 1e−6`.
pub fn interior_fixed_point(map: &MapExpr, start: C64, automorphism: bool) -> Option<C64> {
    let mut z = start;
    for _ in 0..100 {
        let (v, d) = map.eval_deriv(z).ok()?;
        let gp = d - 1.0;
        if gp.norm() == 0.0 {
            return None;
        }
        let step = (v - z) / gp;
        z -= step;
        if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 2.0 {
            return None;
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    if z.norm() >= 1.0 - 1e-9 {
        return None;
    }
    let (v, d) = map.eval_deriv(z).ok()?;
    let residual = pseudo_disc(z, v).ok()?;
    let attracting = automorphism || d.norm() <= 1.0 - 1e-6;
    (residual < 1e-10 && attracting).then_some(z)
}

fn boundary_direction(orbit: &Orbit) -> C64 {
    let p = &orbit.points;
    let n = p.len() - 1;
    let unit = |z: C64| if z.norm() > 0.0 { z / z.norm() } else { z };
    let u = if n >= 8 { aitken(unit(p[n / 4]), unit(p[n / 2]), unit(p[n])) } else { unit(p[n]) };
    unit(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierEstimate {
    pub value: f64,
    pub error: f64,
}

/// Angular derivative at a boundary fixed point `τ` from `φ'(r_k τ)`, `r_k = 1 − 2^{−k}`.
pub fn estimate_multiplier(map: &MapExpr, tau: C64) -> Result<MultiplierEstimate> {
    if (tau.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("{tau} is not a boundary point")));
    }
    let mut seq = Vec::new();
    for k in 4..=16 {
        let r = 1.0 - 0.5f64.powi(k);
        seq.push(C64::new(map.deriv(tau * r)?.re, 0.0));
    }
    let (lim, err) = richardson_limit(&seq).expect("thirteen radial levels");
    if err > 1e-4 {
        return Err(Error::Inconclusive(format!(
            "radial multiplier extrapolation did not settle (last change {err:.3e})"
        )));
    }
    Ok(MultiplierEstimate { value: lim.re, error: err })
}

pub fn estimate_dw(map: &MapExpr, seeds: &[C64], n_max: usize) -> Result<DWReport> {
    let opts = DwOptions { seeds: seeds.to_vec(), n_max, ..DwOptions::default() };
    estimate_dw_with(map, &opts)
}

pub fn estimate_dw_with(map: &MapExpr, opts: &DwOptions) -> Result<DWReport> {
    if opts.seeds.is_empty() {
        return Err(Error::Domain("at least one seed is required".into()));
    }
    let defect = identity_defect(map)?;
    if defect <= 1e-12 {
        return Ok(DWReport {
            location: C64::new(0.0, 0.0),
            kind: DwKind::Interior,
            multiplier: 1.0,
            multiplier_error: 0.0,
            type_label: TypeLabel::Identity,
            residual: defect,
            automorphism: true,
            seed_spread: 0.0,
            borderline: false,
        });
    }
    let auto = is_automorphism(map, opts.automorphism_pairs, opts.automorphism_tol, opts.rng_seed)?;
    if auto {
        let starts = std::iter::once(C64::new(0.0, 0.0)).chain(opts.seeds.iter().copied());
        if let Some(z) = starts.filter_map(|s| interior_fixed_point(map, s, true)).next() {
            return interior_report(map, z, true, 0.0, opts);
        }
    }

    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for &s in &opts.seeds {
        let orbit = iterate(map, s, opts.n_max, StopRule::default())?;
        match interior_fixed_point(map, orbit.last(), false) {
            Some(z) => interior.push(z),
            None => boundary.push(boundary_direction(&orbit)),
        }
    }
    if !interior.is_empty() && !boundary.is_empty() {
        return Err(Error::Ambiguity(format!(
            "{} seeds converge inside the disc and {} to the boundary",
            interior.len(),
            boundary.len()
        )));
    }
    let pts = if interior.is_empty() { &boundary } else { &interior };
    let spread = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| (a - b).norm()))
        .fold(0.0f64, f64::max);
    if spread > opts.agree_tol {
        return Err(Error::Ambiguity(format!("seed estimates differ by {spread:.3e}")));
    }
    if !interior.is_empty() {
        return interior_report(map, interior[0], auto, spread, opts);
    }
    let mean = boundary.iter().sum::<C64>() / boundary.len() as f64;
    let tau = mean / mean.norm();
    let m = estimate_multiplier(map, tau)?;
    if !(m.value > 0.0 && m.value <= 1.0 + 1e-6) {
        return Err(Error::Inconclusive(format!("multiplier {} outside (0, 1]", m.value)));
    }
    let gap = (1.0 - m.value).abs();
    let type_label = if gap <= opts.tol_mult { TypeLabel::Parabolic } else { TypeLabel::Hyperbolic };
    Ok(DWReport {
        location: tau,
        kind: DwKind::Boundary,
        multiplier: m.value,
        multiplier_error: m.error,
        type_label,
        residual: m.error,
        automorphism: auto,
        seed_spread: spread,
        borderline: type_label == TypeLabel::Parabolic && gap > opts.tol_mult / 10.0,
    })
}

fn interior_report(map: &MapExpr, z: C64, auto: bool, spread: f64, _opts: &DwOptions) -> Result<DWReport> {
    let (v, d) = map.eval_deriv(z)?;
    Ok(DWReport {
        location: z,
        kind: DwKind::Interior,
        multiplier: d.norm(),
        multiplier_error: 0.0,
        type_label: if auto { TypeLabel::EllipticAutomorphism } else { TypeLabel::Elliptic },
        residual: (v - z).norm(),
        automorphism: auto,
        seed_spread: spread,
        borderline: false,
    })
}

/// Classification with default seeds and tolerances.
pub fn classify(map: &MapExpr) -> Result<DWReport> {
    estimate_dw_with(map, &DwOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepDecision {
    Zero,
    Positive,
    Inconclusive,
}

impl StepDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            StepDecision::Zero => "zero",
            StepDecision::Positive => "positive",
            StepDecision::Inconclusive => "inconclusive",
        }
    }
}

/// Thresholds for the finite-window step decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepThresholds {
    pub zero_last: f64,
    pub zero_decay: f64,
    pub positive_floor: f64,
    pub positive_drift: f64,
    pub q_zero: f64,
}

impl Default for StepThresholds {
    fn default() -> Self {
        StepThresholds { zero_last: 0.02, zero_decay: 10.0, positive_floor: 0.1, positive_drift: 0.01, q_zero: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub z0: C64,
    /// `D_h φ^n(z_0)` for `n = 0 … N`.
    pub distortion_seq: Vec<f64>,
    /// Hyperbolic distance `ρ(z_n, z_{n+1})` for `n = 0 … N−1`.
    pub q_seq: Vec<f64>,
    pub decision: StepDecision,
    pub q_decision: StepDecision,
    pub distortion_limit: f64,
    pub q_limit: f64,
    pub derivative_vanished: bool,
    /// Largest relative increase beyond the rounding allowance; zero when monotone.
    pub monotonicity_excess: f64,
    pub truncation: Truncation,
}

/// Orbits stop this close to the circle so `1 − |z|` keeps relative precision.
pub const STEP_BOUNDARY_MARGIN: f64 = 1e-10;

fn one_minus_sq(z: C64) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

fn tail_limit(seq: &[f64]) -> f64 {
    let n = seq.len();
    if n == 0 {
        return f64::NAN;
    }
    if n < 9 {
        return seq[n - 1];
    }
    let r = |x: f64| C64::new(x, 0.0);
    let v = aitken(r(seq[(n - 1) / 4]), r(seq[(n - 1) / 2]), r(seq[n - 1])).re;
    v.max(0.0)
}

fn excess(seq: &[f64], allowance: impl Fn(usize) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..seq.len().saturating_sub(1) {
        let (a, b) = (seq[k], seq[k + 1]);
        if a > 0.0 {
            worst = worst.max((b / a - 1.0 - allowance(k)).max(0.0));
        } else if b > 0.0 {
            worst = f64::INFINITY;
        }
    }
    worst
}

pub fn step_sequences(map: &MapExpr, z0: C64, n_max: usize) -> Result<StepReport> {
    step_sequences_with(map, z0, n_max, &StepThresholds::default())
}

pub fn step_sequences_with(map: &MapExpr, z0: C64, n_max: usize, th: &StepThresholds) -> Result<StepReport> {
    let stop = StopRule { boundary_margin: STEP_BOUNDARY_MARGIN, ..StopRule::no_stagnation() };
    let orbit = iterate(map, z0, n_max, stop)?;
    let p = &orbit.points;
    let base = one_minus_sq(z0).ln();
    let mut log_sum = 0.0;
    let mut vanished = false;
    let mut distortion = Vec::with_capacity(p.len());
    distortion.push(1.0);
    for (k, s) in orbit.step_log_deriv.iter().enumerate() {
        log_sum += s.log_mag;
        if log_sum == f64::NEG_INFINITY {
            vanished = true;
        }
        distortion.push(if vanished { 0.0 } else { (base + log_sum - one_minus_sq(p[k + 1]).ln()).exp() });
    }
    let mut q = Vec::with_capacity(p.len().saturating_sub(1));
    for w in p.windows(2) {
        q.push(artanh(pseudo_disc(w[0], w[1])?));
    }
    let eps = f64::EPSILON;
    let gap = |z: C64| (1.0 - z.norm()).max(f64::MIN_POSITIVE);
    let d_excess = excess(&distortion, |k| 1e-12 + 8.0 * eps * (1.0 / gap(p[k]) + 1.0 / gap(p[k + 1])));
    let q_excess = excess(&q, |k| {
        let d = (p[k + 1] - p[k + 2]).norm().max(f64::MIN_POSITIVE);
        1e-12 + 8.0 * eps * (1.0 / d + 1.0 / gap(p[k + 1]) + 1.0 / gap(p[k + 2]))
    });
    let decision = if vanished { StepDecision::Zero } else { decide_tail(&distortion, th) };
    let q_limit = tail_limit(&q);
    let q_decision = q_decide(&q, th);
    Ok(StepReport {
        z0,
        distortion_limit: tail_limit(&distortion),
        q_limit,
        distortion_seq: distortion,
        q_seq: q,
        decision,
        q_decision,
        derivative_vanished: vanished,
        monotonicity_excess: d_excess.max(q_excess),
        truncation: orbit.truncation,
    })
}

/// Zero when the last term is below `q_zero`, positive when the last quarter is flat to
/// within `positive_drift`.
pub fn q_decide(q: &[f64], th: &StepThresholds) -> StepDecision {
    let n = q.len();
    if n < 4 {
        return StepDecision::Inconclusive;
    }
    let last = q[n - 1];
    if last < th.q_zero {
        return StepDecision::Zero;
    }
    let tail = &q[n - n / 4..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (hi - last) / hi < th.positive_drift {
        StepDecision::Positive
    } else {
        StepDecision::Inconclusive
    }
}

/// Zero, positive or inconclusive from the tail of a non-increasing sequence.
pub fn decide_tail(seq: &[f64], th: &StepThresholds) -> StepDecision {
    let n = seq.len();
    if n < 4 {
        return StepDecision::Inconclusive;
    }
    let last = seq[n - 1];
    if last < th.zero_last && seq[0] >= th.zero_decay * last {
        return StepDecision::Zero;
    }
    let tail = &seq[n - n / 4..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo >= th.positive_floor && (hi - lo) / hi < th.positive_drift {
        return StepDecision::Positive;
    }
    StepDecision::Inconclusive
}

pub fn step_decide(report: &StepReport) -> StepDecision {
    step_decide_with(report, &StepThresholds::default())
}

pub fn step_decide_with(report: &StepReport, th: &StepThresholds) -> StepDecision {
    if report.derivative_vanished {
        return StepDecision::Zero;
    }
    decide_tail(&report.distortion_seq, th)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_map;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn newton_finds_interior_point() {
        let f = parse_map("z/(2-z)").unwrap();
        assert!(interior_fixed_point(&f, c(0.3, 0.1), false).unwrap().norm() < 1e-15);
        let g = parse_map("(z+1)/2").unwrap();
        assert!(interior_fixed_point(&g, c(0.3, 0.0), false).is_none());
    }

    #[test]
    fn identity_is_labelled() {
        let r = classify(&MapExpr::var()).unwrap();
        assert_eq!(r.type_label, TypeLabel::Identity);
    }

    #[test]
    fn synthetic_slow_sequence_is_inconclusive() {
        let seq: Vec<f64> = (2..=64).map(|n| 0.5 + 1.0 / (n as f64).ln()).collect();
        assert_eq!(decide_tail(&seq, &StepThresholds::default()), StepDecision::Inconclusive);
    }

    #[test]
    fn tail_rules() {
        let th = StepThresholds::default();
        assert_eq!(decide_tail(&[1.0; 16], &th), StepDecision::Positive);
        let decay: Vec<f64> = (1..=100).map(|n| 1.0 / n as f64).collect();
        assert_eq!(decide_tail(&decay, &th), StepDecision::Zero);
        assert_eq!(decide_tail(&[1.0, 1.0], &th), StepDecision::Inconclusive);
    }

    #[test]
    fn vanishing_derivative_flagged() {
        let f = parse_map("(1+z^2)/2").unwrap();
        let r = step_sequences(&f, c(0.0, 0.0), 8).unwrap();
        assert!(r.derivative_vanished);
        assert_eq!(step_decide(&r), StepDecision::Zero);
        assert!(r.distortion_seq[1..].iter().all(|&d| d == 0.0));
    }
}
