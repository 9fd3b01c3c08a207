//! One-parameter semigroups `φ_t = h⁻¹ ∘ (h + t e^{iθ})` over registered univalent maps.

use crate::dynamics::{classify, decide_tail, StepDecision, StepThresholds};
use crate::error::{Error, Result};
use crate::expr::{HalfPlane, MapExpr, C64};
use crate::grid::SampleGrid;
use crate::maps;
use serde::Serialize;
use std::f64::consts::PI;

/// Closed-form univalent maps with known image domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum RegisteredH {
    /// `((1+z)/(1−z))²` onto `ℂ ∖ (−∞, 0]`.
    Slit,
    /// `λ·((1+z)/(1−z))²`, same image.
    ScaledSlit { lambda: f64 },
    /// `(1+z)/(1−z)` onto the right half-plane.
    CayleyRight,
    /// `i(1+z)/(1−z)` onto the upper half-plane.
    CayleyUpper,
}

impl RegisteredH {
    /// Accepts `slit`, `slit:<λ>`, `cayley-rh`, `cayley-h`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        if let Some(l) = name.strip_prefix("slit:") {
            let lambda: f64 = l.parse().map_err(|_| Error::Domain(format!("bad scale `{l}`")))?;
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Domain("scale must be positive".into()));
            }
            return Ok(RegisteredH::ScaledSlit { lambda });
        }
        match name {
            "slit" => Ok(RegisteredH::Slit),
            "cayley-rh" => Ok(RegisteredH::CayleyRight),
            "cayley-h" => Ok(RegisteredH::CayleyUpper),
            other => Err(Error::Domain(format!(
                "unregistered map `{other}` (expected slit, slit:<scale>, cayley-rh, cayley-h)"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RegisteredH::Slit => "slit".into(),
            RegisteredH::ScaledSlit { lambda } => format!("slit:{lambda}"),
            RegisteredH::CayleyRight => "cayley-rh".into(),
            RegisteredH::CayleyUpper => "cayley-h".into(),
        }
    }

    pub fn forward(&self) -> MapExpr {
        let one = C64::new(1.0, 0.0);
        match *self {
            RegisteredH::Slit => maps::slit(),
            RegisteredH::ScaledSlit { lambda } => maps::scaled_slit(lambda),
            RegisteredH::CayleyRight => MapExpr::cayley(one, HalfPlane::Right).expect("unimodular"),
            RegisteredH::CayleyUpper => MapExpr::cayley(one, HalfPlane::Upper).expect("unimodular"),
        }
    }

    pub fn inverse(&self) -> MapExpr {
        let one = C64::new(1.0, 0.0);
        match *self {
            RegisteredH::Slit => maps::slit_inv(),
            RegisteredH::ScaledSlit { lambda } => maps::scaled_slit_inv(lambda),
            RegisteredH::CayleyRight => MapExpr::cayley_inv(one, HalfPlane::Right).expect("unimodular"),
            RegisteredH::CayleyUpper => MapExpr::cayley_inv(one, HalfPlane::Upper).expect("unimodular"),
        }
    }

    pub fn domain(&self) -> &'static str {
        match self {
            RegisteredH::Slit | RegisteredH::ScaledSlit { .. } => "C minus (-inf, 0]",
            RegisteredH::CayleyRight => "Re w > 0",
            RegisteredH::CayleyUpper => "Im w > 0",
        }
    }

    /// Checks `Ω + t e^{iθ} ⊂ Ω` for all `t ≥ 0`.
    pub fn admits(&self, theta: f64) -> Result<()> {
        let d = C64::from_polar(1.0, theta);
        let tol = 1e-12;
        let ok = match self {
            RegisteredH::Slit | RegisteredH::ScaledSlit { .. } => d.im.abs() <= tol && d.re > 0.0,
            RegisteredH::CayleyRight => d.re >= -tol,
            RegisteredH::CayleyUpper => d.im >= -tol,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "translation by t*e^(i*{theta}) does not keep {} inside itself",
                self.domain()
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub identity_error: f64,
    pub law_error: f64,
    pub grid: SampleGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupFamily {
    pub h: RegisteredH,
    pub theta: f64,
    pub domain: &'static str,
    /// Admissible times are `t ≥ t_min`.
    pub t_min: f64,
    pub validation: Validation,
    #[serde(skip)]
    forward: MapExpr,
    #[serde(skip)]
    inverse: MapExpr,
}

pub const IDENTITY_TOL: f64 = 1e-12;
pub const LAW_TOL: f64 = 1e-10;

pub fn build_family(h: RegisteredH, theta: f64) -> Result<SemigroupFamily> {
    if !theta.is_finite() {
        return Err(Error::Domain("direction must be finite".into()));
    }
    h.admits(theta)?;
    let mut fam = SemigroupFamily {
        h,
        theta,
        domain: h.domain(),
        t_min: 0.0,
        validation: Validation { identity_error: 0.0, law_error: 0.0, grid: SampleGrid::new(16, 0.9, 101) },
        forward: h.forward(),
        inverse: h.inverse(),
    };
    let grid = fam.validation.grid.clone();
    let times = [0.25, 0.5, 1.0];
    let (mut id_err, mut law_err) = (0.0f64, 0.0f64);
    for &z in &grid.points {
        id_err = id_err.max((fam.eval(0.0, z)? - z).norm());
        for &s in &times {
            for &t in &times {
                let lhs = fam.eval(s + t, z)?;
                let rhs = fam.eval(s, fam.eval(t, z)?)?;
                law_err = law_err.max((lhs - rhs).norm());
            }
        }
    }
    fam.validation.identity_error = id_err;
    fam.validation.law_error = law_err;
    if id_err > IDENTITY_TOL || law_err > LAW_TOL {
        return Err(Error::Domain(format!(
            "semigroup laws fail on samples (identity {id_err:.3e}, composition {law_err:.3e})"
        )));
    }
    Ok(fam)
}

impl SemigroupFamily {
    pub fn direction(&self) -> C64 {
        C64::from_polar(1.0, self.theta)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t >= self.t_min && t.is_finite()) {
            return Err(Error::Domain(format!("time {t} outside [{}, inf)", self.t_min)));
        }
        Ok(())
    }

    /// `φ_t(z)`.
    pub fn eval(&self, t: f64, z: C64) -> Result<C64> {
        self.check_t(t)?;
        self.inverse.eval(self.forward.eval(z)? + self.direction() * t)
    }

    /// `φ_t` as an expression.
    pub fn member(&self, t: f64) -> Result<MapExpr> {
        self.check_t(t)?;
        maps::translate(&self.forward, &self.inverse, self.direction() * t)
    }

    /// `G(z) = e^{iθ}/h'(z)`.
    pub fn generator_closed_form(&self, z: C64) -> Result<C64> {
        let d = self.forward.deriv(z)?;
        if d.norm() == 0.0 {
            return Err(Error::Domain("h' vanishes".into()));
        }
        Ok(self.direction() / d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneratorEstimate {
    pub z: C64,
    pub g: C64,
    pub delta: f64,
    pub error: f64,
    pub closed_form: C64,
    pub closed_form_gap: f64,
    /// Error estimate above `1e−4`.
    pub unstable: bool,
}

/// One-sided second-order differences at `δ_k = δ_0·2^{−k}`, `k = 0…4`, with a Richardson
/// table eliminating the `δ², δ³, …` terms. `δ_0 ≤ 10⁻²` shrinks with the time a point
/// needs to reach the circle.
pub fn generator_estimate(family: &SemigroupFamily, z: C64) -> Result<GeneratorEstimate> {
    if !(z.norm() < 1.0) {
        return Err(Error::Domain(format!("{z} is not in the open disc")));
    }
    let diff = |d: f64| -> Result<C64> {
        Ok((z * -3.0 + family.eval(d, z)? * 4.0 - family.eval(2.0 * d, z)?) / (2.0 * d))
    };
    const LEVELS: usize = 5;
    let rough = (family.eval(1e-6, z)? - z).norm() / 1e-6;
    let reach = (1.0 - z.norm()) / rough.max(f64::MIN_POSITIVE);
    let d0 = (0.05 * reach).clamp(1.6e-5, 1e-2);
    let mut table: Vec<C64> = (0..LEVELS).map(|k| diff(d0 / 2f64.powi(k as i32))).collect::<Result<_>>()?;
    let mut error = f64::INFINITY;
    let mut best = table[LEVELS - 1];
    for order in 2..LEVELS + 1 {
        let f = 2f64.powi(order as i32);
        let next: Vec<C64> = table.windows(2).map(|w| (w[1] * f - w[0]) / (f - 1.0)).collect();
        if next.is_empty() {
            break;
        }
        let e = (next[next.len() - 1] - table[table.len() - 1]).norm();
        if e < error {
            error = e;
            best = next[next.len() - 1];
        }
        table = next;
    }
    let closed_form = family.generator_closed_form(z)?;
    Ok(GeneratorEstimate {
        z,
        g: best,
        delta: d0 / 2f64.powi(LEVELS as i32 - 1),
        error,
        closed_form,
        closed_form_gap: (best - closed_form).norm(),
        unstable: error > 1e-4,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionSample {
    pub t: f64,
    /// `φ_t(z)`.
    pub point: C64,
    /// `|G(φ_t z)|/(1 − |φ_t z|²)`.
    pub f: f64,
    /// `f / f(0)`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupStepReport {
    pub z: C64,
    pub samples: Vec<CriterionSample>,
    pub decision: StepDecision,
    /// Largest relative increase beyond the rounding allowance `1e−12 + 8ε(1/d_k + 1/d_{k+1})`,
    /// `d = 1 − |φ_t(z)|`.
    pub monotonicity_excess: f64,
}

pub fn zero_step_semigroup_check(family: &SemigroupFamily, z: C64, t_max: f64) -> Result<SemigroupStepReport> {
    zero_step_semigroup_check_with(family, z, t_max, &StepThresholds::default())
}

pub fn zero_step_semigroup_check_with(
    family: &SemigroupFamily,
    z: C64,
    t_max: f64,
    th: &StepThresholds,
) -> Result<SemigroupStepReport> {
    if !(t_max >= 1.0 && t_max.is_finite()) {
        return Err(Error::Domain("t_max must be at least 1".into()));
    }
    let dw = classify(&family.member(1.0)?)?;
    if dw.type_label.is_elliptic() {
        return Err(Error::Precondition(format!("time-one map is {}", dw.type_label.as_str())));
    }
    let f_at = |w: C64| -> Result<f64> {
        let r = w.norm();
        Ok(family.generator_closed_form(w)?.norm() / ((1.0 - r) * (1.0 + r)))
    };
    let f0 = f_at(z)?;
    let jmax = t_max.log2().ceil() as i32;
    let mut samples = vec![CriterionSample { t: 0.0, point: z, f: f0, normalized: 1.0 }];
    for j in 0..=jmax {
        let t = 2f64.powi(j);
        let w = family.eval(t, z)?;
        if !(w.norm() < 1.0) {
            break;
        }
        let f = f_at(w)?;
        samples.push(CriterionSample { t, point: w, f, normalized: f / f0 });
    }
    let norm: Vec<f64> = samples.iter().map(|s| s.normalized).collect();
    let gap = |w: C64| (1.0 - w.norm()).max(f64::MIN_POSITIVE);
    let mut excess = 0.0f64;
    for p in samples.windows(2) {
        let allowance = 1e-12 + 8.0 * f64::EPSILON * (1.0 / gap(p[0].point) + 1.0 / gap(p[1].point));
        excess = excess.max((p[1].normalized / p[0].normalized - 1.0 - allowance).max(0.0));
    }
    Ok(SemigroupStepReport { z, decision: decide_tail(&norm, th), samples, monotonicity_excess: excess })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmbedResult {
    pub t0: f64,
    pub residual: f64,
}

/// Golden-section search for `t` minimizing `max |φ(z) − φ_t(z)|` on the grid.
pub fn embed_search(phi: &MapExpr, family: &SemigroupFamily, t_range: (f64, f64), grid: &SampleGrid) -> Result<EmbedResult> {
    let (mut a, mut b) = t_range;
    if !(a >= family.t_min && b > a && b.is_finite()) {
        return Err(Error::Domain(format!("bad time interval [{a}, {b}]")));
    }
    let targets: Vec<C64> = grid.points.iter().map(|&z| phi.eval(z)).collect::<Result<_>>()?;
    let objective = |t: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for (&z, &target) in grid.points.iter().zip(&targets) {
            worst = worst.max((family.eval(t, z)? - target).norm());
        }
        Ok(worst)
    };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while b - a > 1e-12 * b.abs().max(1.0) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = objective(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = objective(x2)?;
        }
    }
    let t0 = 0.5 * (a + b);
    Ok(EmbedResult { t0, residual: objective(t0)? })
}

/// Parses a direction such as `0`, `1.5707963`, `pi/2`, `-pi/4`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Domain(format!("bad angle `{s}`"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, s),
    };
    let v = if let Some(rest) = body.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            PI
        } else if let Some(d) = rest.strip_prefix('/') {
            PI / d.trim().parse::<f64>().map_err(|_| bad())?
        } else {
            return Err(bad());
        }
    } else {
        body.parse::<f64>().map_err(|_| bad())?
    };
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        assert!(RegisteredH::Slit.admits(0.0).is_ok());
        assert!(RegisteredH::Slit.admits(PI).is_err());
        assert!(RegisteredH::Slit.admits(0.1).is_err());
        assert!(RegisteredH::CayleyRight.admits(PI / 2.0).is_ok());
        assert!(RegisteredH::CayleyRight.admits(-PI / 2.0).is_ok());
        assert!(RegisteredH::CayleyRight.admits(PI).is_err());
        assert!(RegisteredH::CayleyUpper.admits(0.0).is_ok());
        assert!(RegisteredH::CayleyUpper.admits(PI).is_ok());
        assert!(RegisteredH::CayleyUpper.admits(-0.5).is_err());
    }

    #[test]
    fn names_round_trip() {
        for h in [RegisteredH::Slit, RegisteredH::CayleyRight, RegisteredH::CayleyUpper, RegisteredH::ScaledSlit { lambda: 2.5 }] {
            assert_eq!(RegisteredH::parse(&h.label()).unwrap(), h);
        }
        assert!(RegisteredH::parse("koebe").is_err());
        assert!(RegisteredH::parse("slit:-1").is_err());
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert!(parse_angle("tau").is_err());
    }

    #[test]
    fn negative_time_rejected() {
        let fam = build_family(RegisteredH::Slit, 0.0).unwrap();
        assert!(fam.eval(-0.5, C64::new(0.0, 0.0)).is_err());
    }
}
