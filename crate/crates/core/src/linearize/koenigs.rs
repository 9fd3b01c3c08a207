use crate::dynamics::{classify, step_decide, step_sequences, DWReport, StepDecision, TypeLabel};
use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use crate::extrapolate::Barycentric;
use crate::grid::SampleGrid;
use crate::orbit::{iterate, nth_iterate_deriv, StopRule, Truncation};
use serde::Serialize;
use std::f64::consts::PI;

/// How `b_n` is read off the iterate `φ^n(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KoenigsScheme {
    /// `(φ^n(z) − w_n)/(w_{n+1} − w_n)`.
    Quotient,
    /// Inverts a local interpolant of `t ↦ w_t` through `2k+1` base-orbit nodes.
    Interpolated { half_nodes: usize },
}

impl Default for KoenigsScheme {
    fn default() -> Self {
        KoenigsScheme::Interpolated { half_nodes: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    pub grid: SampleGrid,
}

/// Approximate Koenigs function normalized by `b_n(0) = 0`.
#[derive(Debug, Clone)]
pub struct KoenigsApprox {
    pub phi: MapExpr,
    pub n: usize,
    pub scheme: KoenigsScheme,
    /// `w_0 … w_L` with `w_k = φ^k(0)`.
    base: Vec<C64>,
}

/// Zero-step parabolic check used as the precondition of the linearizers.
pub fn require_zero_step(phi: &MapExpr) -> Result<DWReport> {
    let dw = classify(phi)?;
    if dw.type_label != TypeLabel::Parabolic {
        return Err(Error::Precondition(format!("map is {}, not parabolic", dw.type_label.as_str())));
    }
    if dw.automorphism {
        return Err(Error::Precondition("parabolic automorphisms have positive hyperbolic step".into()));
    }
    let step = step_sequences(phi, C64::new(0.3, 0.0), 4096)?;
    match step_decide(&step) {
        StepDecision::Zero => Ok(dw),
        d => Err(Error::Precondition(format!("hyperbolic step decision is {}", d.as_str()))),
    }
}

/// Checked construction with the default scheme.
pub fn koenigs_bp(phi: &MapExpr, n: usize) -> Result<KoenigsApprox> {
    require_zero_step(phi)?;
    KoenigsApprox::new(phi, n, KoenigsScheme::default())
}

fn chebyshev_nodes(c: usize, h: usize, k: usize) -> Vec<usize> {
    let m = 2 * k + 1;
    let mut nodes: Vec<usize> = (0..m)
        .map(|j| {
            let x = (PI * (2 * j + 1) as f64 / (2 * m) as f64).cos();
            (c as f64 + (h as f64 * x).round()) as usize
        })
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    if nodes.len() < m {
        nodes = (c - k..=c + k).collect();
    }
    nodes
}

impl KoenigsApprox {
    /// Builds the evaluator without checking the step precondition.
    pub fn new(phi: &MapExpr, n: usize, scheme: KoenigsScheme) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("iteration depth must be positive".into()));
        }
        if let KoenigsScheme::Interpolated { half_nodes } = scheme {
            if half_nodes == 0 || half_nodes > 16 {
                return Err(Error::Domain(format!("half_nodes {half_nodes} outside 1..=16")));
            }
            if n < 2 * half_nodes {
                return Err(Error::Domain(format!("depth {n} below 2·half_nodes")));
            }
        }
        let len = 4 * n + 64;
        let orbit = iterate(phi, C64::new(0.0, 0.0), len, StopRule::no_stagnation())?;
        if orbit.truncation != Truncation::ReachedN {
            return Err(Error::Degenerate(format!(
                "base orbit stopped after {} steps ({})",
                orbit.len() - 1,
                orbit.truncation.as_str()
            )));
        }
        let base = orbit.points;
        if base[n + 1] == base[n] {
            return Err(Error::Degenerate(format!("w_{} = w_{}", n + 1, n)));
        }
        Ok(KoenigsApprox { phi: phi.clone(), n, scheme, base })
    }

    /// `w_k = φ^k(0)` for `k ≤ 4n + 64`.
    pub fn base_orbit(&self) -> &[C64] {
        &self.base
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        Ok(self.eval_deriv(z)?.0)
    }

    /// `b_n(z)` and `b_n'(z)`.
    pub fn eval_deriv(&self, z: C64) -> Result<(C64, C64)> {
        let n = self.n;
        let (zn, dn) = nth_iterate_deriv(&self.phi, z, n)?;
        let q = self.base[n + 1] - self.base[n];
        let b1 = (zn - self.base[n]) / q;
        match self.scheme {
            KoenigsScheme::Quotient => Ok((b1, dn / q)),
            KoenigsScheme::Interpolated { half_nodes } => {
                let (t, dp) = self.invert(zn, C64::new(n as f64, 0.0) + b1, half_nodes)?;
                Ok((t - n as f64, dn / dp))
            }
        }
    }

    /// Coarse position of `target` along the base orbit by local quotients.
    fn locate(&self, target: C64, mut t: C64, lo: usize, hi: usize) -> C64 {
        let mut prev = usize::MAX;
        for _ in 0..200 {
            let c = (t.re.round().max(lo as f64).min(hi as f64)) as usize;
            if c == prev {
                break;
            }
            prev = c;
            let step = self.base[c + 1] - self.base[c];
            t = C64::new(c as f64, 0.0) + (target - self.base[c]) / step;
            if !(t.re.is_finite() && t.im.is_finite()) {
                return C64::new(c as f64, 0.0);
            }
        }
        t
    }

    /// Solves `w_T = target` for complex `T`, returning `T` and `dw_T/dT`.
    fn invert(&self, target: C64, t0: C64, k: usize) -> Result<(C64, C64)> {
        let last = self.base.len() - 1;
        let lo = 2 * k;
        let hi = last - 2 * k;
        let mut t = self.locate(target, t0, lo, hi);
        let mut dp = C64::new(0.0, 0.0);
        for attempt in 0..6 {
            let c = (t.re.round().max(lo as f64).min(hi as f64)) as usize;
            let spread = ((2.0 * (t - c as f64).norm()).ceil() as usize).max(2 * k);
            let spread = spread.min(c / 2).min(last - c).max(k);
            let nodes = chebyshev_nodes(c, spread, k);
            let wc = self.base[c];
            let values = nodes.iter().map(|&j| self.base[j] - wc).collect();
            let interp = Barycentric::new(nodes.iter().map(|&j| j as f64).collect(), values);
            let y = target - wc;
            let reach = 4.0 * spread as f64;
            for _ in 0..60 {
                let (p, d) = interp.eval_deriv(t);
                if d.norm() == 0.0 {
                    return Err(Error::Degenerate("flat interpolant".into()));
                }
                let step = (p - y) / d;
                t -= step;
                if !(t.re.is_finite() && t.im.is_finite()) {
                    return Err(Error::Overflow("interpolant inversion diverged".into()));
                }
                if (t - c as f64).norm() > reach || step.norm() <= 1e-14 * t.norm().max(1.0) {
                    break;
                }
            }
            dp = interp.eval_deriv(t).1;
            let off = (t.re - c as f64).abs();
            if off <= (spread as f64 / 2.0).max(1.0) {
                return Ok((t, dp));
            }
            if attempt == 5 {
                break;
            }
        }
        if t.re < lo as f64 || t.re > hi as f64 {
            return Err(Error::Domain(format!("point lies outside the tabulated orbit range (T = {t})")));
        }
        Ok((t, dp))
    }

    /// Abel residual `|b(φ(z)) − b(z) − 1|` over a grid.
    pub fn residual_stats(&self, grid: &SampleGrid) -> Result<ResidualStats> {
        let mut max = 0.0f64;
        let mut sum = 0.0;
        for &z in &grid.points {
            let b = self.eval(z)?;
            let r = abel_residual(&|w| self.eval(w), &self.phi, z, C64::new(1.0, 0.0), Some(b))?;
            max = max.max(r);
            sum += r;
        }
        Ok(ResidualStats { max, mean: sum / grid.points.len().max(1) as f64, grid: grid.clone() })
    }
}

/// `|h(φ(z)) − h(z) − c|`; `hz` may supply a precomputed `h(z)`.
pub fn abel_residual(
    h: &dyn Fn(C64) -> Result<C64>,
    phi: &MapExpr,
    z: C64,
    c: C64,
    hz: Option<C64>,
) -> Result<f64> {
    let hz = match hz {
        Some(v) => v,
        None => h(z)?,
    };
    Ok((h(phi.eval(z)?)? - hz - c).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{slit, slit_translate};

    #[test]
    fn normalized_at_origin() {
        let phi = slit_translate(1.0);
        for scheme in [KoenigsScheme::Quotient, KoenigsScheme::Interpolated { half_nodes: 3 }] {
            let b = KoenigsApprox::new(&phi, 64, scheme).unwrap();
            assert_eq!(b.eval(C64::new(0.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn derivative_matches_difference() {
        let phi = slit_translate(1.0);
        let b = KoenigsApprox::new(&phi, 256, KoenigsScheme::default()).unwrap();
        let z = C64::new(0.2, 0.3);
        let h = 1e-6;
        let fd = (b.eval(z + h).unwrap() - b.eval(z - h).unwrap()) / (2.0 * h);
        let (_, d) = b.eval_deriv(z).unwrap();
        assert!((fd - d).norm() < 1e-5 * d.norm());
        let exact = slit().deriv(z).unwrap();
        assert!((d - exact).norm() < 1e-3 * exact.norm());
    }

    #[test]
    fn chebyshev_nodes_include_centre() {
        let nodes = chebyshev_nodes(100, 6, 3);
        assert_eq!(nodes.len(), 7);
        assert!(nodes.contains(&100));
        let tight = chebyshev_nodes(100, 3, 3);
        assert_eq!(tight, (97..=103).collect::<Vec<_>>());
    }

    #[test]
    fn stagnation_is_degenerate() {
        let id = MapExpr::var();
        assert!(matches!(KoenigsApprox::new(&id, 8, KoenigsScheme::Quotient), Err(Error::Degenerate(_))));
    }

    #[test]
    fn abel_identity_case() {
        let id = MapExpr::var();
        let r = abel_residual(&|w| Ok(w), &id, C64::new(0.4, 0.1), C64::new(0.0, 0.0), None).unwrap();
        assert_eq!(r, 0.0);
    }
}
