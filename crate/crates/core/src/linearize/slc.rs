use super::koenigs::{require_zero_step, KoenigsApprox, KoenigsScheme};
use super::relations::commute_residual;
use crate::dynamics::{classify, identity_defect, DwKind};
use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use crate::extrapolate::richardson_limit;
use crate::grid::SampleGrid;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlcMethod {
    Angular,
    Koenigs,
    Hprime,
    All,
}

impl SlcMethod {
    fn wants(self, m: SlcMethod) -> bool {
        self == SlcMethod::All || self == m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodEstimate {
    pub status: MethodStatus,
    pub value: Option<C64>,
    /// Extrapolation error, or grid spread for the Koenigs method.
    pub error: f64,
    pub note: String,
}

impl MethodEstimate {
    fn skipped(note: &str) -> Self {
        MethodEstimate { status: MethodStatus::Skipped, value: None, error: 0.0, note: note.into() }
    }

    fn ok(value: C64, error: f64) -> Self {
        MethodEstimate { status: MethodStatus::Ok, value: Some(value), error, note: String::new() }
    }

    fn failed(error: f64, note: String) -> Self {
        MethodEstimate { status: MethodStatus::Failed, value: None, error, note }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SLCResult {
    pub c: C64,
    /// Set when `ψ` is the identity, the only case with `c = 0`.
    pub identity: bool,
    pub dw: C64,
    pub angular: MethodEstimate,
    pub koenigs: MethodEstimate,
    pub hprime: MethodEstimate,
    /// Largest pairwise distance between successful methods.
    pub disagreement: f64,
    pub commute_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlcOptions {
    pub n: usize,
    pub scheme: KoenigsScheme,
    pub grid: SampleGrid,
    /// Radial levels `k` with `r_k = 1 − 2^{−k}`.
    pub angular_levels: std::ops::RangeInclusive<i32>,
    pub fail_tol: f64,
    /// Levels where `|φ(z) − z|` or `|ψ(z) − z|` fall below this are discarded.
    pub noise_floor: f64,
    /// Orbit indices `m = 1 + 2^i` for the derivative-product method.
    pub hprime_levels: std::ops::RangeInclusive<u32>,
    pub dw_tol: f64,
}

impl Default for SlcOptions {
    fn default() -> Self {
        SlcOptions {
            n: 4096,
            scheme: KoenigsScheme::Interpolated { half_nodes: 4 },
            grid: SampleGrid::default(),
            angular_levels: 4..=14,
            fail_tol: 1e-3,
            noise_floor: 1e-10,
            hprime_levels: 2..=12,
            dw_tol: 1e-6,
        }
    }
}

pub fn slc_estimate(phi: &MapExpr, psi: &MapExpr, method: SlcMethod) -> Result<SLCResult> {
    slc_estimate_with(phi, psi, method, &SlcOptions::default())
}

pub fn slc_estimate_with(phi: &MapExpr, psi: &MapExpr, method: SlcMethod, opts: &SlcOptions) -> Result<SLCResult> {
    let dw = require_zero_step(phi)?;
    let tau = dw.location;
    let commute = commute_residual(phi, psi, &opts.grid)?;
    if identity_defect(psi)? <= 1e-12 {
        let zero = C64::new(0.0, 0.0);
        let pick = |m| if method.wants(m) { MethodEstimate::ok(zero, 0.0) } else { MethodEstimate::skipped("not requested") };
        return Ok(SLCResult {
            c: zero,
            identity: true,
            dw: tau,
            angular: pick(SlcMethod::Angular),
            koenigs: pick(SlcMethod::Koenigs),
            hprime: pick(SlcMethod::Hprime),
            disagreement: 0.0,
            commute_residual: commute,
        });
    }
    let dw_psi = classify(psi)?;
    if dw_psi.kind != DwKind::Boundary || (dw_psi.location - tau).norm() > opts.dw_tol {
        return Err(Error::Precondition(format!(
            "Denjoy-Wolff points differ: {} vs {}",
            fmt_c(tau),
            fmt_c(dw_psi.location)
        )));
    }

    let angular = if method.wants(SlcMethod::Angular) {
        angular_method(phi, psi, tau, opts)?
    } else {
        MethodEstimate::skipped("not requested")
    };
    let approx = if method.wants(SlcMethod::Koenigs) || method.wants(SlcMethod::Hprime) {
        Some(KoenigsApprox::new(phi, opts.n, opts.scheme)?)
    } else {
        None
    };
    let koenigs = match (&approx, method.wants(SlcMethod::Koenigs)) {
        (Some(b), true) => koenigs_method(b, psi, &opts.grid)?,
        _ => MethodEstimate::skipped("not requested"),
    };
    let hprime = match (&approx, method.wants(SlcMethod::Hprime)) {
        (Some(b), true) => hprime_method(b, psi, opts)?,
        _ => MethodEstimate::skipped("not requested"),
    };

    let values: Vec<C64> = [&koenigs, &angular, &hprime].iter().filter_map(|m| m.value).collect();
    let Some(&c) = values.first() else {
        return Err(Error::Inconclusive("every requested method failed".into()));
    };
    let disagreement = values
        .iter()
        .flat_map(|a| values.iter().map(move |b| (a - b).norm()))
        .fold(0.0f64, f64::max);
    Ok(SLCResult { c, identity: false, dw: tau, angular, koenigs, hprime, disagreement, commute_residual: commute })
}

fn fmt_c(z: C64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn angular_method(phi: &MapExpr, psi: &MapExpr, tau: C64, opts: &SlcOptions) -> Result<MethodEstimate> {
    let mut seq = Vec::new();
    for k in opts.angular_levels.clone() {
        let z = tau * (1.0 - 0.5f64.powi(k));
        let dphi = phi.eval(z)? - z;
        let dpsi = psi.eval(z)? - z;
        if dphi.norm() < opts.noise_floor || dpsi.norm() < opts.noise_floor {
            break;
        }
        seq.push(dpsi / dphi);
    }
    if seq.len() < 4 {
        return Ok(MethodEstimate::failed(f64::INFINITY, format!("only {} radial levels above the noise floor", seq.len())));
    }
    let (lim, err) = richardson_limit(&seq).expect("at least four levels");
    Ok(if err > opts.fail_tol {
        MethodEstimate::failed(err, format!("extrapolants differ by {err:.3e}"))
    } else {
        let mut m = MethodEstimate::ok(lim, err);
        m.note = format!("{} radial levels", seq.len());
        m
    })
}

fn koenigs_method(b: &KoenigsApprox, psi: &MapExpr, grid: &SampleGrid) -> Result<MethodEstimate> {
    let mut vals = Vec::with_capacity(grid.points.len());
    for &z in &grid.points {
        vals.push(b.eval(psi.eval(z)?)? - b.eval(z)?);
    }
    let mean = vals.iter().sum::<C64>() / vals.len().max(1) as f64;
    let spread = vals.iter().map(|v| (v - mean).norm()).fold(0.0f64, f64::max);
    Ok(MethodEstimate::ok(mean, spread))
}

/// `h'(w_m)(ψ(w_m) − w_m)` along the base orbit, `m = 1 + 2^i`.
pub(crate) fn orbit_products(b: &KoenigsApprox, psi: &MapExpr, levels: std::ops::RangeInclusive<u32>) -> Result<Vec<(usize, C64, C64)>> {
    let w = b.base_orbit();
    let (_, h1) = b.eval_deriv(w[1])?;
    let mut out = Vec::new();
    let mut d = C64::new(1.0, 0.0);
    let mut j = 1usize;
    for i in levels {
        let m = 1 + (1usize << i);
        if m > b.n {
            break;
        }
        while j < m {
            d *= b.phi.deriv(w[j])?;
            j += 1;
        }
        let psi_w = psi.eval(w[m])?;
        out.push((m, psi_w, h1 / d * (psi_w - w[m])));
    }
    Ok(out)
}

fn hprime_method(b: &KoenigsApprox, psi: &MapExpr, opts: &SlcOptions) -> Result<MethodEstimate> {
    let prods = orbit_products(b, psi, opts.hprime_levels.clone())?;
    let seq: Vec<C64> = prods.iter().map(|p| p.2).collect();
    if seq.len() < 4 {
        return Ok(MethodEstimate::failed(f64::INFINITY, "iteration depth too small for the orbit path".into()));
    }
    let (lim, err) = richardson_limit(&seq).expect("at least four levels");
    Ok(if err > opts.fail_tol {
        MethodEstimate::failed(err, format!("extrapolants differ by {err:.3e}"))
    } else {
        MethodEstimate::ok(lim, err)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioLimit {
    /// `|limit − 1|`, absent when skipped.
    pub deviation: Option<f64>,
    pub limit: Option<C64>,
    pub error: f64,
    pub skipped: bool,
    pub note: String,
}

pub fn ratio_limit_check(phi: &MapExpr, psi: &MapExpr) -> Result<RatioLimit> {
    ratio_limit_check_with(phi, psi, &SlcOptions::default())
}

/// Quotient `(h(ψ z) − h(z))/(h'(z)(ψ(z) − z))` along the base orbit, extrapolated.
pub fn ratio_limit_check_with(phi: &MapExpr, psi: &MapExpr, opts: &SlcOptions) -> Result<RatioLimit> {
    if identity_defect(psi)? <= 1e-12 {
        return Ok(RatioLimit {
            deviation: None,
            limit: None,
            error: 0.0,
            skipped: true,
            note: "psi is the identity; the quotient is 0/0".into(),
        });
    }
    require_zero_step(phi)?;
    let b = KoenigsApprox::new(phi, opts.n, opts.scheme)?;
    let prods = orbit_products(&b, psi, opts.hprime_levels.clone())?;
    let mut seq = Vec::with_capacity(prods.len());
    for (m, psi_w, p) in prods {
        seq.push((b.eval(psi_w)? - m as f64) / p);
    }
    if seq.len() < 4 {
        return Err(Error::Inconclusive("iteration depth too small for the orbit path".into()));
    }
    let (lim, err) = richardson_limit(&seq).expect("at least four levels");
    if err > opts.fail_tol {
        return Err(Error::Inconclusive(format!("ratio extrapolants differ by {err:.3e}")));
    }
    Ok(RatioLimit { deviation: Some((lim - 1.0).norm()), limit: Some(lim), error: err, skipped: false, note: String::new() })
}
