use super::koenigs::{require_zero_step, KoenigsApprox, KoenigsScheme};
use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use crate::grid::SampleGrid;
use crate::orbit::nth_iterate;

fn point_error(e: Error, z: C64) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{m} (at z = {z})")),
        Error::Overflow(m) => Error::Overflow(format!("{m} (at z = {z})")),
        other => other,
    }
}

/// `|φ(ψ(z)) − ψ(φ(z))|` at one point.
pub fn commute_residual_at(phi: &MapExpr, psi: &MapExpr, z: C64) -> Result<f64> {
    let a = phi.eval(psi.eval(z)?)?;
    let b = psi.eval(phi.eval(z)?)?;
    Ok((a - b).norm())
}

pub fn commute_residual(phi: &MapExpr, psi: &MapExpr, grid: &SampleGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in &grid.points {
        worst = worst.max(commute_residual_at(phi, psi, z).map_err(|e| point_error(e, z))?);
    }
    Ok(worst)
}

/// `max |ψ^n(z) − φ^m(z)|` over the grid.
pub fn check_power_relation(phi: &MapExpr, psi: &MapExpr, m: usize, n: usize, grid: &SampleGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for &z in &grid.points {
        let a = nth_iterate(psi, z, n).map_err(|e| point_error(e, z))?;
        let b = nth_iterate(phi, z, m).map_err(|e| point_error(e, z))?;
        worst = worst.max((a - b).norm());
    }
    Ok(worst)
}

/// Commute residual above which the ratio check refuses to run.
pub const COMMUTE_TOL: f64 = 1e-8;

/// `max |b^ψ_n(z) − c⁻¹ b^φ_n(z)|` with matched depths.
pub fn check_koenigs_ratio(
    phi: &MapExpr,
    psi: &MapExpr,
    c: C64,
    n: usize,
    scheme: KoenigsScheme,
    grid: &SampleGrid,
) -> Result<f64> {
    if c.norm() == 0.0 {
        return Err(Error::Domain("coefficient must be nonzero".into()));
    }
    require_zero_step(phi)?;
    require_zero_step(psi).map_err(|e| Error::Precondition(format!("psi: {e}")))?;
    let r = commute_residual(phi, psi, grid)?;
    if r > COMMUTE_TOL {
        return Err(Error::Precondition(format!("maps do not commute (residual {r:.3e})")));
    }
    let bphi = KoenigsApprox::new(phi, n, scheme)?;
    let bpsi = if psi == phi { bphi.clone() } else { KoenigsApprox::new(psi, n, scheme)? };
    let mut worst = 0.0f64;
    for &z in &grid.points {
        worst = worst.max((bpsi.eval(z)? - bphi.eval(z)? / c).norm());
    }
    Ok(worst)
}
