//! Pseudohyperbolic and hyperbolic geometry of the disc and half-planes.

use crate::error::{Error, Result};
use crate::expr::{HalfPlane, MapExpr, C64};
use serde::Serialize;

/// Upper clamp applied before `artanh`.
pub const ARTANH_GUARD: f64 = 1.0 - 1e-15;
/// Margins smaller than this in absolute value are indeterminate.
pub const MARGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceValue {
    pub pseudo: f64,
    pub hyperbolic: f64,
}

impl DistanceValue {
    pub fn from_pseudo(p: f64) -> Self {
        DistanceValue { pseudo: p, hyperbolic: artanh(p) }
    }
}

/// `0.5·log((1+p)/(1−p))` with `p` clamped to `[0, 1 − 1e−15]`.
pub fn artanh(p: f64) -> f64 {
    let p = p.clamp(0.0, ARTANH_GUARD);
    0.5 * (p.ln_1p() - (-p).ln_1p())
}

fn one_minus_sq(z: C64) -> f64 {
    let r = z.norm();
    (1.0 - r) * (1.0 + r)
}

fn in_disc(z: C64) -> Result<()> {
    if z.norm() < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{z} is not in the open disc")))
    }
}

/// Pseudohyperbolic `ρ*` in the disc.
pub fn pseudo_disc(z: C64, w: C64) -> Result<f64> {
    in_disc(z)?;
    in_disc(w)?;
    let d2 = (z - w).norm_sqr();
    if d2 == 0.0 {
        return Ok(0.0);
    }
    Ok((d2 / (one_minus_sq(z) * one_minus_sq(w) + d2)).sqrt())
}

pub fn dist_disc(z: C64, w: C64) -> Result<DistanceValue> {
    Ok(DistanceValue::from_pseudo(pseudo_disc(z, w)?))
}

pub fn dist_halfplane(u: C64, v: C64, which: HalfPlane) -> Result<DistanceValue> {
    for p in [u, v] {
        if !which.contains(p) {
            return Err(Error::Domain(format!("{p} is not in the {} half-plane", which.tag())));
        }
    }
    let d2 = (u - v).norm_sqr();
    if d2 == 0.0 {
        return Ok(DistanceValue::from_pseudo(0.0));
    }
    let cross = match which {
        HalfPlane::Right => 4.0 * u.re * v.re,
        HalfPlane::Upper => 4.0 * u.im * v.im,
    };
    Ok(DistanceValue::from_pseudo((d2 / (d2 + cross)).sqrt()))
}

/// Cayley map onto `target` with pole at `tau`, and its inverse.
pub fn cayley_pair(tau: C64, target: HalfPlane) -> Result<(MapExpr, MapExpr)> {
    Ok((MapExpr::cayley(tau, target)?, MapExpr::cayley_inv(tau, target)?))
}

/// `e^{iθ}(z − a)/(1 − conj(a) z)`.
pub fn disc_automorphism(a: C64, theta: f64) -> Result<MapExpr> {
    if a.norm() >= 1.0 {
        return Err(Error::Domain("automorphism centre must lie in the disc".into()));
    }
    let z = MapExpr::var();
    let num = z.clone() - MapExpr::constant(a)?;
    let den = MapExpr::real(1.0) - MapExpr::constant(a.conj())? * z;
    Ok(MapExpr::constant(C64::from_polar(1.0, theta))? * (num / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VMembership {
    pub rho: f64,
    /// `r − ρ*`; positive inside.
    pub margin: f64,
    pub member: bool,
    pub indeterminate: bool,
}

/// Membership of `z` in `V_φ(r) = {ρ*(z, φ(z)) < r}`.
pub fn v_membership(map: &MapExpr, r: f64, z: C64) -> Result<VMembership> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Domain(format!("radius {r} outside (0, 1)")));
    }
    in_disc(z)?;
    let w = map.eval(z)?;
    let rho = pseudo_disc(z, w)?;
    let margin = r - rho;
    Ok(VMembership { rho, margin, member: rho < r, indeterminate: margin.abs() < MARGIN_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn disc_examples() {
        assert!((dist_disc(c(0.0, 0.0), c(0.5, 0.0)).unwrap().pseudo - 0.5).abs() < 1e-15);
        assert_eq!(dist_disc(c(0.3, 0.2), c(0.3, 0.2)).unwrap().pseudo, 0.0);
        assert!((dist_disc(c(0.5, 0.0), c(-0.5, 0.0)).unwrap().pseudo - 0.8).abs() < 1e-15);
        assert!(dist_disc(c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn matches_textbook_formula_away_from_boundary() {
        let (z, w) = (c(0.3, -0.4), c(-0.1, 0.6));
        let direct = (z - w).norm() / (C64::new(1.0, 0.0) - w.conj() * z).norm();
        let d = dist_disc(z, w).unwrap();
        assert!((d.pseudo - direct).abs() < 1e-15);
        assert!((d.hyperbolic - direct.atanh()).abs() < 1e-12);
    }

    #[test]
    fn halfplane_examples() {
        let up = |u, v| dist_halfplane(u, v, HalfPlane::Upper).unwrap().pseudo;
        assert!((up(c(0.0, 1.0), c(1.0, 1.0)) - 1.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!((up(c(0.0, 2.0), c(1.0, 2.0)) - 1.0 / 17f64.sqrt()).abs() < 1e-15);
        assert_eq!(dist_halfplane(c(1.0, 0.0), c(1.0, 0.0), HalfPlane::Right).unwrap().pseudo, 0.0);
        assert!(dist_halfplane(c(-1.0, 0.0), c(1.0, 0.0), HalfPlane::Right).is_err());
        assert!(dist_halfplane(c(1.0, 0.0), c(1.0, 1.0), HalfPlane::Upper).is_err());
    }

    #[test]
    fn cayley_examples() {
        let (cr, _) = cayley_pair(c(1.0, 0.0), HalfPlane::Right).unwrap();
        assert_eq!(cr.eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert_eq!(cr.eval(c(0.5, 0.0)).unwrap(), c(3.0, 0.0));
        let (ci, ci_inv) = cayley_pair(c(0.0, 1.0), HalfPlane::Right).unwrap();
        assert!((ci.eval(c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(ci_inv.eval(c(1.0, 0.0)).unwrap().norm() < 1e-15);
        assert!(cayley_pair(c(2.0, 0.0), HalfPlane::Upper).is_err());
    }

    #[test]
    fn v_set_examples() {
        let (_, inv) = cayley_pair(c(1.0, 0.0), HalfPlane::Upper).unwrap();
        let (fwd, _) = cayley_pair(c(1.0, 0.0), HalfPlane::Upper).unwrap();
        let phi = MapExpr::compose(&inv, &(fwd + MapExpr::real(1.0)));
        let inside = v_membership(&phi, 1.0 / 3.0, inv.eval(c(0.0, 2.0)).unwrap()).unwrap();
        assert!(inside.member && (inside.rho - 1.0 / 17f64.sqrt()).abs() < 1e-12);
        let outside = v_membership(&phi, 1.0 / 3.0, inv.eval(c(0.0, 1.0)).unwrap()).unwrap();
        assert!(!outside.member && (outside.rho - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        let id = v_membership(&MapExpr::var(), 1e-6, c(0.4, 0.4)).unwrap();
        assert!(id.member && id.rho == 0.0);
    }

    #[test]
    fn artanh_guard() {
        assert!(artanh(1.0).is_finite());
        assert!((artanh(0.5) - 0.5f64.atanh()).abs() < 1e-15);
    }
}
