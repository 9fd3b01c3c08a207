//! Closed-form maps used as oracles and corpus members.

use crate::error::Result;
use crate::expr::{HalfPlane, MapExpr, C64};

/// `((1+z)/(1−z))²`, onto the plane slit along `(−∞, 0]`.
pub fn slit() -> MapExpr {
    let z = MapExpr::var();
    MapExpr::pow((MapExpr::real(1.0) + z.clone()) / (MapExpr::real(1.0) - z), 2)
}

/// Inverse of [`slit`]: `C⁻¹(√w)` with the right half-plane Cayley map.
pub fn slit_inv() -> MapExpr {
    let inv = MapExpr::cayley_inv(C64::new(1.0, 0.0), HalfPlane::Right).expect("unimodular");
    MapExpr::compose(&inv, &MapExpr::sqrt(MapExpr::var()))
}

/// `λ·slit` for `λ > 0`.
pub fn scaled_slit(lambda: f64) -> MapExpr {
    MapExpr::real(lambda) * slit()
}

pub fn scaled_slit_inv(lambda: f64) -> MapExpr {
    MapExpr::compose(&slit_inv(), &(MapExpr::var() / MapExpr::real(lambda)))
}

/// `h⁻¹ ∘ (h + c)`.
pub fn translate(h: &MapExpr, h_inv: &MapExpr, c: C64) -> Result<MapExpr> {
    let shifted = h.clone() + MapExpr::constant(c)?;
    Ok(MapExpr::compose(h_inv, &shifted))
}

/// Slit-map family member `ψ_c = h⁻¹ ∘ (h + c)` for real `c ≥ 0`.
pub fn slit_translate(c: f64) -> MapExpr {
    translate(&slit(), &slit_inv(), C64::new(c, 0.0)).expect("finite shift")
}

/// Cayley conjugate of `w ↦ w + c` on the given half-plane with pole at 1.
pub fn cayley_translate(target: HalfPlane, c: C64) -> Result<MapExpr> {
    let one = C64::new(1.0, 0.0);
    let h = MapExpr::cayley(one, target)?;
    let h_inv = MapExpr::cayley_inv(one, target)?;
    translate(&h, &h_inv, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slit_values() {
        let h = slit();
        assert!((h.eval(C64::new(0.5, 0.0)).unwrap() - C64::new(9.0, 0.0)).norm() < 1e-14);
        let phi = slit_translate(1.0);
        let want = 3.0 - 2.0 * 2f64.sqrt();
        assert!((phi.eval(C64::new(0.0, 0.0)).unwrap() - C64::new(want, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let (h, hi) = (slit(), slit_inv());
        for z in [C64::new(0.3, 0.2), C64::new(-0.7, 0.1), C64::new(0.1, -0.85)] {
            let back = hi.eval(h.eval(z).unwrap()).unwrap();
            assert!((back - z).norm() < 1e-13);
        }
        let (g, gi) = (scaled_slit(3.0), scaled_slit_inv(3.0));
        let z = C64::new(0.2, 0.4);
        assert!((gi.eval(g.eval(z).unwrap()).unwrap() - z).norm() < 1e-13);
    }
}
