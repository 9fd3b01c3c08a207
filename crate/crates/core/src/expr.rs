//! Expression trees for holomorphic maps.

use crate::dual::Dual;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

pub type C64 = Complex64;

/// Tolerance on `|τ| = 1` for Cayley nodes.
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// Image half-plane of a Cayley map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HalfPlane {
    Upper,
    Right,
}

impl HalfPlane {
    pub fn tag(self) -> &'static str {
        match self {
            HalfPlane::Upper => "H",
            HalfPlane::Right => "RH",
        }
    }

    pub fn contains(self, w: C64) -> bool {
        match self {
            HalfPlane::Upper => w.im > 0.0,
            HalfPlane::Right => w.re > 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var,
    Const(C64),
    Add(MapExpr, MapExpr),
    Sub(MapExpr, MapExpr),
    Mul(MapExpr, MapExpr),
    Div(MapExpr, MapExpr),
    Pow(MapExpr, i32),
    Sqrt(MapExpr),
    Neg(MapExpr),
    /// `outer ∘ inner`
    Compose(MapExpr, MapExpr),
    Cayley { tau: C64, target: HalfPlane },
    CayleyInv { tau: C64, target: HalfPlane },
}

#[derive(PartialEq)]
struct Inner {
    node: Node,
    depth: usize,
}

/// Immutable, cheaply clonable map definition.
#[derive(Clone, PartialEq)]
pub struct MapExpr(Arc<Inner>);

impl fmt::Debug for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MapExpr({})", crate::dsl::format_map(self))
    }
}

impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::dsl::format_map(self))
    }
}

fn check_unimodular(tau: C64) -> Result<()> {
    if !(tau.re.is_finite() && tau.im.is_finite()) || (tau.norm() - 1.0).abs() > UNIMODULAR_TOL {
        return Err(Error::Domain(format!(
            "cayley pole must be unimodular, got |tau| = {}",
            tau.norm()
        )));
    }
    Ok(())
}

impl MapExpr {
    pub fn node(&self) -> &Node {
        &self.0.node
    }

    fn wrap(node: Node) -> Self {
        let depth = match &node {
            Node::Var | Node::Const(_) | Node::Cayley { .. } | Node::CayleyInv { .. } => 1,
            Node::Pow(a, _) | Node::Sqrt(a) | Node::Neg(a) => 1 + a.depth(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Compose(a, b) => {
                1 + a.depth().max(b.depth())
            }
        };
        MapExpr(Arc::new(Inner { node, depth }))
    }

    pub fn var() -> Self {
        Self::wrap(Node::Var)
    }

    pub fn identity() -> Self {
        Self::var()
    }

    pub fn constant(c: C64) -> Result<Self> {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::Domain("constant must be finite".into()));
        }
        Ok(Self::wrap(Node::Const(c)))
    }

    pub fn real(x: f64) -> Self {
        Self::wrap(Node::Const(C64::new(x, 0.0)))
    }

    pub fn complex(re: f64, im: f64) -> Self {
        Self::wrap(Node::Const(C64::new(re, im)))
    }

    pub fn add(a: MapExpr, b: MapExpr) -> Self {
        Self::wrap(Node::Add(a, b))
    }

    pub fn sub(a: MapExpr, b: MapExpr) -> Self {
        Self::wrap(Node::Sub(a, b))
    }

    pub fn mul(a: MapExpr, b: MapExpr) -> Self {
        Self::wrap(Node::Mul(a, b))
    }

    pub fn div(a: MapExpr, b: MapExpr) -> Self {
        Self::wrap(Node::Div(a, b))
    }

    pub fn pow(a: MapExpr, k: i32) -> Self {
        Self::wrap(Node::Pow(a, k))
    }

    pub fn sqrt(a: MapExpr) -> Self {
        Self::wrap(Node::Sqrt(a))
    }

    pub fn neg(a: MapExpr) -> Self {
        Self::wrap(Node::Neg(a))
    }

    pub fn cayley(tau: C64, target: HalfPlane) -> Result<Self> {
        check_unimodular(tau)?;
        Ok(Self::wrap(Node::Cayley { tau, target }))
    }

    pub fn cayley_inv(tau: C64, target: HalfPlane) -> Result<Self> {
        check_unimodular(tau)?;
        Ok(Self::wrap(Node::CayleyInv { tau, target }))
    }

    /// `outer ∘ inner`, unsimplified.
    pub fn compose(outer: &MapExpr, inner: &MapExpr) -> Self {
        Self::wrap(Node::Compose(outer.clone(), inner.clone()))
    }

    /// The `n`-fold composition, identity for `n = 0`.
    pub fn iterate(f: &MapExpr, n: usize) -> Self {
        let mut acc = MapExpr::var();
        for _ in 0..n {
            acc = MapExpr::compose(f, &acc);
        }
        acc
    }

    pub fn is_var(&self) -> bool {
        matches!(self.node(), Node::Var)
    }

    /// Height of the tree.
    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        Ok(self.eval_dual(Dual::constant(z))?.v)
    }

    /// Structural derivative at `z`.
    pub fn deriv(&self, z: C64) -> Result<C64> {
        Ok(self.eval_dual(Dual::variable(z))?.d)
    }

    /// Value and derivative in one pass.
    pub fn eval_deriv(&self, z: C64) -> Result<(C64, C64)> {
        let r = self.eval_dual(Dual::variable(z))?;
        Ok((r.v, r.d))
    }

    pub fn eval_dual(&self, x: Dual) -> Result<Dual> {
        let r = match self.node() {
            Node::Var => x,
            Node::Const(c) => Dual::constant(*c),
            Node::Add(a, b) => a.eval_dual(x)? + b.eval_dual(x)?,
            Node::Sub(a, b) => a.eval_dual(x)? - b.eval_dual(x)?,
            Node::Mul(a, b) => a.eval_dual(x)? * b.eval_dual(x)?,
            Node::Div(a, b) => div(a.eval_dual(x)?, b.eval_dual(x)?)?,
            Node::Pow(a, k) => powi(a.eval_dual(x)?, *k)?,
            Node::Sqrt(a) => sqrt(a.eval_dual(x)?, x.d != C64::new(0.0, 0.0))?,
            Node::Neg(a) => -a.eval_dual(x)?,
            Node::Compose(outer, inner) => outer.eval_dual(inner.eval_dual(x)?)?,
            Node::Cayley { tau, target } => cayley(*tau, *target, x)?,
            Node::CayleyInv { tau, target } => cayley_inv(*tau, *target, x)?,
        };
        finite(r)
    }
}

fn finite(r: Dual) -> Result<Dual> {
    let ok = r.v.re.is_finite() && r.v.im.is_finite() && r.d.re.is_finite() && r.d.im.is_finite();
    if ok {
        Ok(r)
    } else {
        Err(Error::Overflow("non-finite intermediate value".into()))
    }
}

fn div(a: Dual, b: Dual) -> Result<Dual> {
    if b.v == C64::new(0.0, 0.0) {
        return Err(Error::Domain("division by zero".into()));
    }
    let q = a.v / b.v;
    Ok(Dual::new(q, (a.d - q * b.d) / b.v))
}

fn powi(a: Dual, k: i32) -> Result<Dual> {
    if k == 0 {
        return Ok(Dual::constant(C64::new(1.0, 0.0)));
    }
    let mut base = a;
    let mut e = k.unsigned_abs();
    let mut acc = Dual::constant(C64::new(1.0, 0.0));
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base;
        }
        e >>= 1;
        if e > 0 {
            base = base * base;
        }
    }
    if k < 0 {
        div(Dual::constant(C64::new(1.0, 0.0)), acc)
    } else {
        Ok(acc)
    }
}

/// Relative width of the excluded band around the negative real axis.
const CUT_TOL: f64 = 1e-14;

fn sqrt(a: Dual, need_deriv: bool) -> Result<Dual> {
    let w = a.v;
    if w.re < 0.0 && w.im.abs() <= CUT_TOL * w.re.abs() {
        return Err(Error::Domain(format!("square root on the branch cut at {w}")));
    }
    let s = w.sqrt();
    if s == C64::new(0.0, 0.0) {
        if need_deriv && a.d != C64::new(0.0, 0.0) {
            return Err(Error::Domain("square root not differentiable at 0".into()));
        }
        return Ok(Dual::constant(s));
    }
    Ok(Dual::new(s, a.d / (s * 2.0)))
}

fn cayley(tau: C64, target: HalfPlane, x: Dual) -> Result<Dual> {
    let t = Dual::constant(tau);
    let mut r = div(t + x, t - x)?;
    if target == HalfPlane::Upper {
        r = Dual::constant(C64::i()) * r;
    }
    Ok(r)
}

fn cayley_inv(tau: C64, target: HalfPlane, x: Dual) -> Result<Dual> {
    let one = match target {
        HalfPlane::Right => C64::new(1.0, 0.0),
        HalfPlane::Upper => C64::i(),
    };
    let c = Dual::constant(one);
    let q = div(x - c, x + c)?;
    Ok(Dual::constant(tau) * q)
}

impl std::ops::Add for MapExpr {
    type Output = MapExpr;
    fn add(self, o: MapExpr) -> MapExpr {
        MapExpr::add(self, o)
    }
}

impl std::ops::Sub for MapExpr {
    type Output = MapExpr;
    fn sub(self, o: MapExpr) -> MapExpr {
        MapExpr::sub(self, o)
    }
}

impl std::ops::Mul for MapExpr {
    type Output = MapExpr;
    fn mul(self, o: MapExpr) -> MapExpr {
        MapExpr::mul(self, o)
    }
}

impl std::ops::Div for MapExpr {
    type Output = MapExpr;
    fn div(self, o: MapExpr) -> MapExpr {
        MapExpr::div(self, o)
    }
}

impl std::ops::Neg for MapExpr {
    type Output = MapExpr;
    fn neg(self) -> MapExpr {
        MapExpr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn sqrt_on_cut_is_domain_error() {
        let f = MapExpr::sqrt(MapExpr::var());
        assert!(matches!(f.eval(c(-1.0, 0.0)), Err(Error::Domain(_))));
        assert!((f.eval(c(-1.0, 1e-3)).unwrap() - c(-1.0, 1e-3).sqrt()).norm() < 1e-15);
    }

    #[test]
    fn negative_power() {
        let f = MapExpr::pow(MapExpr::var(), -2);
        let (v, d) = f.eval_deriv(c(0.5, 0.5)).unwrap();
        let z = c(0.5, 0.5);
        assert!((v - 1.0 / (z * z)).norm() < 1e-14);
        assert!((d + 2.0 / (z * z * z)).norm() < 1e-13);
    }

    #[test]
    fn division_by_zero() {
        let f = MapExpr::real(1.0) / MapExpr::var();
        assert!(matches!(f.eval(c(0.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn overflow_detected() {
        let f = MapExpr::pow(MapExpr::var(), 400);
        assert!(matches!(f.eval(c(10.0, 0.0)), Err(Error::Overflow(_))));
    }

    #[test]
    fn non_unimodular_tau_rejected() {
        assert!(MapExpr::cayley(c(1.0 + 1e-9, 0.0), HalfPlane::Right).is_err());
        assert!(MapExpr::cayley(c(0.6, 0.8), HalfPlane::Right).is_ok());
    }

    #[test]
    fn cayley_derivative() {
        let f = MapExpr::cayley(c(1.0, 0.0), HalfPlane::Right).unwrap();
        assert!((f.deriv(c(0.0, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        let g = MapExpr::cayley(c(1.0, 0.0), HalfPlane::Upper).unwrap();
        assert!((g.eval(c(0.0, 0.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn iterate_expr_matches_repeated_eval() {
        let f = (MapExpr::var() + MapExpr::real(1.0)) / MapExpr::real(2.0);
        let f3 = MapExpr::iterate(&f, 3);
        assert_eq!(f3.eval(c(0.0, 0.0)).unwrap(), c(0.875, 0.0));
        assert_eq!(MapExpr::iterate(&f, 0).eval(c(0.3, 0.1)).unwrap(), c(0.3, 0.1));
    }
}
