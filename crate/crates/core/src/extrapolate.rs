//! Sequence acceleration and polynomial interpolation.

use crate::expr::C64;

/// Two-level Richardson table for errors `a·h + b·h²` with `h` halving per term.
///
/// Returns the second-level column, empty when fewer than three terms are given.
pub fn richardson2(seq: &[C64]) -> Vec<C64> {
    let first: Vec<C64> = seq.windows(2).map(|w| w[1] * 2.0 - w[0]).collect();
    first.windows(2).map(|w| (w[1] * 4.0 - w[0]) / 3.0).collect()
}

/// Last extrapolant and its distance to the previous one.
pub fn richardson_limit(seq: &[C64]) -> Option<(C64, f64)> {
    let col = richardson2(seq);
    match col.len() {
        0 => None,
        1 => Some((col[0], f64::INFINITY)),
        n => Some((col[n - 1], (col[n - 1] - col[n - 2]).norm())),
    }
}

/// Aitken extrapolation from three terms with geometric error ratio.
///
/// Falls back to `c` when the ratio is not clearly contracting.
pub fn aitken(a: C64, b: C64, c: C64) -> C64 {
    let d1 = b - a;
    let d2 = c - b;
    if d1.norm() <= f64::MIN_POSITIVE || d2.norm() == 0.0 {
        return c;
    }
    let rho = d2 / d1;
    if rho.norm() >= 0.95 {
        return c;
    }
    c + d2 * rho / (C64::new(1.0, 0.0) - rho)
}

/// Barycentric Lagrange interpolant through real nodes.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    values: Vec<C64>,
    weights: Vec<f64>,
}

impl Barycentric {
    /// Nodes must be distinct.
    pub fn new(nodes: Vec<f64>, values: Vec<C64>) -> Self {
        assert_eq!(nodes.len(), values.len());
        let weights = (0..nodes.len())
            .map(|j| {
                let p: f64 = (0..nodes.len()).filter(|&i| i != j).map(|i| nodes[j] - nodes[i]).product();
                1.0 / p
            })
            .collect();
        Barycentric { nodes, values, weights }
    }

    fn node_index(&self, x: C64) -> Option<usize> {
        if x.im != 0.0 {
            return None;
        }
        self.nodes.iter().position(|&t| t == x.re)
    }

    /// Value and derivative at a complex point.
    pub fn eval_deriv(&self, x: C64) -> (C64, C64) {
        if let Some(m) = self.node_index(x) {
            let fm = self.values[m];
            let mut d = C64::new(0.0, 0.0);
            for j in 0..self.nodes.len() {
                if j != m {
                    d += (self.values[j] - fm) * (self.weights[j] / self.weights[m] / (self.nodes[m] - self.nodes[j]));
                }
            }
            return (fm, d);
        }
        let mut num = C64::new(0.0, 0.0);
        let mut den = C64::new(0.0, 0.0);
        for j in 0..self.nodes.len() {
            let a = self.weights[j] / (x - self.nodes[j]);
            num += a * self.values[j];
            den += a;
        }
        let p = num / den;
        let mut s = C64::new(0.0, 0.0);
        for j in 0..self.nodes.len() {
            let u = x - self.nodes[j];
            s += (p - self.values[j]) * self.weights[j] / (u * u);
        }
        (p, s / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn richardson_kills_two_orders() {
        let seq: Vec<C64> = (0..6).map(|k| {
            let h = 0.5f64.powi(k);
            r(2.0 + 3.0 * h - 5.0 * h * h)
        }).collect();
        let (lim, err) = richardson_limit(&seq).unwrap();
        assert!((lim - r(2.0)).norm() < 1e-13);
        assert!(err < 1e-13);
    }

    #[test]
    fn aitken_geometric() {
        let s = |n: i32| r(1.0 + 0.3f64.powi(n));
        assert!((aitken(s(1), s(2), s(3)) - r(1.0)).norm() < 1e-14);
        assert_eq!(aitken(r(1.0), r(2.0), r(3.0)), r(3.0));
    }

    #[test]
    fn barycentric_reproduces_cubic() {
        let f = |x: C64| x * x * x - x * 2.0 + C64::new(1.0, 1.0);
        let df = |x: C64| x * x * 3.0 - 2.0;
        let nodes = vec![-1.0, 0.0, 0.5, 2.0, 3.0];
        let vals = nodes.iter().map(|&t| f(r(t))).collect();
        let b = Barycentric::new(nodes, vals);
        for x in [C64::new(0.3, 0.7), r(2.0), r(-0.25)] {
            let (p, d) = b.eval_deriv(x);
            assert!((p - f(x)).norm() < 1e-12);
            assert!((d - df(x)).norm() < 1e-11);
        }
    }
}
