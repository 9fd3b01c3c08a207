use crate::expr::{MapExpr, Node, C64};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const ATOM: u8 = 5;

/// Renders a tree in the grammar accepted by [`crate::dsl::parse_map`].
pub fn format_map(m: &MapExpr) -> String {
    let mut out = String::new();
    write(m, 0, &mut out);
    out
}

/// Canonical spelling of a constant; never needs outer parentheses.
pub fn format_constant(c: C64) -> String {
    let num = |x: f64| format!("{:?}", x.abs());
    match (c.re == 0.0 && c.re.is_sign_positive(), c.im == 0.0) {
        (_, true) if c.re.is_sign_positive() => num(c.re),
        (_, true) => format!("(-{})", num(c.re)),
        (true, false) => {
            if c.im > 0.0 {
                format!("{}i", num(c.im))
            } else {
                format!("(-{}i)", num(c.im))
            }
        }
        (false, false) => {
            let sign_re = if c.re.is_sign_negative() { "-" } else { "" };
            let sign_im = if c.im > 0.0 { "+" } else { "-" };
            format!("({}{}{}{}i)", sign_re, num(c.re), sign_im, num(c.im))
        }
    }
}

fn prec(m: &MapExpr) -> u8 {
    match m.node() {
        Node::Add(..) | Node::Sub(..) => ADD,
        Node::Mul(..) | Node::Div(..) => MUL,
        Node::Neg(_) => NEG,
        Node::Pow(..) => 4,
        _ => ATOM,
    }
}

fn write(m: &MapExpr, min: u8, out: &mut String) {
    let wrap = prec(m) < min;
    if wrap {
        out.push('(');
    }
    match m.node() {
        Node::Var => out.push('z'),
        Node::Const(c) => out.push_str(&format_constant(*c)),
        Node::Add(a, b) => binary(a, " + ", b, ADD, out),
        Node::Sub(a, b) => binary(a, " - ", b, ADD, out),
        Node::Mul(a, b) => binary(a, " * ", b, MUL, out),
        Node::Div(a, b) => binary(a, " / ", b, MUL, out),
        Node::Neg(a) => {
            out.push('-');
            write(a, NEG, out);
        }
        Node::Pow(a, k) => {
            write(a, ATOM, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        Node::Sqrt(a) => {
            out.push_str("sqrt(");
            write(a, 0, out);
            out.push(')');
        }
        Node::Compose(f, g) => {
            out.push_str("compose(");
            write(f, 0, out);
            out.push_str(", ");
            write(g, 0, out);
            out.push(')');
        }
        Node::Cayley { tau, target } => {
            out.push_str(&format!("cayley(tau={}, to={})", format_constant(*tau), target.tag()))
        }
        Node::CayleyInv { tau, target } => {
            out.push_str(&format!("icayley(tau={}, to={})", format_constant(*tau), target.tag()))
        }
    }
    if wrap {
        out.push(')');
    }
}

fn binary(a: &MapExpr, op: &str, b: &MapExpr, p: u8, out: &mut String) {
    write(a, p, out);
    out.push_str(op);
    write(b, p + 1, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_map;

    #[test]
    fn constants() {
        assert_eq!(format_constant(C64::new(0.5, 0.0)), "0.5");
        assert_eq!(format_constant(C64::new(-0.5, 0.0)), "(-0.5)");
        assert_eq!(format_constant(C64::new(0.0, 2.0)), "2.0i");
        assert_eq!(format_constant(C64::new(0.0, -2.0)), "(-2.0i)");
        assert_eq!(format_constant(C64::new(1.0, -2.0)), "(1.0-2.0i)");
        assert_eq!(format_constant(C64::new(-1.0, 2.0)), "(-1.0+2.0i)");
    }

    #[test]
    fn minimal_parentheses() {
        let f = parse_map("(1+z^2)/2").unwrap();
        assert_eq!(format_map(&f), "(1.0 + z^2) / 2.0");
        let g = parse_map("1-(z-1)").unwrap();
        assert_eq!(format_map(&g), "1.0 - (z - 1.0)");
        let h = parse_map("-(z+1)^2").unwrap();
        assert_eq!(format_map(&h), "-(z + 1.0)^2");
    }

    #[test]
    fn constant_bits_survive() {
        for x in [0.1f64, 1.0 / 3.0, 1e-300, 1.7976931348623157e308, -2.2250738585072014e-308] {
            for c in [C64::new(x, 0.0), C64::new(0.0, x), C64::new(x, -x / 7.0)] {
                let m = MapExpr::constant(c).unwrap();
                let back = parse_map(&format_map(&m)).unwrap().eval(C64::new(0.0, 0.0)).unwrap();
                assert_eq!(back, c);
            }
        }
    }
}
