use crate::error::{Error, Result};
use crate::expr::{HalfPlane, MapExpr, Node, C64};

/// Maximum nesting depth accepted by the parser; also bounds tree height.
pub const MAX_DEPTH: usize = 256;

pub fn parse_map(src: &str) -> Result<MapExpr> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, depth: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(p.syntax("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.syntax(&format!("unexpected `{}`", p.peek_char())));
    }
    Ok(e)
}

/// Parses a constant expression such as `0.3-0.2i` or `(1+2i)/3`.
pub fn parse_constant(src: &str) -> Result<C64> {
    let e = parse_map(src)?;
    if depends_on_z(&e) {
        return Err(Error::Syntax { offset: 0, message: "expected a constant, found an expression in z".into() });
    }
    e.eval(C64::new(0.0, 0.0))
}

/// Parses raw bytes, rejecting invalid UTF-8 with the offending offset.
pub fn parse_map_bytes(src: &[u8]) -> Result<MapExpr> {
    match std::str::from_utf8(src) {
        Ok(s) => parse_map(s),
        Err(e) => Err(Error::Syntax { offset: e.valid_up_to(), message: "invalid UTF-8".into() }),
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    depth: usize,
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_char(&self) -> String {
        let rest = &self.src[self.pos..];
        match std::str::from_utf8(rest) {
            Ok(s) => s.chars().next().map(String::from).unwrap_or_default(),
            Err(e) => std::str::from_utf8(&rest[..e.valid_up_to()])
                .ok()
                .and_then(|s| s.chars().next())
                .map(String::from)
                .unwrap_or_else(|| format!("\\x{:02x}", rest[0])),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn syntax(&self, msg: &str) -> Error {
        Error::Syntax { offset: self.pos, message: msg.to_string() }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.eat(b) {
            Ok(())
        } else if self.at_end() {
            Err(self.syntax(&format!("expected `{}`, found end of input", b as char)))
        } else {
            Err(self.syntax(&format!("expected `{}`, found `{}`", b as char, self.peek_char())))
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.syntax("nesting too deep"));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn bounded(&self, e: MapExpr) -> Result<MapExpr> {
        if e.depth() > MAX_DEPTH {
            return Err(self.syntax("expression tree too deep"));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<MapExpr> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = self.bounded(MapExpr::add(lhs, rhs))?;
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = self.bounded(MapExpr::sub(lhs, rhs))?;
            } else {
                break;
            }
        }
        self.leave();
        Ok(lhs)
    }

    fn term(&mut self) -> Result<MapExpr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = self.bounded(MapExpr::mul(lhs, rhs))?;
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = self.bounded(MapExpr::div(lhs, rhs))?;
            } else {
                break;
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<MapExpr> {
        if self.eat(b'-') {
            self.enter()?;
            let e = self.unary()?;
            self.leave();
            return self.bounded(MapExpr::neg(e));
        }
        self.power()
    }

    fn power(&mut self) -> Result<MapExpr> {
        let mut base = self.primary()?;
        while self.eat(b'^') {
            let k = self.exponent()?;
            base = self.bounded(MapExpr::pow(base, k))?;
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        self.skip_ws();
        let start = self.pos;
        let neg = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            if self.peek() == Some(b'+') {
                self.pos += 1;
            }
            false
        };
        self.skip_ws();
        let ds = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if ds == self.pos {
            return Err(self.syntax("expected integer exponent"));
        }
        if matches!(self.peek(), Some(b'.') | Some(b'e') | Some(b'E')) {
            return Err(Error::MalformedLiteral { offset: start, message: "exponent must be an integer".into() });
        }
        let text = std::str::from_utf8(&self.src[ds..self.pos]).expect("ascii digits");
        let v: i64 = text.parse().map_err(|_| Error::MalformedLiteral {
            offset: start,
            message: "exponent out of range".into(),
        })?;
        let v = if neg { -v } else { v };
        i32::try_from(v)
            .ok()
            .filter(|k| k.unsigned_abs() <= 1 << 16)
            .ok_or(Error::MalformedLiteral { offset: start, message: "exponent out of range".into() })
    }

    fn primary(&mut self) -> Result<MapExpr> {
        self.skip_ws();
        let start = self.pos;
        let Some(b) = self.peek() else {
            return Err(self.syntax("unexpected end of input"));
        };
        if b.is_ascii_digit() || b == b'.' {
            return self.number();
        }
        if b == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if is_ident_start(b) {
            let name = self.ident();
            return match name {
                "z" => Ok(MapExpr::var()),
                "i" => Ok(MapExpr::complex(0.0, 1.0)),
                "sqrt" | "neg" => {
                    let name = name.to_string();
                    self.expect(b'(')?;
                    let e = self.expr()?;
                    self.expect(b')')?;
                    self.bounded(if name == "sqrt" { MapExpr::sqrt(e) } else { MapExpr::neg(e) })
                }
                "compose" => {
                    self.expect(b'(')?;
                    let f = self.expr()?;
                    self.expect(b',')?;
                    let g = self.expr()?;
                    self.expect(b')')?;
                    self.bounded(MapExpr::compose(&f, &g))
                }
                "cayley" | "icayley" => {
                    let inverse = name == "icayley";
                    self.cayley_args(start, inverse)
                }
                other => Err(Error::UnknownIdentifier { offset: start, name: other.to_string() }),
            };
        }
        Err(self.syntax(&format!("unexpected `{}`", self.peek_char())))
    }

    fn ident(&mut self) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if is_ident_char(b)) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier")
    }

    fn cayley_args(&mut self, start: usize, inverse: bool) -> Result<MapExpr> {
        self.expect(b'(')?;
        let mut tau: Option<C64> = None;
        let mut target: Option<HalfPlane> = None;
        loop {
            self.skip_ws();
            let key_at = self.pos;
            if !matches!(self.peek(), Some(b) if is_ident_start(b)) {
                return Err(self.syntax("expected `tau=` or `to=`"));
            }
            let key = self.ident();
            self.expect(b'=')?;
            match key {
                "tau" if tau.is_none() => {
                    self.skip_ws();
                    let at = self.pos;
                    let e = self.expr()?;
                    if depends_on_z(&e) {
                        return Err(Error::Syntax { offset: at, message: "tau must be a constant".into() });
                    }
                    let v = e.eval(C64::new(0.0, 0.0)).map_err(|err| Error::MalformedLiteral {
                        offset: at,
                        message: err.to_string(),
                    })?;
                    tau = Some(v);
                }
                "to" if target.is_none() => {
                    self.skip_ws();
                    let at = self.pos;
                    if !matches!(self.peek(), Some(b) if is_ident_start(b)) {
                        return Err(self.syntax("expected `H` or `RH`"));
                    }
                    target = Some(match self.ident() {
                        "H" => HalfPlane::Upper,
                        "RH" => HalfPlane::Right,
                        other => {
                            return Err(Error::UnknownIdentifier { offset: at, name: other.to_string() })
                        }
                    });
                }
                "tau" | "to" => {
                    return Err(Error::Syntax { offset: key_at, message: format!("duplicate `{key}`") })
                }
                other => return Err(Error::UnknownIdentifier { offset: key_at, name: other.to_string() }),
            }
            if self.eat(b')') {
                break;
            }
            self.expect(b',')?;
        }
        let (Some(tau), Some(target)) = (tau, target) else {
            return Err(Error::Syntax { offset: start, message: "cayley needs both `tau` and `to`".into() });
        };
        let built = if inverse { MapExpr::cayley_inv(tau, target) } else { MapExpr::cayley(tau, target) };
        built.map_err(|e| Error::MalformedLiteral { offset: start, message: e.to_string() })
    }

    fn number(&mut self) -> Result<MapExpr> {
        let start = self.pos;
        let malformed = |msg: &str| Error::MalformedLiteral { offset: start, message: msg.to_string() };
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(b) if b.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let int_digits = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if digits(self) == 0 {
                return Err(malformed("expected digits after `.`"));
            }
        }
        if int_digits == 0 {
            return Err(malformed("expected digits before `.`"));
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(malformed("expected exponent digits"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii literal");
        let v: f64 = text.parse().map_err(|_| malformed("unparsable number"))?;
        if !v.is_finite() {
            return Err(malformed("literal out of range"));
        }
        let imaginary = self.peek() == Some(b'i') && !matches!(self.src.get(self.pos + 1), Some(&b) if is_ident_char(b));
        if imaginary {
            self.pos += 1;
            return Ok(MapExpr::complex(0.0, v));
        }
        if matches!(self.peek(), Some(b) if is_ident_char(b) || b == b'.') {
            return Err(malformed("unexpected character in literal"));
        }
        Ok(MapExpr::real(v))
    }
}

fn depends_on_z(e: &MapExpr) -> bool {
    match e.node() {
        Node::Var | Node::Cayley { .. } | Node::CayleyInv { .. } => true,
        Node::Const(_) => false,
        Node::Pow(a, _) | Node::Sqrt(a) | Node::Neg(a) => depends_on_z(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Compose(a, b) => {
            depends_on_z(a) || depends_on_z(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(src: &str, z: C64) -> C64 {
        parse_map(src).unwrap().eval(z).unwrap()
    }

    fn offset(src: &str) -> usize {
        parse_map(src).unwrap_err().offset().unwrap()
    }

    #[test]
    fn precedence() {
        let z = C64::new(0.5, 0.0);
        assert_eq!(at("-z^2", z), C64::new(-0.25, 0.0));
        assert_eq!(at("1+2*z", z), C64::new(2.0, 0.0));
        assert_eq!(at("1-z-z", z), C64::new(0.0, 0.0));
        assert_eq!(at("z/2/2", z), C64::new(0.125, 0.0));
        assert_eq!(at("z^2^2", z), C64::new(0.0625, 0.0));
        assert_eq!(at("z^-1", z), C64::new(2.0, 0.0));
        assert_eq!(at("2*-z", z), C64::new(-1.0, 0.0));
    }

    #[test]
    fn complex_literals() {
        let z = C64::new(0.0, 0.0);
        assert_eq!(at("(1+2i)", z), C64::new(1.0, 2.0));
        assert_eq!(at("i*i", z), C64::new(-1.0, 0.0));
        assert_eq!(at("2.5e-1i", z), C64::new(0.0, 0.25));
        assert_eq!(at(" 1 + \n z ", z), C64::new(1.0, 0.0));
    }

    #[test]
    fn diagnostics_carry_offsets() {
        assert_eq!(offset("z^"), 2);
        assert_eq!(offset(""), 0);
        assert_eq!(offset("z +"), 3);
        assert_eq!(offset("foo(z)"), 0);
        assert_eq!(offset("2 * w"), 4);
        assert_eq!(offset("1.e3"), 0);
        assert_eq!(offset("(z"), 2);
        assert_eq!(offset("z)"), 1);
        assert_eq!(offset("cayley(tau=2, to=RH)"), 0);
        assert_eq!(offset("cayley(tau=z, to=RH)"), 11);
        assert_eq!(offset("cayley(tau=1, to=LH)"), 17);
        assert_eq!(offset("z^1.5"), 2);
        assert!(matches!(parse_map("2z"), Err(Error::MalformedLiteral { .. })));
        assert!(matches!(parse_map("sin(z)"), Err(Error::UnknownIdentifier { .. })));
    }

    #[test]
    fn cayley_argument_order_is_free() {
        let a = at("cayley(to=RH, tau=i)", C64::new(0.2, 0.1));
        let b = at("cayley(tau=i, to=RH)", C64::new(0.2, 0.1));
        assert_eq!(a, b);
    }

    #[test]
    fn depth_limit() {
        let deep = format!("{}z{}", "(".repeat(MAX_DEPTH + 5), ")".repeat(MAX_DEPTH + 5));
        assert!(parse_map(&deep).is_err());
        let ok = format!("{}z{}", "(".repeat(100), ")".repeat(100));
        assert!(parse_map(&ok).is_ok());
        let negs = format!("{}z", "-".repeat(10_000));
        assert!(parse_map(&negs).is_err());
        let chain = format!("z{}", "+z".repeat(10_000));
        assert!(parse_map(&chain).is_err());
    }

    #[test]
    fn constants() {
        assert_eq!(parse_constant("0.3-0.2i").unwrap(), C64::new(0.3, -0.2));
        assert!(parse_constant("z/2").is_err());
    }

    #[test]
    fn invalid_utf8() {
        let e = parse_map_bytes(b"z+\xff").unwrap_err();
        assert_eq!(e.offset(), Some(2));
    }
}
