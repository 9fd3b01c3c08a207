//! Forward-mode dual numbers over the complex field.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// `v + d·ε` with `ε² = 0`; `d` carries the complex derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Dual {
    pub fn new(v: Complex64, d: Complex64) -> Self {
        Dual { v, d }
    }

    pub fn constant(v: Complex64) -> Self {
        Dual { v, d: Complex64::new(0.0, 0.0) }
    }

    pub fn variable(v: Complex64) -> Self {
        Dual { v, d: Complex64::new(1.0, 0.0) }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}
