use smallvec::{smallvec, SmallVec};
use std::ops::{Add, Div, Mul, Neg, Sub};

pub type Gradient = SmallVec<[f64; 8]>;

/// First-order dual number carrying a gradient over `k` seeded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub grad: Gradient,
}

impl Dual {
    pub fn constant(value: f64, k: usize) -> Dual {
        Dual {
            value,
            grad: smallvec![0.0; k],
        }
    }

    /// Independent variable number `index` out of `k`.
    pub fn variable(value: f64, index: usize, k: usize) -> Dual {
        let mut d = Dual::constant(value, k);
        d.grad[index] = 1.0;
        d
    }

    pub fn dims(&self) -> usize {
        self.grad.len()
    }

    pub fn is_constant(&self) -> bool {
        self.grad.iter().all(|g| *g == 0.0)
    }

    fn chain(&self, value: f64, slope: f64) -> Dual {
        Dual {
            value,
            grad: self.grad.iter().map(|g| g * slope).collect(),
        }
    }

    fn combine(&self, other: &Dual, value: f64, d_self: f64, d_other: f64) -> Dual {
        debug_assert_eq!(self.grad.len(), other.grad.len());
        Dual {
            value,
            grad: self
                .grad
                .iter()
                .zip(&other.grad)
                .map(|(a, b)| d_self * a + d_other * b)
                .collect(),
        }
    }

    pub fn sin(&self) -> Dual {
        self.chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Dual {
        self.chain(self.value.cos(), -self.value.sin())
    }

    pub fn tan(&self) -> Dual {
        let c = self.value.cos();
        self.chain(self.value.tan(), 1.0 / (c * c))
    }

    pub fn exp(&self) -> Dual {
        let e = self.value.exp();
        self.chain(e, e)
    }

    pub fn ln(&self) -> Dual {
        self.chain(self.value.ln(), 1.0 / self.value)
    }

    pub fn sqrt(&self) -> Dual {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r)
    }

    /// abs with the subgradient 0 at the kink.
    pub fn abs(&self) -> Dual {
        let slope = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), slope)
    }

    pub fn tanh(&self) -> Dual {
        let th = self.value.tanh();
        self.chain(th, 1.0 - th * th)
    }

    /// `self ^ exponent`. The `ln(base)` term is only formed when the exponent
    /// actually varies, so negative bases with constant integer exponents work.
    pub fn pow(&self, exponent: &Dual) -> Dual {
        let a = self.value;
        let b = exponent.value;
        let value = real_pow(a, b);
        let d_base = if b == 0.0 { 0.0 } else { b * real_pow(a, b - 1.0) };
        let d_exp = if exponent.is_constant() || a == 0.0 {
            0.0
        } else {
            value * a.ln()
        };
        self.combine(exponent, value, d_base, d_exp)
    }
}

/// Power with exact repeated multiplication for small integer exponents.
pub(crate) fn real_pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        self.combine(&rhs, self.value + rhs.value, 1.0, 1.0)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        self.combine(&rhs, self.value - rhs.value, 1.0, -1.0)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        self.combine(&rhs, self.value * rhs.value, rhs.value, self.value)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let q = self.value / rhs.value;
        self.combine(&rhs, q, 1.0 / rhs.value, -q / rhs.value)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.chain(-self.value, -1.0)
    }
}
