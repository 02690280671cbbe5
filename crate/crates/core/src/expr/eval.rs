use std::collections::HashMap;

use super::ast::{BinaryOp, Expr, Func};
use super::dual::{real_pow, Dual};
use super::{DomainKind, EvalError};

/// Variable bindings for evaluation.
pub trait Env<T> {
    fn lookup(&self, name: &str) -> Option<T>;
}

impl<T: Clone> Env<T> for HashMap<String, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).cloned()
    }
}

impl<T: Clone> Env<T> for HashMap<&str, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        self.get(name).cloned()
    }
}

impl<T: Clone> Env<T> for [(&str, T)] {
    fn lookup(&self, name: &str) -> Option<T> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| v.clone())
    }
}

impl<T: Clone, const N: usize> Env<T> for [(&str, T); N] {
    fn lookup(&self, name: &str) -> Option<T> {
        self.as_slice().lookup(name)
    }
}

/// Parallel slices of names and values; the binding used on hot paths.
pub struct SlotEnv<'a, T> {
    pub names: &'a [String],
    pub values: &'a [T],
}

impl<T: Clone> Env<T> for SlotEnv<'_, T> {
    fn lookup(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].clone())
    }
}

pub(crate) trait Scalar: Clone {
    fn lift(&self, value: f64) -> Self;
    fn value(&self) -> f64;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn pow(self, rhs: Self) -> Self;
    fn apply(self, func: Func) -> Self;
    /// True when `rhs` varies, i.e. `self ^ rhs` needs `ln(self)`.
    fn varies(&self) -> bool;
}

impl Scalar for f64 {
    fn lift(&self, value: f64) -> f64 {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn add(self, rhs: f64) -> f64 {
        self + rhs
    }
    fn sub(self, rhs: f64) -> f64 {
        self - rhs
    }
    fn mul(self, rhs: f64) -> f64 {
        self * rhs
    }
    fn div(self, rhs: f64) -> f64 {
        self / rhs
    }
    fn neg(self) -> f64 {
        -self
    }
    fn pow(self, rhs: f64) -> f64 {
        real_pow(self, rhs)
    }
    fn apply(self, func: Func) -> f64 {
        match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Exp => self.exp(),
            Func::Ln => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
            Func::Tanh => self.tanh(),
        }
    }
    fn varies(&self) -> bool {
        false
    }
}

impl Scalar for Dual {
    fn lift(&self, value: f64) -> Dual {
        Dual::constant(value, self.dims())
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn add(self, rhs: Dual) -> Dual {
        self + rhs
    }
    fn sub(self, rhs: Dual) -> Dual {
        self - rhs
    }
    fn mul(self, rhs: Dual) -> Dual {
        self * rhs
    }
    fn div(self, rhs: Dual) -> Dual {
        self / rhs
    }
    fn neg(self) -> Dual {
        -self
    }
    fn pow(self, rhs: Dual) -> Dual {
        Dual::pow(&self, &rhs)
    }
    fn apply(self, func: Func) -> Dual {
        match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Tan => self.tan(),
            Func::Exp => self.exp(),
            Func::Ln => self.ln(),
            Func::Sqrt => self.sqrt(),
            Func::Abs => self.abs(),
            Func::Tanh => self.tanh(),
        }
    }
    fn varies(&self) -> bool {
        !self.is_constant()
    }
}

impl Expr {
    /// Evaluate in double precision.
    pub fn eval<E: Env<f64> + ?Sized>(&self, env: &E) -> Result<f64, EvalError> {
        self.eval_generic(env, &0.0)
    }

    /// Evaluate with forward-mode derivatives. `k` is the gradient length the
    /// caller seeded into `env`; constants are lifted to that length.
    pub fn eval_dual<E: Env<Dual> + ?Sized>(&self, env: &E, k: usize) -> Result<Dual, EvalError> {
        self.eval_generic(env, &Dual::constant(0.0, k))
    }

    pub(crate) fn eval_generic<T: Scalar, E: Env<T> + ?Sized>(
        &self,
        env: &E,
        proto: &T,
    ) -> Result<T, EvalError> {
        match self {
            Expr::Constant(v) => Ok(proto.lift(*v)),
            Expr::Variable(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Neg(a) => Ok(a.eval_generic(env, proto)?.neg()),
            Expr::Call(func, a) => {
                let arg = a.eval_generic(env, proto)?;
                let x = arg.value();
                let bad = match func {
                    Func::Ln if x <= 0.0 => Some(DomainKind::LogNonPositive),
                    Func::Sqrt if x < 0.0 => Some(DomainKind::SqrtNegative),
                    _ => None,
                };
                if let Some(kind) = bad {
                    return Err(domain(kind, self));
                }
                Ok(arg.apply(*func))
            }
            Expr::Binary(op, a, b) => {
                let lhs = a.eval_generic(env, proto)?;
                let rhs = b.eval_generic(env, proto)?;
                Ok(match op {
                    BinaryOp::Add => lhs.add(rhs),
                    BinaryOp::Sub => lhs.sub(rhs),
                    BinaryOp::Mul => lhs.mul(rhs),
                    BinaryOp::Div => {
                        if rhs.value() == 0.0 {
                            return Err(domain(DomainKind::DivisionByZero, self));
                        }
                        lhs.div(rhs)
                    }
                    BinaryOp::Pow => {
                        let (base, exp) = (lhs.value(), rhs.value());
                        if base == 0.0 && exp < 0.0 {
                            return Err(domain(DomainKind::DivisionByZero, self));
                        }
                        if base < 0.0 && (exp.fract() != 0.0 || rhs.varies()) {
                            return Err(domain(DomainKind::NegativeBasePower, self));
                        }
                        lhs.pow(rhs)
                    }
                })
            }
        }
    }
}

fn domain(kind: DomainKind, at: &Expr) -> EvalError {
    EvalError::Domain {
        kind,
        expr: at.to_string(),
    }
}
