use crate::expr::EvalError;
use crate::ode::VectorField;

use super::System;

/// `x' = f(x, t)` as an integrable field.
pub struct StateField<'a> {
    pub sys: &'a System,
}

impl VectorField for StateField<'_> {
    fn dim(&self) -> usize {
        self.sys.n()
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
        self.sys.eval_f_into(x, t, dx)
    }
}

/// The 2n-dimensional system `(x, xi)' = (f(x,t), df/dx(x,t) xi)` with output
/// `nu = dh/dx(x,t) xi`. The variational block is always obtained by
/// differentiating `f`, never supplied separately.
pub struct AugmentedSystem<'a> {
    sys: &'a System,
}

impl<'a> AugmentedSystem<'a> {
    pub fn new(sys: &'a System) -> AugmentedSystem<'a> {
        AugmentedSystem { sys }
    }

    pub fn base(&self) -> &System {
        self.sys
    }

    /// `nu` at an augmented state `z = (x, xi)`.
    pub fn output(&self, z: &[f64], t: f64) -> Result<Vec<f64>, EvalError> {
        let n = self.sys.n();
        let (x, xi) = z.split_at(n);
        let (_, jh, _) = self.sys.h_and_jacobian(x, t)?;
        Ok((0..self.sys.m())
            .map(|i| (0..n).map(|j| jh[(i, j)] * xi[j]).sum())
            .collect())
    }
}

impl VectorField for AugmentedSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.sys.n()
    }

    fn eval(&self, t: f64, z: &[f64], dz: &mut [f64]) -> Result<(), EvalError> {
        let n = self.sys.n();
        let (x, xi) = z.split_at(n);
        let (f, jf) = self.sys.f_and_jacobian(x, t)?;
        dz[..n].copy_from_slice(&f);
        for i in 0..n {
            dz[n + i] = (0..n).map(|j| jf[(i, j)] * xi[j]).sum();
        }
        Ok(())
    }
}
