//! Explicit Runge-Kutta integration of vector fields.
//!
//! Two interchangeable integrators are registered by name in
//! [`IntegratorRegistry`]: `rk4-fixed` (classical RK4 on a uniform grid) and
//! `rk45-adaptive` (Dormand-Prince 5(4)). Blow-up is reported through
//! [`Termination`] on an otherwise valid, truncated [`Trajectory`].

mod dopri;
mod registry;
mod rk4;
mod trajectory;

pub use dopri::Rk45;
pub use registry::{Integrator, IntegratorConfig, IntegratorRegistry};
pub use rk4::Rk4;
pub use trajectory::{fmt17, Termination, Trajectory};

use thiserror::Error;

use crate::expr::EvalError;
use crate::system::System;

/// Norm beyond which a state is treated as blown up.
pub const BLOWUP_NORM: f64 = 1e100;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("invalid horizon: tf ({tf}) must exceed t0 ({t0})")]
    Horizon { t0: f64, tf: f64 },
    #[error("invalid integrator settings: {0}")]
    Config(String),
    #[error("unknown integrator '{0}'")]
    UnknownMethod(String),
    #[error("t = {t} lies outside the integrated horizon [{lo}, {hi}]")]
    OutsideHorizon { t: f64, lo: f64, hi: f64 },
    #[error("initial state has length {got}, field dimension is {want}")]
    Dimension { got: usize, want: usize },
    #[error("vector field evaluation failed at t = {t}: {source}")]
    Eval {
        t: f64,
        #[source]
        source: EvalError,
    },
}

/// A (possibly time-varying) vector field `x' = F(t, x)`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError>;
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> FnField<F> {
        FnField { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
        (self.f)(t, x, dx);
        Ok(())
    }
}

/// Several independent fields integrated as one block-diagonal system, so all
/// blocks share a single step sequence.
pub struct Stacked<'a> {
    blocks: Vec<&'a dyn VectorField>,
}

impl<'a> Stacked<'a> {
    pub fn new(blocks: Vec<&'a dyn VectorField>) -> Stacked<'a> {
        Stacked { blocks }
    }
}

impl VectorField for Stacked<'_> {
    fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) -> Result<(), EvalError> {
        let mut at = 0;
        for b in &self.blocks {
            let d = b.dim();
            b.eval(t, &x[at..at + d], &mut dx[at..at + d])?;
            at += d;
        }
        Ok(())
    }
}

pub(crate) fn check_setup(field: &dyn VectorField, x0: &[f64], t0: f64, tf: f64) -> Result<(), OdeError> {
    if !(tf > t0) {
        return Err(OdeError::Horizon { t0, tf });
    }
    if x0.len() != field.dim() {
        return Err(OdeError::Dimension {
            got: x0.len(),
            want: field.dim(),
        });
    }
    Ok(())
}

pub(crate) fn is_blown_up(x: &[f64]) -> bool {
    x.iter().any(|v| !v.is_finite()) || x.iter().map(|v| v * v).sum::<f64>().sqrt() > BLOWUP_NORM
}

/// Classical RK4 on a uniform grid with step `step`.
pub fn integrate_rk4(
    field: &dyn VectorField,
    x0: &[f64],
    t0: f64,
    tf: f64,
    step: f64,
) -> Result<Trajectory, OdeError> {
    Rk4::new(step)?.integrate(field, x0, t0, tf)
}

/// Dormand-Prince 5(4) with the given tolerances and no step cap.
pub fn integrate_rk45(
    field: &dyn VectorField,
    x0: &[f64],
    t0: f64,
    tf: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, OdeError> {
    Rk45::new(rtol, atol, f64::INFINITY)?.integrate(field, x0, t0, tf)
}

/// Output series `y_i = h(x_i, t_i)` on the trajectory grid.
pub fn map_output(sys: &System, traj: &Trajectory) -> Result<Vec<Vec<f64>>, OdeError> {
    if traj.dim() != sys.n() {
        return Err(OdeError::Dimension {
            got: traj.dim(),
            want: sys.n(),
        });
    }
    traj.times()
        .iter()
        .enumerate()
        .map(|(i, t)| sys.eval_h(traj.state(i), *t).map_err(|source| OdeError::Eval { t: *t, source }))
        .collect()
}
