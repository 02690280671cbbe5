// NaN-rejecting guards are written as `!(a < b)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contraction;
pub mod expr;
pub mod lyapunov;
pub mod ode;
pub mod sampling;
pub mod system;
