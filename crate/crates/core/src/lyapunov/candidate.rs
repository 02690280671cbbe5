use crate::expr::{parse, Dual, Expr, SlotEnv};
use crate::system::System;

use super::LyapunovError;

/// A candidate `V(x, xi, t)` over the variables `x1..xn`, `xi1..xin`, `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateV {
    expr: Expr,
    n: usize,
    // x1..xn, xi1..xin, t
    names: Vec<String>,
}

impl CandidateV {
    pub fn new(expr: Expr, n: usize) -> Result<CandidateV, LyapunovError> {
        let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        names.extend((1..=n).map(|i| format!("xi{i}")));
        names.push("t".to_string());
        if let Some(bad) = expr.free_vars().into_iter().find(|v| !names.contains(v)) {
            return Err(LyapunovError::UnknownVariable { name: bad, n });
        }
        Ok(CandidateV { expr, n, names })
    }

    pub fn parse(src: &str, n: usize) -> Result<CandidateV, LyapunovError> {
        CandidateV::new(parse(src)?, n)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depends_on_t(&self) -> bool {
        self.expr.free_vars().contains("t")
    }

    fn point(&self, x: &[f64], xi: &[f64], t: f64) -> Result<Vec<f64>, LyapunovError> {
        for (what, v) in [("x", x), ("xi", xi)] {
            if v.len() != self.n {
                return Err(LyapunovError::Dimension { what, got: v.len(), want: self.n });
            }
        }
        let mut p = Vec::with_capacity(2 * self.n + 1);
        p.extend_from_slice(x);
        p.extend_from_slice(xi);
        p.push(t);
        Ok(p)
    }

    pub fn value(&self, x: &[f64], xi: &[f64], t: f64) -> Result<f64, LyapunovError> {
        let p = self.point(x, xi, t)?;
        Ok(self.expr.eval(&SlotEnv { names: &self.names, values: &p })?)
    }

    /// `V` with its gradient ordered as `(dV/dx, dV/dxi, dV/dt)`.
    pub fn value_and_gradient(&self, x: &[f64], xi: &[f64], t: f64) -> Result<(f64, Vec<f64>), LyapunovError> {
        let p = self.point(x, xi, t)?;
        let k = p.len();
        let duals: Vec<Dual> = p.iter().enumerate().map(|(i, v)| Dual::variable(*v, i, k)).collect();
        let d = self.expr.eval_dual(&SlotEnv { names: &self.names, values: &duals }, k)?;
        Ok((d.value, d.grad.to_vec()))
    }
}

fn check_n(sys: &System, v: &CandidateV) -> Result<(), LyapunovError> {
    if sys.n() != v.n() {
        return Err(LyapunovError::Dimension { what: "candidate", got: v.n(), want: sys.n() });
    }
    Ok(())
}

/// `dV/dt + dV/dx f(x, t) + dV/dxi (df/dx) xi`, all partials by forward-mode
/// differentiation.
pub fn vdot(sys: &System, v: &CandidateV, x: &[f64], xi: &[f64], t: f64) -> Result<f64, LyapunovError> {
    check_n(sys, v)?;
    let n = sys.n();
    let (_, grad) = v.value_and_gradient(x, xi, t)?;
    let (f, jf) = sys.f_and_jacobian(x, t)?;
    let mut total = grad[2 * n];
    for i in 0..n {
        let jf_xi: f64 = (0..n).map(|j| jf[(i, j)] * xi[j]).sum();
        total += grad[i] * f[i] + grad[n + i] * jf_xi;
    }
    Ok(total)
}

/// Central difference of `V` along the augmented flow direction, with the
/// Jacobian itself taken by central differences. Shares no derivative code
/// with [`vdot`].
pub fn vdot_fd(sys: &System, v: &CandidateV, x: &[f64], xi: &[f64], t: f64, eps: f64) -> Result<f64, LyapunovError> {
    check_n(sys, v)?;
    let n = sys.n();
    let (f, _) = sys.eval_fh(x, t)?;
    let (jf, _) = sys.finite_diff_jacobian(x, t, 1e-6 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))))?;
    let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| jf[(i, j)] * xi[j]).sum()).collect();
    let shifted = |s: f64| -> Result<f64, LyapunovError> {
        let xs: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + s * b).collect();
        let xis: Vec<f64> = xi.iter().zip(&g).map(|(a, b)| a + s * b).collect();
        v.value(&xs, &xis, t + s)
    };
    Ok((shifted(eps)? - shifted(-eps)?) / (2.0 * eps))
}
