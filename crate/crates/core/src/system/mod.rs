//! System model `x' = f(x, t)`, `y = h(x, t)`: validation, evaluation,
//! forward-mode Jacobians and the augmented state/variational system.

mod augment;
mod builtin;

pub use augment::{AugmentedSystem, StateField};
pub use builtin::{builtin, builtin_doc, builtin_names, load_system};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, Dual, EvalError, Expr, Func, ParseError, SlotEnv};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("unknown variable '{name}' in {field}[{index}] (allowed: x1..x{n}, t)")]
    UnknownVariable {
        field: &'static str,
        index: usize,
        name: String,
        n: usize,
    },
    #[error("abs is not differentiable and may not appear in {field}[{index}]")]
    AbsNotAllowed { field: &'static str, index: usize },
    #[error("cannot parse {field}[{index}]: {source}")]
    Parse {
        field: &'static str,
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error("malformed system document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read system file: {0}")]
    Io(#[from] std::io::Error),
    #[error("unknown system '{0}' (not a file and not a built-in)")]
    UnknownSystem(String),
    #[error("finite-difference step must be positive, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// JSON system-definition document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDoc {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub f: Vec<String>,
    pub h: Vec<String>,
}

impl SystemDoc {
    pub fn from_json(text: &str) -> Result<SystemDoc, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn parse(&self) -> Result<SystemSpec, ModelError> {
        let parse_all = |field: &'static str, srcs: &[String]| {
            srcs.iter()
                .enumerate()
                .map(|(index, s)| parse(s).map_err(|source| ModelError::Parse { field, index, source }))
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(SystemSpec {
            name: self.name.clone(),
            n: self.n,
            m: self.m,
            f: parse_all("f", &self.f)?,
            h: parse_all("h", &self.h)?,
        })
    }

    pub fn build(&self) -> Result<System, ModelError> {
        validate(self.parse()?)
    }
}

/// Parsed but unchecked system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub f: Vec<Expr>,
    pub h: Vec<Expr>,
}

/// Jacobians of `f` and `h` at one `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianBundle {
    /// n x n, `df/dx`
    pub jf: DMatrix<f64>,
    /// m x n, `dh/dx`
    pub jh: DMatrix<f64>,
    /// m, `dh/dt`
    pub dh_dt: DVector<f64>,
}

/// A validated system. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct System {
    spec: SystemSpec,
    time_invariant: bool,
    // "x1".."xn", "t"
    names: Vec<String>,
}

pub fn state_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

pub fn validate(spec: SystemSpec) -> Result<System, ModelError> {
    if spec.n == 0 || spec.m == 0 {
        return Err(ModelError::Dimension(format!(
            "n and m must be at least 1 (n = {}, m = {})",
            spec.n, spec.m
        )));
    }
    if spec.f.len() != spec.n {
        return Err(ModelError::Dimension(format!(
            "n = {} but f has {} components",
            spec.n,
            spec.f.len()
        )));
    }
    if spec.h.len() != spec.m {
        return Err(ModelError::Dimension(format!(
            "m = {} but h has {} components",
            spec.m,
            spec.h.len()
        )));
    }
    let mut names = state_names(spec.n);
    names.push("t".to_string());
    let mut time_invariant = true;
    for (field, exprs) in [("f", &spec.f), ("h", &spec.h)] {
        for (index, e) in exprs.iter().enumerate() {
            for name in e.free_vars() {
                if name == "t" {
                    time_invariant = false;
                } else if !names.contains(&name) {
                    return Err(ModelError::UnknownVariable { field, index, name, n: spec.n });
                }
            }
            if e.uses_func(Func::Abs) {
                return Err(ModelError::AbsNotAllowed { field, index });
            }
        }
    }
    Ok(System {
        spec,
        time_invariant,
        names,
    })
}

impl System {
    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    /// No expression mentions `t`.
    pub fn is_time_invariant(&self) -> bool {
        self.time_invariant
    }

    fn point(&self, x: &[f64], t: f64) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n());
        let mut v = Vec::with_capacity(x.len() + 1);
        v.extend_from_slice(x);
        v.push(t);
        v
    }

    pub fn eval_f_into(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        let values = self.point(x, t);
        let env = SlotEnv { names: &self.names, values: &values };
        for (o, e) in out.iter_mut().zip(&self.spec.f) {
            *o = e.eval(&env)?;
        }
        Ok(())
    }

    pub fn eval_h(&self, x: &[f64], t: f64) -> Result<Vec<f64>, EvalError> {
        let values = self.point(x, t);
        let env = SlotEnv { names: &self.names, values: &values };
        self.spec.h.iter().map(|e| e.eval(&env)).collect()
    }

    pub fn eval_fh(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
        let mut f = vec![0.0; self.n()];
        self.eval_f_into(x, t, &mut f)?;
        Ok((f, self.eval_h(x, t)?))
    }

    /// Dual-number environment seeding x1..xn (and t when `seed_t`).
    fn dual_point(&self, x: &[f64], t: f64, seed_t: bool) -> (Vec<Dual>, usize) {
        let n = self.n();
        let k = if seed_t { n + 1 } else { n };
        let mut v: Vec<Dual> = x.iter().enumerate().map(|(i, xi)| Dual::variable(*xi, i, k)).collect();
        v.push(if seed_t { Dual::variable(t, n, k) } else { Dual::constant(t, k) });
        (v, k)
    }

    /// `f(x, t)` together with `df/dx`, in one forward pass.
    pub fn f_and_jacobian(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, DMatrix<f64>), EvalError> {
        let n = self.n();
        let (values, k) = self.dual_point(x, t, false);
        let env = SlotEnv { names: &self.names, values: &values };
        let mut f = vec![0.0; n];
        let mut jf = DMatrix::zeros(n, n);
        for (i, e) in self.spec.f.iter().enumerate() {
            let d = e.eval_dual(&env, k)?;
            f[i] = d.value;
            for j in 0..n {
                jf[(i, j)] = d.grad[j];
            }
        }
        Ok((f, jf))
    }

    /// `h(x, t)` together with `dh/dx` and `dh/dt`.
    pub fn h_and_jacobian(&self, x: &[f64], t: f64) -> Result<(Vec<f64>, DMatrix<f64>, DVector<f64>), EvalError> {
        let (n, m) = (self.n(), self.m());
        let (values, k) = self.dual_point(x, t, true);
        let env = SlotEnv { names: &self.names, values: &values };
        let mut y = vec![0.0; m];
        let mut jh = DMatrix::zeros(m, n);
        let mut dh_dt = DVector::zeros(m);
        for (i, e) in self.spec.h.iter().enumerate() {
            let d = e.eval_dual(&env, k)?;
            y[i] = d.value;
            for j in 0..n {
                jh[(i, j)] = d.grad[j];
            }
            dh_dt[i] = d.grad[n];
        }
        Ok((y, jh, dh_dt))
    }

    pub fn jacobians(&self, x: &[f64], t: f64) -> Result<JacobianBundle, EvalError> {
        let (_, jf) = self.f_and_jacobian(x, t)?;
        let (_, jh, dh_dt) = self.h_and_jacobian(x, t)?;
        Ok(JacobianBundle { jf, jh, dh_dt })
    }

    /// Central-difference `(df/dx, dh/dx)`; an oracle for [`System::jacobians`].
    pub fn finite_diff_jacobian(
        &self,
        x: &[f64],
        t: f64,
        step: f64,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>), ModelError> {
        if !(step > 0.0) {
            return Err(ModelError::BadStep(step));
        }
        let (n, m) = (self.n(), self.m());
        let mut jf = DMatrix::zeros(n, n);
        let mut jh = DMatrix::zeros(m, n);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for j in 0..n {
            xp[j] = x[j] + step;
            xm[j] = x[j] - step;
            let (fp, hp) = self.eval_fh(&xp, t)?;
            let (fm, hm) = self.eval_fh(&xm, t)?;
            let width = xp[j] - xm[j];
            for i in 0..n {
                jf[(i, j)] = (fp[i] - fm[i]) / width;
            }
            for i in 0..m {
                jh[(i, j)] = (hp[i] - hm[i]) / width;
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
        Ok((jf, jh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(n: usize, m: usize, f: &[&str], h: &[&str]) -> SystemDoc {
        SystemDoc {
            name: "test".into(),
            n,
            m,
            f: f.iter().map(|s| s.to_string()).collect(),
            h: h.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn validation_flags() {
        let ex2 = builtin("ex2-timeinvariant").unwrap();
        assert!(ex2.is_time_invariant());
        assert_eq!((ex2.n(), ex2.m()), (2, 1));
        let ex1 = builtin("ex1-timevarying").unwrap();
        assert!(!ex1.is_time_invariant());
    }

    #[test]
    fn validation_errors() {
        let err = doc(2, 1, &["x3", "x1"], &["x1"]).build().unwrap_err();
        assert!(matches!(err, ModelError::UnknownVariable { ref name, .. } if name == "x3"));
        let err = doc(2, 1, &["x1"], &["x1"]).build().unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)));
        let err = doc(1, 1, &["abs(x1)"], &["x1"]).build().unwrap_err();
        assert!(matches!(err, ModelError::AbsNotAllowed { field: "f", .. }));
        let err = doc(0, 1, &[], &["1"]).build().unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)));
        let err = doc(1, 1, &["x1 +"], &["x1"]).build().unwrap_err();
        assert!(matches!(err, ModelError::Parse { field: "f", index: 0, .. }));
    }

    #[test]
    fn eval_fh_examples() {
        let lti = builtin("lti-remark1").unwrap();
        let (f, y) = lti.eval_fh(&[1.0, 0.0], 0.0).unwrap();
        assert_eq!(f, [-2.0, 1.0]);
        assert_eq!(y, [1.0]);

        let ex2 = builtin("ex2-timeinvariant").unwrap();
        let (f, _) = ex2.eval_fh(&[3.0, 3.0], 0.0).unwrap();
        assert!((f[0] - (-9.0 - 6f64.sin())).abs() < 1e-14);
        assert!((f[1] - (-9.0 + 6f64.cos())).abs() < 1e-14);
        assert!((f[0] + 8.720585).abs() < 1e-6 && (f[1] + 8.039830).abs() < 1e-6);

        let ident = doc(2, 2, &["-x1", "-x2"], &["x1", "x2"]).build().unwrap();
        let (_, y) = ident.eval_fh(&[0.25, -4.0], 1.0).unwrap();
        assert_eq!(y, [0.25, -4.0]);
    }

    #[test]
    fn jacobian_examples() {
        let lti = builtin("lti-remark1").unwrap();
        for (x, t) in [([0.0, 0.0], 0.0), ([3.0, -1.0], 7.5)] {
            let j = lti.jacobians(&x, t).unwrap();
            assert_eq!(j.jf, DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0]));
        }
        let (jf_fd, _) = lti.finite_diff_jacobian(&[0.3, 0.4], 0.0, 1e-3).unwrap();
        assert!((jf_fd - DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 1.0, -2.0])).amax() <= 1e-9);

        let ex2 = builtin("ex2-timeinvariant").unwrap();
        let j = ex2.jacobians(&[0.0, 0.0], 0.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[-1.0, -4.0, -3.0, 0.0]);
        let (fd, _) = ex2.finite_diff_jacobian(&[0.0, 0.0], 0.0, 1e-6).unwrap();
        assert!((&fd - &expected).amax() < 1e-8);
        assert!((j.jf - expected).amax() < 1e-15);

        let ex1 = builtin("ex1-timevarying").unwrap();
        for x in [[1.0, 2.0], [-4.0, 0.5]] {
            let j = ex1.jacobians(&x, 0.5).unwrap();
            assert_eq!(j.jh, DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
            assert_eq!(j.dh_dt[0], 0.0);
            let (fd, _) = ex1.finite_diff_jacobian(&x, 0.5, 1e-6).unwrap();
            assert!((&fd - &j.jf).amax() <= 1e-5 * (1.0 + j.jf.amax()));
        }

        assert!(matches!(lti.finite_diff_jacobian(&[0.0, 0.0], 0.0, 0.0), Err(ModelError::BadStep(_))));
    }

    #[test]
    fn dh_dt_of_time_varying_output() {
        let bad = builtin("lti-remark1-badout").unwrap();
        let j = bad.jacobians(&[1.5, 0.0], 0.25).unwrap();
        let e = (0.5f64).exp();
        assert!((j.jh[(0, 0)] - e).abs() < 1e-15);
        assert!((j.dh_dt[0] - 2.0 * e * 1.5).abs() < 1e-14);
    }
}
