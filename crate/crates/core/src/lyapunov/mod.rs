//! Sampling-based falsification of Lyapunov conditions for output
//! exponential stability, and the rate those conditions imply.
//!
//! A candidate `V(x, xi, t)` is probed on a box of base states, a stratified
//! set of variations and a time range. A pass means no sampled point violated
//! the inequalities; it is not a proof.

mod candidate;
mod falsify;

pub use candidate::{vdot, vdot_fd, CandidateV};
pub use falsify::{
    falsify, tolerance, CheckDomain, Condition, Counterexample, Decay, FalsificationReport, Inequality, Sandwich,
    TimeInvariant,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::system::{ModelError, System};

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("cannot parse candidate: {0}")]
    Parse(#[from] ParseError),
    #[error("unknown variable '{name}' in candidate (allowed: x1..x{n}, xi1..xi{n}, t)")]
    UnknownVariable { name: String, n: usize },
    #[error("{what} has dimension {got}, expected {want}")]
    Dimension { what: &'static str, got: usize, want: usize },
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("{0}")]
    TimeVarying(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot start worker pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

/// Constants of the time-varying sandwich and decay conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub p: f64,
}

impl Bounds {
    pub fn validate(&self) -> Result<(), LyapunovError> {
        let all = [self.alpha1, self.alpha2, self.alpha3, self.alpha4, self.p];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(LyapunovError::Bounds("constants must be finite".into()));
        }
        if !(self.alpha1 > 0.0 && self.alpha2 > 0.0) {
            return Err(LyapunovError::Bounds(format!(
                "alpha1 and alpha2 must be positive (got {}, {})",
                self.alpha1, self.alpha2
            )));
        }
        if !(self.alpha3 >= 0.0) {
            return Err(LyapunovError::Bounds(format!("alpha3 must be non-negative, got {}", self.alpha3)));
        }
        if !(self.alpha3 < self.alpha4) {
            return Err(LyapunovError::Bounds(format!(
                "alpha3 < alpha4 required (got {} and {})",
                self.alpha3, self.alpha4
            )));
        }
        if !(self.p >= 1.0) {
            return Err(LyapunovError::Bounds(format!("p must be at least 1, got {}", self.p)));
        }
        Ok(())
    }
}

/// Constants of the time-invariant conditions; `decay` plays the role of the
/// rate in `Vdot <= -decay V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryBounds {
    pub alpha1: f64,
    pub alpha2: f64,
    pub decay: f64,
    pub p: f64,
}

impl CorollaryBounds {
    /// The equivalent time-varying constants, with no growth term.
    pub fn as_bounds(&self) -> Bounds {
        Bounds { alpha1: self.alpha1, alpha2: self.alpha2, alpha3: 0.0, alpha4: self.decay, p: self.p }
    }

    pub fn validate(&self) -> Result<(), LyapunovError> {
        self.as_bounds().validate()
    }
}

/// `(c, alpha)` with `alpha = (alpha4 - alpha3) / p` and
/// `c = (alpha2 / alpha1)^(1/p)`, so that `|nu(t)| <= c e^{-alpha (t - t0)} |xi(t0)|`.
pub fn implied_rate(b: &Bounds) -> Result<(f64, f64), LyapunovError> {
    b.validate()?;
    Ok(((b.alpha2 / b.alpha1).powf(1.0 / b.p), (b.alpha4 - b.alpha3) / b.p))
}

pub fn check_sandwich(
    sys: &System,
    v: &CandidateV,
    bounds: &Bounds,
    domain: &CheckDomain,
) -> Result<FalsificationReport, LyapunovError> {
    bounds.validate()?;
    falsify(sys, v, &Sandwich(*bounds), domain)
}

pub fn check_decay(
    sys: &System,
    v: &CandidateV,
    bounds: &Bounds,
    domain: &CheckDomain,
) -> Result<FalsificationReport, LyapunovError> {
    bounds.validate()?;
    falsify(sys, v, &Decay(*bounds), domain)
}

/// Both time-invariant conditions; rejects systems or candidates that
/// mention `t`.
pub fn check_time_invariant(
    sys: &System,
    v: &CandidateV,
    bounds: &CorollaryBounds,
    domain: &CheckDomain,
) -> Result<FalsificationReport, LyapunovError> {
    if !sys.is_time_invariant() {
        return Err(LyapunovError::TimeVarying(format!("system '{}' depends on t", sys.name())));
    }
    if v.depends_on_t() {
        return Err(LyapunovError::TimeVarying("candidate depends on t".into()));
    }
    bounds.validate()?;
    falsify(sys, v, &TimeInvariant(*bounds), domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::builtin;

    fn example_one() -> Bounds {
        Bounds { alpha1: 1.0, alpha2: 2.0, alpha3: 0.0, alpha4: 2.0, p: 2.0 }
    }

    fn domain(samples: usize) -> CheckDomain {
        CheckDomain::new(vec![(-10.0, 10.0); 2], (0.0, 2.0 * std::f64::consts::PI), samples, 3)
    }

    #[test]
    fn implied_rate_examples() {
        let (c, a) = implied_rate(&example_one()).unwrap();
        assert_eq!(a, 1.0);
        assert!((c - 2f64.sqrt()).abs() < 1e-15);
        let cor = CorollaryBounds { alpha1: 1.0, alpha2: 2.0, decay: 2.0, p: 2.0 };
        assert_eq!(implied_rate(&cor.as_bounds()).unwrap().1, 1.0);
        let flat = Bounds { alpha4: 0.0, ..example_one() };
        assert!(matches!(implied_rate(&flat), Err(LyapunovError::Bounds(_))));
    }

    #[test]
    fn sandwich_too_tight_upper_bound() {
        let sys = builtin("ex1-timevarying").unwrap();
        let v = CandidateV::parse("(xi1 + xi2)^2", 2).unwrap();
        let b = Bounds { alpha2: 0.5, ..example_one() };
        let r = check_sandwich(&sys, &v, &b, &domain(200)).unwrap();
        assert!(!r.passed);
        let c = r.counterexample.unwrap();
        assert_eq!(c.inequality, "upper");
        assert!(c.margin < -tolerance(c.v));
    }

    #[test]
    fn lower_bound_is_tight_but_passes() {
        let sys = builtin("ex1-timevarying").unwrap();
        let v = CandidateV::parse("(xi1 + xi2)^2", 2).unwrap();
        let r = check_sandwich(&sys, &v, &example_one(), &domain(2000)).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_margin.abs() < 1e-9);
    }

    #[test]
    fn lti_decay() {
        let sys = builtin("lti-remark1").unwrap();
        let v = CandidateV::parse("xi1^2 + xi2^2", 2).unwrap();
        let b = Bounds { alpha1: 1.0, alpha2: 1.0, alpha3: 0.0, alpha4: 2.0, p: 2.0 };
        assert!(check_decay(&sys, &v, &b, &domain(1000)).unwrap().passed);
    }

    #[test]
    fn time_invariant_rejections() {
        let sys = builtin("ex1-timevarying").unwrap();
        let v = CandidateV::parse("(xi1 + xi2)^2", 2).unwrap();
        let b = CorollaryBounds { alpha1: 1.0, alpha2: 2.0, decay: 2.0, p: 2.0 };
        assert!(matches!(check_time_invariant(&sys, &v, &b, &domain(10)), Err(LyapunovError::TimeVarying(_))));
        let sys = builtin("ex2-timeinvariant").unwrap();
        let vt = CandidateV::parse("(xi1 + xi2)^2 * exp(-t)", 2).unwrap();
        assert!(matches!(check_time_invariant(&sys, &vt, &b, &domain(10)), Err(LyapunovError::TimeVarying(_))));
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let sys = builtin("ex1-timevarying").unwrap();
        let v = CandidateV::parse("(xi1 + xi2)^2", 2).unwrap();
        let b = Bounds { alpha4: 12.0, ..example_one() };
        let mut d = domain(3000);
        d.threads = Some(1);
        let one = check_decay(&sys, &v, &b, &d).unwrap();
        d.threads = Some(5);
        assert_eq!(one, check_decay(&sys, &v, &b, &d).unwrap());
        assert!(!one.passed);
    }
}
