//! Trajectory-based certification and falsification of output contraction,
//! partial contraction and output exponential stability.
//!
//! Every check samples initial conditions from a [`SamplingPlan`], simulates,
//! fits an exponential envelope to the resulting distance series and folds the
//! per-sample outcomes into a [`Verdict`]. A passing verdict is sampling
//! evidence, never a proof.

mod checks;
mod fit;
mod pair;
mod registry;
mod variational;

pub use checks::{
    check_oes_equilibrium, check_oes_variational, check_output_contraction, check_partial_contraction,
    partial_pair_record,
};
pub use fit::{fit_rate, fit_rate_skip, noise_floor, FitError, RateFit, MIN_FIT_POINTS, WINDOW_SKIP};
pub use pair::{equal_output_partner, reporting_grid, simulate_pair};
pub use registry::{Check, CheckParams, CheckRegistry};
pub use variational::{fd_variational_check, simulate_variational, FdReport, VariationalRun};

use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;
use crate::ode::{IntegratorConfig, OdeError, Termination};

#[derive(Debug, Error)]
pub enum ContractionError {
    #[error("invalid sampling plan: {0}")]
    Plan(String),
    #[error("{what} has length {got}, expected {want}")]
    Dimension { what: &'static str, got: usize, want: usize },
    #[error("the two initial states are identical")]
    IdenticalPair,
    #[error("initial variation must be nonzero")]
    ZeroVariation,
    #[error("difference-quotient step must be positive, got {0}")]
    BadDelta(f64),
    #[error("system '{0}' depends on t; this check needs a time-invariant system")]
    TimeVarying(String),
    #[error("output equilibrium must be finite")]
    NonFiniteEquilibrium,
    #[error("reporting grid needs at least 2 points, got {0}")]
    Grid(usize),
    #[error("unknown check '{0}'")]
    UnknownCheck(String),
    #[error("check '{0}' needs an output equilibrium (y_star)")]
    MissingEquilibrium(&'static str),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot start worker pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

/// Where and how many initial conditions to draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplingPlan {
    /// per-coordinate `[lo, hi]`
    pub bounds: Vec<(f64, f64)>,
    pub pairs: usize,
    pub seed: u64,
    pub t0: f64,
    pub tf: f64,
}

impl SamplingPlan {
    pub fn new(bounds: Vec<(f64, f64)>, pairs: usize, seed: u64, t0: f64, tf: f64) -> SamplingPlan {
        SamplingPlan { bounds, pairs, seed, t0, tf }
    }

    /// The same interval on every coordinate.
    pub fn cube(n: usize, lo: f64, hi: f64, pairs: usize, seed: u64, t0: f64, tf: f64) -> SamplingPlan {
        SamplingPlan::new(vec![(lo, hi); n], pairs, seed, t0, tf)
    }

    pub fn validate(&self, n: usize) -> Result<(), ContractionError> {
        if self.bounds.len() != n {
            return Err(ContractionError::Dimension { what: "box", got: self.bounds.len(), want: n });
        }
        if let Some((i, (lo, hi))) = self
            .bounds
            .iter()
            .enumerate()
            .find(|(_, (lo, hi))| !(lo < hi && lo.is_finite() && hi.is_finite()))
        {
            return Err(ContractionError::Plan(format!("box coordinate {} has lo = {lo}, hi = {hi}", i + 1)));
        }
        if self.pairs == 0 {
            return Err(ContractionError::Plan("pairs must be at least 1".into()));
        }
        if !(self.tf > self.t0) || !self.t0.is_finite() || !self.tf.is_finite() {
            return Err(ContractionError::Plan(format!("need t0 < tf, got [{}, {}]", self.t0, self.tf)));
        }
        Ok(())
    }
}

/// Settings shared by all trajectory checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckConfig {
    pub integrator: IntegratorConfig,
    /// points on the uniform reporting grid
    pub grid_points: usize,
    /// smallest fitted rate accepted as decay
    pub alpha_min: f64,
    /// worker count; `None` uses the global pool
    pub threads: Option<usize>,
}

impl Default for CheckConfig {
    fn default() -> CheckConfig {
        CheckConfig {
            integrator: IntegratorConfig::rk45(1e-9, 1e-12),
            grid_points: 401,
            alpha_min: 0.05,
            threads: None,
        }
    }
}

/// Distance between two outputs (or an output and a target) on the
/// reporting grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceSeries {
    pub times: Vec<f64>,
    pub d: Vec<f64>,
    /// state distance on the same grid, when a second state exists
    pub state_d: Vec<f64>,
    pub dx0: f64,
    pub dy0: f64,
    pub termination: Termination,
}

impl DivergenceSeries {
    pub fn max_d(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation of `d` between grid points.
    pub fn d_at(&self, t: f64) -> Option<f64> {
        interp(&self.times, &self.d, t)
    }

    pub fn state_d_at(&self, t: f64) -> Option<f64> {
        interp(&self.times, &self.state_d, t)
    }

    /// `t,d` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,d")?;
        for (t, d) in self.times.iter().zip(&self.d) {
            writeln!(w, "{},{}", crate::ode::fmt17(*t), crate::ode::fmt17(*d))?;
        }
        Ok(())
    }
}

fn interp(times: &[f64], v: &[f64], t: f64) -> Option<f64> {
    if v.len() != times.len() || times.is_empty() || t < times[0] || t > *times.last()? {
        return None;
    }
    let i = times.partition_point(|s| *s < t);
    if times[i] == t {
        return Some(v[i]);
    }
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    Some(v[i - 1] + w * (v[i] - v[i - 1]))
}

/// Outcome of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Passed,
    /// fitted rate below `alpha_min`, or unbounded constant
    SlowDecay,
    /// too few points above the noise floor to fit
    InvalidFit,
    /// outputs equal at `t0` but separated later
    EqualOutputDivergence,
    /// integration stopped early or the model could not be evaluated
    Numerical,
}

impl Status {
    pub fn passed(self) -> bool {
        self == Status::Passed
    }
}

/// Initial data of one sample, enough to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRef {
    pub index: usize,
    pub x0: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0p: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRecord {
    #[serde(flatten)]
    pub sample: SampleRef,
    pub status: Status,
    /// the scale the fit divides by
    pub scale: f64,
    pub dx0: f64,
    pub dy0: f64,
    pub max_d: f64,
    pub termination: Termination,
    pub fit: Option<RateFit>,
    pub fit_error: Option<FitError>,
    pub detail: String,
}

/// A failing sample singled out as evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    #[serde(flatten)]
    pub sample: SampleRef,
    pub kind: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub holds: bool,
    pub pairs: usize,
    pub passed: usize,
    pub numerical_failures: usize,
    /// slowest fitted rate over all samples with a valid fit
    pub min_alpha: Option<f64>,
    /// largest pointwise-tight constant over all samples with a valid fit
    pub max_c: Option<f64>,
    pub worst_pair: Option<SampleRef>,
    pub witness: Option<Witness>,
    pub records: Vec<SampleRecord>,
    #[serde(skip)]
    pub series: Vec<Option<DivergenceSeries>>,
}

impl Verdict {
    pub(crate) fn assemble(check: &str, outcomes: Vec<(SampleRecord, Option<DivergenceSeries>)>) -> Verdict {
        let (records, series): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
        let fits = || records.iter().filter_map(|r| r.fit.as_ref());
        let min_alpha = fits().map(|f| f.alpha).reduce(f64::min);
        let max_c = fits().map(|f| f.c_tight).reduce(f64::max);
        let failing = records.iter().find(|r| !r.status.passed());
        let worst = failing.or_else(|| {
            records
                .iter()
                .filter(|r| r.fit.is_some())
                .min_by(|a, b| a.fit.as_ref().unwrap().alpha.total_cmp(&b.fit.as_ref().unwrap().alpha))
        });
        Verdict {
            check: check.to_string(),
            holds: failing.is_none(),
            pairs: records.len(),
            passed: records.iter().filter(|r| r.status.passed()).count(),
            numerical_failures: records.iter().filter(|r| r.status == Status::Numerical).count(),
            min_alpha,
            max_c,
            worst_pair: worst.map(|r| r.sample.clone()),
            witness: failing.map(|r| Witness {
                sample: r.sample.clone(),
                kind: r.status,
                detail: r.detail.clone(),
            }),
            records,
            series,
        }
    }

    /// Every failure is a numerical one (blow-up, step underflow, domain error).
    pub fn only_numerical_failures(&self) -> bool {
        !self.holds && self.numerical_failures == self.pairs - self.passed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_validation() {
        assert!(SamplingPlan::cube(2, -1.0, 1.0, 3, 0, 0.0, 1.0).validate(2).is_ok());
        assert!(SamplingPlan::cube(2, -1.0, 1.0, 3, 0, 0.0, 1.0).validate(3).is_err());
        assert!(SamplingPlan::cube(2, 1.0, 1.0, 3, 0, 0.0, 1.0).validate(2).is_err());
        assert!(SamplingPlan::cube(2, -1.0, 1.0, 0, 0, 0.0, 1.0).validate(2).is_err());
        assert!(SamplingPlan::cube(2, -1.0, 1.0, 3, 0, 1.0, 1.0).validate(2).is_err());
    }

    #[test]
    fn interpolation() {
        let s = DivergenceSeries {
            times: vec![0.0, 1.0, 2.0],
            d: vec![4.0, 2.0, 1.0],
            state_d: vec![0.0, 1.0, 2.0],
            dx0: 1.0,
            dy0: 4.0,
            termination: Termination::Completed,
        };
        assert_eq!(s.d_at(1.5), Some(1.5));
        assert_eq!(s.d_at(2.0), Some(1.0));
        assert_eq!(s.state_d_at(0.25), Some(0.25));
        assert_eq!(s.d_at(2.5), None);
        assert_eq!(s.max_d(), 4.0);
    }
}
