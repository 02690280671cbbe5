use crate::sampling::{dist2, norm2, par_indexed, stream, uniform_in_box, unit_sphere};
use crate::system::{StateField, System};

use super::fit::{fit_rate, fit_rate_skip, noise_floor, FitError, RateFit};
use super::pair::{equal_output_partner, reporting_grid, simulate_pair};
use super::variational::simulate_variational;
use super::{
    CheckConfig, ContractionError, DivergenceSeries, SampleRecord, SampleRef, SamplingPlan, Status, Verdict,
};
use crate::ode::Termination;

/// Initial output distance below which a pair counts as equal-output.
pub const EQUAL_OUTPUT_TOL: f64 = 1e-12;
/// Separation that turns an equal-output pair into a counterexample.
pub const SEPARATION_TOL: f64 = 1e-6;

type Outcome = (SampleRecord, Option<DivergenceSeries>);

/// Fits the envelope. When the series decays so fast that the regular window
/// holds too few points above the floor, the window is reopened at `t0`.
fn fit_series(series: &DivergenceSeries, scale: f64) -> Result<RateFit, FitError> {
    let floor = noise_floor(&series.d);
    match fit_rate(&series.times, &series.d, scale, floor) {
        Err(FitError::TooFewPoints { .. }) => fit_rate_skip(&series.times, &series.d, scale, floor, 0.0),
        other => other,
    }
}

fn judge(sample: SampleRef, series: DivergenceSeries, scale: f64, cfg: &CheckConfig) -> Outcome {
    let mut record = SampleRecord {
        sample,
        status: Status::Passed,
        scale,
        dx0: series.dx0,
        dy0: series.dy0,
        max_d: series.max_d(),
        termination: series.termination,
        fit: None,
        fit_error: None,
        detail: String::new(),
    };
    if let Some(t) = series.termination.failure_time() {
        record.status = Status::Numerical;
        record.detail = format!("integration stopped at t = {t} ({})", termination_name(series.termination));
        return (record, Some(series));
    }
    match fit_series(&series, scale) {
        Ok(fit) => {
            if !(fit.alpha >= cfg.alpha_min) || !fit.c_tight.is_finite() {
                record.status = Status::SlowDecay;
                record.detail = format!(
                    "fitted alpha = {} (alpha_min = {}), c_tight = {}",
                    fit.alpha, cfg.alpha_min, fit.c_tight
                );
            }
            record.fit = Some(fit);
        }
        Err(e) => {
            record.status = Status::InvalidFit;
            record.detail = e.to_string();
            record.fit_error = Some(e);
        }
    }
    (record, Some(series))
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Completed => "completed",
        Termination::BlowUp { .. } => "blow-up",
        Termination::StepUnderflow { .. } => "step underflow",
        Termination::StepLimit { .. } => "step limit",
    }
}

fn numerical(sample: SampleRef, err: ContractionError) -> Outcome {
    let record = SampleRecord {
        sample,
        status: Status::Numerical,
        scale: f64::NAN,
        dx0: f64::NAN,
        dy0: f64::NAN,
        max_d: f64::NAN,
        termination: Termination::Completed,
        fit: None,
        fit_error: None,
        detail: err.to_string(),
    };
    (record, None)
}

fn run<F>(sys: &System, plan: &SamplingPlan, cfg: &CheckConfig, check: &str, job: F) -> Result<Verdict, ContractionError>
where
    F: Fn(usize) -> Outcome + Sync + Send,
{
    plan.validate(sys.n())?;
    if cfg.grid_points < 2 {
        return Err(ContractionError::Grid(cfg.grid_points));
    }
    cfg.integrator.build()?;
    let outcomes = par_indexed(plan.pairs, cfg.threads, job)?;
    Ok(Verdict::assemble(check, outcomes))
}

fn pair_ref(index: usize, x0: &[f64], x0p: &[f64]) -> SampleRef {
    SampleRef { index, x0: x0.to_vec(), x0p: Some(x0p.to_vec()), xi0: None }
}

/// Output contraction: every sampled pair must satisfy
/// `|y - y'| <= c exp(-alpha (t - t0)) |x0 - x0'|` with `alpha >= alpha_min`.
pub fn check_output_contraction(sys: &System, plan: &SamplingPlan, cfg: &CheckConfig) -> Result<Verdict, ContractionError> {
    run(sys, plan, cfg, "contraction", |i| {
        let mut rng = stream(plan.seed, i);
        let x0 = uniform_in_box(&mut rng, &plan.bounds);
        let x0p = uniform_in_box(&mut rng, &plan.bounds);
        let sample = pair_ref(i, &x0, &x0p);
        match simulate_pair(sys, &x0, &x0p, plan.t0, plan.tf, cfg) {
            Ok(series) => {
                let scale = series.dx0;
                judge(sample, series, scale, cfg)
            }
            Err(e) => numerical(sample, e),
        }
    })
}

/// Judges one pair against the partial-contraction bound scaled by the
/// initial output distance.
pub fn partial_pair_record(
    sys: &System,
    index: usize,
    x0: &[f64],
    x0p: &[f64],
    t0: f64,
    tf: f64,
    cfg: &CheckConfig,
) -> Result<(SampleRecord, DivergenceSeries), ContractionError> {
    let series = simulate_pair(sys, x0, x0p, t0, tf, cfg)?;
    let sample = pair_ref(index, x0, x0p);
    if series.dy0 <= EQUAL_OUTPUT_TOL {
        let max_d = series.max_d();
        let (t_sep, _) = series
            .times
            .iter()
            .zip(&series.d)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(t, d)| (*t, *d))
            .unwrap_or((t0, 0.0));
        let record = SampleRecord {
            sample,
            status: if max_d > SEPARATION_TOL { Status::EqualOutputDivergence } else { Status::Passed },
            scale: series.dy0,
            dx0: series.dx0,
            dy0: series.dy0,
            max_d,
            termination: series.termination,
            fit: None,
            fit_error: None,
            detail: if max_d > SEPARATION_TOL {
                format!(
                    "initial outputs differ by {:e} but the outputs separate to {max_d:e} at t = {t_sep}",
                    series.dy0
                )
            } else {
                "outputs stay together".to_string()
            },
        };
        return Ok((record, series));
    }
    let scale = series.dy0;
    let (record, series) = judge(sample, series, scale, cfg);
    Ok((record, series.expect("judge keeps the series")))
}

/// Partial contraction: the bound is scaled by the initial output distance.
/// Even-indexed samples are ordinary random pairs; odd-indexed samples have
/// their partner moved onto the initial output level set, which falls back
/// to an ordinary pair when `dh/dx` has full column rank.
pub fn check_partial_contraction(sys: &System, plan: &SamplingPlan, cfg: &CheckConfig) -> Result<Verdict, ContractionError> {
    run(sys, plan, cfg, "partial", |i| {
        let mut rng = stream(plan.seed, i);
        let x0 = uniform_in_box(&mut rng, &plan.bounds);
        let guess = uniform_in_box(&mut rng, &plan.bounds);
        let x0p = if i % 2 == 1 {
            equal_output_partner(sys, &x0, &guess, plan.t0).unwrap_or(guess)
        } else {
            guess
        };
        match partial_pair_record(sys, i, &x0, &x0p, plan.t0, plan.tf, cfg) {
            Ok((record, series)) => (record, Some(series)),
            Err(e) => numerical(pair_ref(i, &x0, &x0p), e),
        }
    })
}

/// Output exponential stability of the variational system: `|nu(t)|` must
/// decay exponentially relative to `|xi0| = 1` for random base points and
/// directions.
pub fn check_oes_variational(sys: &System, plan: &SamplingPlan, cfg: &CheckConfig) -> Result<Verdict, ContractionError> {
    run(sys, plan, cfg, "oes", |i| {
        let mut rng = stream(plan.seed, i);
        let x0 = uniform_in_box(&mut rng, &plan.bounds);
        let xi0 = unit_sphere(&mut rng, sys.n());
        let sample = SampleRef { index: i, x0: x0.clone(), x0p: None, xi0: Some(xi0.clone()) };
        match simulate_variational(sys, &x0, &xi0, plan.t0, plan.tf, cfg) {
            Ok(run) => {
                let d = run.nu_norms();
                let scale = norm2(&xi0);
                let series = DivergenceSeries {
                    dx0: scale,
                    dy0: d.first().copied().unwrap_or(f64::NAN),
                    state_d: run.xi.iter().map(|v| norm2(v)).collect(),
                    times: run.times,
                    d,
                    termination: run.termination,
                };
                judge(sample, series, scale, cfg)
            }
            Err(e) => numerical(sample, e),
        }
    })
}

/// Output exponential stability towards `y_star` for a time-invariant system.
/// The fit is scaled by `|x0 - x_ref0|`, or by `1 + |x0|` without a reference
/// initial state.
pub fn check_oes_equilibrium(
    sys: &System,
    y_star: &[f64],
    x_ref0: Option<&[f64]>,
    plan: &SamplingPlan,
    cfg: &CheckConfig,
) -> Result<Verdict, ContractionError> {
    if !sys.is_time_invariant() {
        return Err(ContractionError::TimeVarying(sys.name().to_string()));
    }
    if y_star.len() != sys.m() {
        return Err(ContractionError::Dimension { what: "y_star", got: y_star.len(), want: sys.m() });
    }
    if y_star.iter().any(|v| !v.is_finite()) {
        return Err(ContractionError::NonFiniteEquilibrium);
    }
    if let Some(r) = x_ref0 {
        if r.len() != sys.n() {
            return Err(ContractionError::Dimension { what: "x_ref0", got: r.len(), want: sys.n() });
        }
    }
    run(sys, plan, cfg, "oes-eq", |i| {
        let mut rng = stream(plan.seed, i);
        let x0 = uniform_in_box(&mut rng, &plan.bounds);
        let sample = SampleRef { index: i, x0: x0.clone(), x0p: None, xi0: None };
        match equilibrium_series(sys, &x0, y_star, plan.t0, plan.tf, cfg) {
            Ok(series) => {
                let scale = match x_ref0 {
                    Some(r) => dist2(&x0, r),
                    None => 1.0 + norm2(&x0),
                };
                judge(sample, series, scale, cfg)
            }
            Err(e) => numerical(sample, e),
        }
    })
}

fn equilibrium_series(
    sys: &System,
    x0: &[f64],
    y_star: &[f64],
    t0: f64,
    tf: f64,
    cfg: &CheckConfig,
) -> Result<DivergenceSeries, ContractionError> {
    let traj = cfg.integrator.build()?.integrate(&StateField { sys }, x0, t0, tf)?;
    let mut series = DivergenceSeries {
        times: Vec::new(),
        d: Vec::new(),
        state_d: Vec::new(),
        dx0: norm2(x0),
        dy0: dist2(&sys.eval_h(x0, t0)?, y_star),
        termination: traj.termination(),
    };
    let t_end = traj.t_end();
    for t in reporting_grid(t0, tf, cfg.grid_points).into_iter().take_while(|t| *t <= t_end) {
        let x = traj.sample_at(t)?;
        series.d.push(dist2(&sys.eval_h(&x, t)?, y_star));
        series.state_d.push(norm2(&x));
        series.times.push(t);
    }
    Ok(series)
}
