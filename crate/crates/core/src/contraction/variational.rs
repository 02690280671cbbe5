use serde::Serialize;

use crate::ode::{Stacked, Termination, VectorField};
use crate::sampling::{dist2, norm2};
use crate::system::{AugmentedSystem, StateField, System};

use super::pair::reporting_grid;
use super::{CheckConfig, ContractionError};

/// Base trajectory, variation and variational output on the reporting grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalRun {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
    pub termination: Termination,
}

impl VariationalRun {
    pub fn nu_norms(&self) -> Vec<f64> {
        self.nu.iter().map(|v| norm2(v)).collect()
    }
}

fn check_dims(sys: &System, x0: &[f64], xi0: &[f64]) -> Result<(), ContractionError> {
    let n = sys.n();
    for (what, v) in [("x0", x0), ("xi0", xi0)] {
        if v.len() != n {
            return Err(ContractionError::Dimension { what, got: v.len(), want: n });
        }
    }
    if xi0.iter().all(|v| *v == 0.0) {
        return Err(ContractionError::ZeroVariation);
    }
    Ok(())
}

/// Integrates `(x, xi)` and evaluates `nu = dh/dx xi` on the reporting grid.
pub fn simulate_variational(
    sys: &System,
    x0: &[f64],
    xi0: &[f64],
    t0: f64,
    tf: f64,
    cfg: &CheckConfig,
) -> Result<VariationalRun, ContractionError> {
    check_dims(sys, x0, xi0)?;
    if cfg.grid_points < 2 {
        return Err(ContractionError::Grid(cfg.grid_points));
    }
    let n = sys.n();
    let aug = AugmentedSystem::new(sys);
    let z0: Vec<f64> = x0.iter().chain(xi0).copied().collect();
    let traj = cfg.integrator.build()?.integrate(&aug, &z0, t0, tf)?;
    let mut run = VariationalRun {
        times: Vec::new(),
        x: Vec::new(),
        xi: Vec::new(),
        nu: Vec::new(),
        termination: traj.termination(),
    };
    let t_end = traj.t_end();
    for t in reporting_grid(t0, tf, cfg.grid_points).into_iter().take_while(|t| *t <= t_end) {
        let z = traj.sample_at(t)?;
        run.nu.push(aug.output(&z, t)?);
        run.times.push(t);
        run.x.push(z[..n].to_vec());
        run.xi.push(z[n..].to_vec());
    }
    Ok(run)
}

/// Largest relative gap between difference quotients and the variational
/// solution over the integration grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdReport {
    /// `max_t |(phi(x0 + delta xi0, t) - phi(x0, t)) / delta - xi(t)| / (1e-12 + |xi(t)|)`
    pub state_deviation: f64,
    /// the same with outputs against `nu(t)`
    pub output_deviation: f64,
    pub points: usize,
    pub termination: Termination,
}

/// Difference-quotient consistency of the variational system. The base
/// trajectory, its variation and the perturbed trajectory share one step
/// sequence, so integration error largely cancels in the quotient.
pub fn fd_variational_check(
    sys: &System,
    x0: &[f64],
    xi0: &[f64],
    delta: f64,
    t0: f64,
    tf: f64,
    cfg: &CheckConfig,
) -> Result<FdReport, ContractionError> {
    check_dims(sys, x0, xi0)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(ContractionError::BadDelta(delta));
    }
    let n = sys.n();
    let aug = AugmentedSystem::new(sys);
    let pert = StateField { sys };
    let field = Stacked::new(vec![&aug as &dyn VectorField, &pert]);
    let z0: Vec<f64> = x0
        .iter()
        .chain(xi0)
        .copied()
        .chain(x0.iter().zip(xi0).map(|(x, v)| x + delta * v))
        .collect();
    let traj = cfg.integrator.build()?.integrate(&field, &z0, t0, tf)?;
    let mut report = FdReport {
        state_deviation: 0.0,
        output_deviation: 0.0,
        points: traj.len(),
        termination: traj.termination(),
    };
    for (i, t) in traj.times().iter().enumerate() {
        let z = traj.state(i);
        let (x, rest) = z.split_at(n);
        let (xi, xp) = rest.split_at(n);
        let q: Vec<f64> = xp.iter().zip(x).map(|(a, b)| (a - b) / delta).collect();
        report.state_deviation = report.state_deviation.max(dist2(&q, xi) / (1e-12 + norm2(xi)));
        let nu = aug.output(&z[..2 * n], *t)?;
        let qy: Vec<f64> = sys
            .eval_h(xp, *t)?
            .iter()
            .zip(sys.eval_h(x, *t)?)
            .map(|(a, b)| (a - b) / delta)
            .collect();
        report.output_deviation = report.output_deviation.max(dist2(&qy, &nu) / (1e-12 + norm2(&nu)));
    }
    Ok(report)
}
