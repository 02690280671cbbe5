use nalgebra::{DMatrix, DVector};

use crate::ode::{Stacked, VectorField};
use crate::sampling::{dist2, norm2};
use crate::system::{StateField, System};

use super::{CheckConfig, ContractionError, DivergenceSeries};

/// Residual on `|h(x', t0) - h(x, t0)|` accepted for an equal-output partner.
pub const LEVEL_SET_TOL: f64 = 1e-10;
const NEWTON_ITERS: usize = 30;

/// `points` equally spaced times on `[t0, tf]`, both ends included.
pub fn reporting_grid(t0: f64, tf: f64, points: usize) -> Vec<f64> {
    let last = points - 1;
    (0..points)
        .map(|i| if i == last { tf } else { t0 + (tf - t0) * i as f64 / last as f64 })
        .collect()
}

/// Integrates both initial states on a shared step sequence and reports the
/// output distance on the reporting grid. After a blow-up the series stops at
/// the last grid point reached.
pub fn simulate_pair(
    sys: &System,
    x0: &[f64],
    x0p: &[f64],
    t0: f64,
    tf: f64,
    cfg: &CheckConfig,
) -> Result<DivergenceSeries, ContractionError> {
    let n = sys.n();
    for (what, v) in [("x0", x0), ("x0p", x0p)] {
        if v.len() != n {
            return Err(ContractionError::Dimension { what, got: v.len(), want: n });
        }
    }
    if x0 == x0p {
        return Err(ContractionError::IdenticalPair);
    }
    if cfg.grid_points < 2 {
        return Err(ContractionError::Grid(cfg.grid_points));
    }
    let a = StateField { sys };
    let b = StateField { sys };
    let field = Stacked::new(vec![&a as &dyn VectorField, &b]);
    let z0: Vec<f64> = x0.iter().chain(x0p).copied().collect();
    let traj = cfg.integrator.build()?.integrate(&field, &z0, t0, tf)?;

    let y0 = sys.eval_h(x0, t0)?;
    let y0p = sys.eval_h(x0p, t0)?;
    let mut series = DivergenceSeries {
        times: Vec::new(),
        d: Vec::new(),
        state_d: Vec::new(),
        dx0: dist2(x0, x0p),
        dy0: dist2(&y0, &y0p),
        termination: traj.termination(),
    };
    let t_end = traj.t_end();
    for t in reporting_grid(t0, tf, cfg.grid_points).into_iter().take_while(|t| *t <= t_end) {
        let z = traj.sample_at(t)?;
        let (x, xp) = z.split_at(n);
        series.times.push(t);
        series.d.push(dist2(&sys.eval_h(x, t)?, &sys.eval_h(xp, t)?));
        series.state_d.push(dist2(x, xp));
    }
    Ok(series)
}

/// Moves `guess` onto the level set `{x' : h(x', t0) = h(x, t0)}` while
/// keeping it away from `x`.
///
/// The offset `guess - x` is first projected onto the null space of `dh/dx`
/// at `x`; Gauss-Newton steps with the pseudo-inverse then remove the
/// remaining output mismatch. Returns `None` when `dh/dx` has no null space,
/// the offset vanishes after projection, or Newton does not reach
/// [`LEVEL_SET_TOL`].
pub fn equal_output_partner(sys: &System, x: &[f64], guess: &[f64], t0: f64) -> Option<Vec<f64>> {
    let n = sys.n();
    let (y, jh, _) = sys.h_and_jacobian(x, t0).ok()?;
    let pinv = pseudo_inverse(&jh)?;
    let offset = DVector::from_iterator(n, guess.iter().zip(x).map(|(g, xi)| g - xi));
    let null_part = &offset - &pinv * (&jh * &offset);
    if null_part.norm() <= 1e-8 * (1.0 + offset.norm()) {
        return None;
    }
    let mut xp: Vec<f64> = x.iter().zip(null_part.iter()).map(|(a, b)| a + b).collect();
    for _ in 0..NEWTON_ITERS {
        let (yp, jhp, _) = sys.h_and_jacobian(&xp, t0).ok()?;
        let r = DVector::from_iterator(yp.len(), yp.iter().zip(&y).map(|(a, b)| a - b));
        if r.norm() <= LEVEL_SET_TOL {
            return (dist2(&xp, x) > 0.0).then_some(xp);
        }
        let step = pseudo_inverse(&jhp)? * r;
        for (v, s) in xp.iter_mut().zip(step.iter()) {
            *v -= s;
        }
        if xp.iter().any(|v| !v.is_finite()) || norm2(&xp) > 1e12 {
            return None;
        }
    }
    None
}

fn pseudo_inverse(j: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let scale = j.amax().max(1.0);
    j.clone().pseudo_inverse(1e-12 * scale).ok()
}
