use serde::Serialize;
use thiserror::Error;

/// Minimum number of points above the noise floor inside the fit window.
pub const MIN_FIT_POINTS: usize = 10;
/// Fraction of the horizon skipped before the fit window opens.
pub const WINDOW_SKIP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FitError {
    #[error("fit scale must be positive, got {scale}")]
    BadScale { scale: f64 },
    #[error("only {usable} points above the noise floor in the fit window (need {MIN_FIT_POINTS})")]
    TooFewPoints { usable: usize },
}

/// Exponential bound `d(t) <= c * exp(-alpha (t - t0)) * scale` fitted to a series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// from the log-linear regression line at `t0`
    pub c: f64,
    /// smallest constant making the bound hold at every grid point for this `alpha`
    pub c_tight: f64,
    pub alpha: f64,
    /// RMS residual of the regression in log space
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Points below this level are treated as solver noise.
pub fn noise_floor(d: &[f64]) -> f64 {
    let d0 = d.first().copied().unwrap_or(0.0);
    (1e-9 * d0).max(1e-12)
}

/// Least-squares line through `(t, ln d)` over the points with `d > floor`
/// from `t0 + 10%` of the horizon onward. `times[0]` is taken as `t0`.
pub fn fit_rate(times: &[f64], d: &[f64], scale: f64, floor: f64) -> Result<RateFit, FitError> {
    fit_rate_skip(times, d, scale, floor, WINDOW_SKIP)
}

/// [`fit_rate`] with the window opening after a fraction `skip` of the horizon.
pub fn fit_rate_skip(times: &[f64], d: &[f64], scale: f64, floor: f64, skip: f64) -> Result<RateFit, FitError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(FitError::BadScale { scale });
    }
    let Some((&t0, &t_last)) = times.first().zip(times.last()) else {
        return Err(FitError::TooFewPoints { usable: 0 });
    };
    let t_lo = t0 + skip * (t_last - t0);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(d)
        .filter(|(t, v)| **t >= t_lo && v.is_finite() && **v > floor)
        .map(|(t, v)| (*t - t0, v.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints { usable: pts.len() });
    }
    let k = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_l = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_l)).sum();
    let slope = sxy / sxx;
    let intercept = mean_l - slope * mean_t;
    let alpha = -slope;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    let c_tight = times
        .iter()
        .zip(d)
        .filter(|(_, v)| v.is_finite())
        .map(|(t, v)| v * (alpha * (t - t0)).exp() / scale)
        .fold(0.0, f64::max);
    Ok(RateFit {
        c: intercept.exp() / scale,
        c_tight,
        alpha,
        residual,
        window: (pts[0].0 + t0, pts[pts.len() - 1].0 + t0),
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t0: f64, tf: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| t0 + (tf - t0) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(0.0, 5.0, 401);
        let d: Vec<f64> = t.iter().map(|t| 2.0 * (-3.0 * t).exp()).collect();
        let fit = fit_rate(&t, &d, 1.0, noise_floor(&d)).unwrap();
        assert!((fit.c - 2.0).abs() < 1e-6 && (fit.alpha - 3.0).abs() < 1e-6, "{fit:?}");
        assert!((fit.c_tight - 2.0).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
        assert!((fit.window.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shifted_start_time() {
        let t = grid(2.0, 7.0, 201);
        let d: Vec<f64> = t.iter().map(|t| 0.5 * (-(t - 2.0)).exp()).collect();
        let fit = fit_rate(&t, &d, 0.25, noise_floor(&d)).unwrap();
        assert!((fit.c - 2.0).abs() < 1e-9 && (fit.alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_series_is_invalid() {
        let t = grid(0.0, 1.0, 50);
        let d = vec![0.0; 50];
        assert_eq!(fit_rate(&t, &d, 1.0, noise_floor(&d)), Err(FitError::TooFewPoints { usable: 0 }));
        assert!(matches!(fit_rate(&t, &d, 0.0, 1e-12), Err(FitError::BadScale { .. })));
    }

    #[test]
    fn floor_drops_tail() {
        let t = grid(0.0, 10.0, 101);
        let d: Vec<f64> = t.iter().map(|t| if *t < 6.0 { (-4.0 * t).exp() } else { 1e-13 }).collect();
        let fit = fit_rate(&t, &d, 1.0, noise_floor(&d)).unwrap();
        assert!((fit.alpha - 4.0).abs() < 1e-9);
        assert!(fit.window.1 < 6.0);
    }
}
