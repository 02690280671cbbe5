use super::{check_setup, is_blown_up, Integrator, OdeError, Termination, Trajectory, VectorField};

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights (also row 7 of A; FSAL)
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (difference to the embedded 4th-order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_STEPS: usize = 5_000_000;

/// Dormand-Prince 5(4) embedded pair with FSAL.
///
/// A step is accepted when the RMS of `e_i / (atol + rtol * max(|x_i|, |x_new_i|))`
/// is at most 1; the next step is `h * clamp(0.9 * err^(-1/5), 0.2, 5)`.
#[derive(Debug, Clone, Copy)]
pub struct Rk45 {
    rtol: f64,
    atol: f64,
    max_step: f64,
}

impl Rk45 {
    pub fn new(rtol: f64, atol: f64, max_step: f64) -> Result<Rk45, OdeError> {
        if !(rtol > 0.0 && atol > 0.0) {
            return Err(OdeError::Config(format!(
                "rtol and atol must be positive (rtol = {rtol}, atol = {atol})"
            )));
        }
        if !(max_step > 0.0) {
            return Err(OdeError::Config(format!("max_step must be positive, got {max_step}")));
        }
        Ok(Rk45 { rtol, atol, max_step })
    }

    fn weighted_rms(&self, e: &[f64], x: &[f64], x_new: &[f64]) -> f64 {
        let sum: f64 = e
            .iter()
            .zip(x.iter().zip(x_new))
            .map(|(ei, (a, b))| {
                let sc = self.atol + self.rtol * a.abs().max(b.abs());
                (ei / sc).powi(2)
            })
            .sum();
        (sum / e.len() as f64).sqrt()
    }

    // Initial step selection following Hairer, Norsett & Wanner (II.4).
    fn initial_step(
        &self,
        field: &dyn VectorField,
        t0: f64,
        x0: &[f64],
        f0: &[f64],
        span: f64,
    ) -> Result<(f64, usize), OdeError> {
        let sc: Vec<f64> = x0.iter().map(|x| self.atol + self.rtol * x.abs()).collect();
        let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        let d0 = norm(x0);
        let d1 = norm(f0);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span).min(self.max_step);
        let x1: Vec<f64> = x0.iter().zip(f0).map(|(x, f)| x + h0 * f).collect();
        let mut f1 = vec![0.0; x0.len()];
        field
            .eval(t0 + h0, &x1, &mut f1)
            .map_err(|source| OdeError::Eval { t: t0 + h0, source })?;
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        let h = (100.0 * h0).min(h1).min(span).min(self.max_step);
        Ok((if h.is_finite() && h > 0.0 { h } else { h0 }, 1))
    }
}

impl Integrator for Rk45 {
    fn name(&self) -> &'static str {
        "rk45-adaptive"
    }

    fn integrate(&self, field: &dyn VectorField, x0: &[f64], t0: f64, tf: f64) -> Result<Trajectory, OdeError> {
        check_setup(field, x0, t0, tf)?;
        let d = field.dim();
        let eval = |t: f64, x: &[f64], out: &mut [f64]| field.eval(t, x, out).map_err(|source| OdeError::Eval { t, source });

        let mut traj = Trajectory::new(d, t0, tf);
        let mut x = x0.to_vec();
        let mut k1 = vec![0.0; d];
        eval(t0, &x, &mut k1)?;
        let mut evals = 1;
        if is_blown_up(&k1) {
            traj.push(t0, &x, &k1);
            traj.finish(Termination::BlowUp { t: t0 }, evals);
            return Ok(traj);
        }
        traj.push(t0, &x, &k1);

        let (mut h, extra) = self.initial_step(field, t0, &x, &k1, tf - t0)?;
        evals += extra;

        let mut k: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; d]);
        let mut k7 = vec![0.0; d];
        let mut stage = vec![0.0; d];
        let mut x_new = vec![0.0; d];
        let mut err_vec = vec![0.0; d];
        let mut t = t0;
        let mut steps = 0;

        loop {
            steps += 1;
            if steps > MAX_STEPS {
                traj.finish(Termination::StepLimit { t }, evals);
                return Ok(traj);
            }
            let min_step = 16.0 * f64::EPSILON * t.abs().max(1.0);
            if h < min_step {
                traj.finish(Termination::StepUnderflow { t }, evals);
                return Ok(traj);
            }
            let last = t + h >= tf;
            if last {
                h = tf - t;
            }
            let [k2, k3, k4, k5, k6] = &mut k;

            for i in 0..d {
                stage[i] = x[i] + h * A21 * k1[i];
            }
            eval(t + C2 * h, &stage, k2)?;
            for i in 0..d {
                stage[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            eval(t + C3 * h, &stage, k3)?;
            for i in 0..d {
                stage[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            eval(t + C4 * h, &stage, k4)?;
            for i in 0..d {
                stage[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            eval(t + C5 * h, &stage, k5)?;
            for i in 0..d {
                stage[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if last { tf } else { t + h };
            eval(t_new, &stage, k6)?;
            for i in 0..d {
                x_new[i] = x[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            eval(t_new, &x_new, &mut k7)?;
            evals += 6;

            for i in 0..d {
                err_vec[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            }
            let err = self.weighted_rms(&err_vec, &x, &x_new);

            if !err.is_finite() {
                // non-finite stages: retreat hard and retry
                h *= MIN_FACTOR;
                continue;
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            if err <= 1.0 {
                if is_blown_up(&x_new) || is_blown_up(&k7) {
                    traj.finish(Termination::BlowUp { t: t_new }, evals);
                    return Ok(traj);
                }
                t = t_new;
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut k1, &mut k7);
                traj.push(t, &x, &k1);
                if last {
                    traj.finish(Termination::Completed, evals);
                    return Ok(traj);
                }
                h = (h * factor).min(self.max_step);
            } else {
                h *= factor.min(1.0);
            }
        }
    }
}
