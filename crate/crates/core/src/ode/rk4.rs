use super::{check_setup, is_blown_up, Integrator, OdeError, Termination, Trajectory, VectorField};

/// Classical fourth-order Runge-Kutta on a uniform grid. The last step is
/// shortened so the grid ends exactly at `tf`.
#[derive(Debug, Clone, Copy)]
pub struct Rk4 {
    step: f64,
}

impl Rk4 {
    pub fn new(step: f64) -> Result<Rk4, OdeError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(OdeError::Config(format!("rk4 step must be positive, got {step}")));
        }
        Ok(Rk4 { step })
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

impl Integrator for Rk4 {
    fn name(&self) -> &'static str {
        "rk4-fixed"
    }

    fn integrate(&self, field: &dyn VectorField, x0: &[f64], t0: f64, tf: f64) -> Result<Trajectory, OdeError> {
        check_setup(field, x0, t0, tf)?;
        let d = field.dim();
        let eval = |t: f64, x: &[f64], out: &mut [f64]| field.eval(t, x, out).map_err(|source| OdeError::Eval { t, source });

        let mut traj = Trajectory::new(d, t0, tf);
        let mut evals = 0;
        let mut x = x0.to_vec();
        let mut k1 = vec![0.0; d];
        let (mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut tmp = vec![0.0; d];

        eval(t0, &x, &mut k1)?;
        evals += 1;
        let mut t = t0;
        let mut i: u64 = 0;
        // grid t0 + i*h avoids accumulating the step by repeated addition
        let slack = 1e-12 * (tf - t0);
        loop {
            i += 1;
            let mut t_next = t0 + i as f64 * self.step;
            if t_next >= tf - slack {
                t_next = tf;
            }
            let h = t_next - t;
            for k in 0..d {
                tmp[k] = x[k] + 0.5 * h * k1[k];
            }
            eval(t + 0.5 * h, &tmp, &mut k2)?;
            for k in 0..d {
                tmp[k] = x[k] + 0.5 * h * k2[k];
            }
            eval(t + 0.5 * h, &tmp, &mut k3)?;
            for k in 0..d {
                tmp[k] = x[k] + h * k3[k];
            }
            eval(t_next, &tmp, &mut k4)?;
            evals += 3;
            if is_blown_up(&k2) || is_blown_up(&k3) || is_blown_up(&k4) {
                traj.push(t, &x, &k1);
                traj.finish(Termination::BlowUp { t: t_next }, evals);
                return Ok(traj);
            }
            for k in 0..d {
                tmp[k] = x[k] + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
            traj.push(t, &x, &k1);
            if is_blown_up(&tmp) {
                traj.finish(Termination::BlowUp { t: t_next }, evals);
                return Ok(traj);
            }
            std::mem::swap(&mut x, &mut tmp);
            t = t_next;
            eval(t, &x, &mut k1)?;
            evals += 1;
            if is_blown_up(&k1) {
                traj.finish(Termination::BlowUp { t }, evals);
                return Ok(traj);
            }
            if t >= tf {
                traj.push(t, &x, &k1);
                traj.finish(Termination::Completed, evals);
                return Ok(traj);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::FnField;
    use super::*;

    fn decay() -> FnField<impl Fn(f64, &[f64], &mut [f64]) + Sync> {
        FnField::new(1, |_t, x, dx| dx[0] = -x[0])
    }

    #[test]
    fn scalar_decay_accuracy() {
        let tr = Rk4::new(1e-3).unwrap().integrate(&decay(), &[1.0], 0.0, 1.0).unwrap();
        assert!(tr.termination().is_completed());
        assert_eq!(tr.t_end(), 1.0);
        assert_eq!(tr.len(), 1001);
        assert!((tr.last_state()[0] - (-1f64).exp()).abs() <= 1e-9);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |h: f64| {
            let tr = Rk4::new(h).unwrap().integrate(&decay(), &[1.0], 0.0, 1.0).unwrap();
            (tr.last_state()[0] - (-1f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn last_step_lands_on_tf() {
        let tr = Rk4::new(0.3).unwrap().integrate(&decay(), &[1.0], 0.0, 1.0).unwrap();
        let expected = [0.0, 0.3, 0.6, 0.8999999999999999, 1.0];
        assert_eq!(tr.times().len(), expected.len());
        assert_eq!(tr.t_end(), 1.0);
        assert!(tr.times().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn blow_up_is_reported_not_raised() {
        // x' = x^2 blows up at t = 1 from x0 = 1
        let f = FnField::new(1, |_t, x, dx| dx[0] = x[0] * x[0]);
        let tr = Rk4::new(1e-3).unwrap().integrate(&f, &[1.0], 0.0, 2.0).unwrap();
        let t = tr.termination().failure_time().unwrap();
        assert!(t > 0.9 && t < 1.1, "t = {t}");
        assert!(tr.states().all(|x| x[0].is_finite()));
    }

    #[test]
    fn bad_setup() {
        assert!(Rk4::new(0.0).is_err());
        assert!(Rk4::new(0.1).unwrap().integrate(&decay(), &[1.0], 1.0, 1.0).is_err());
        assert!(Rk4::new(0.1).unwrap().integrate(&decay(), &[1.0, 2.0], 0.0, 1.0).is_err());
    }
}
