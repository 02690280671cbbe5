use std::io::{self, Write};

use serde::Serialize;

use super::OdeError;

/// How an integration run ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    /// State became non-finite or exceeded the blow-up norm at `t`.
    BlowUp { t: f64 },
    /// Adaptive step shrank below round-off resolution at `t`.
    StepUnderflow { t: f64 },
    /// Step budget exhausted at `t`.
    StepLimit { t: f64 },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }

    /// Time at which integration stopped early, if it did.
    pub fn failure_time(&self) -> Option<f64> {
        match *self {
            Termination::Completed => None,
            Termination::BlowUp { t } | Termination::StepUnderflow { t } | Termination::StepLimit { t } => Some(t),
        }
    }
}

/// States on a strictly increasing time grid, with the field value at each
/// grid point for cubic Hermite dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    derivs: Vec<f64>,
    t0: f64,
    tf: f64,
    termination: Termination,
    evals: usize,
}

impl Trajectory {
    pub(crate) fn new(dim: usize, t0: f64, tf: f64) -> Trajectory {
        Trajectory {
            dim,
            times: Vec::new(),
            states: Vec::new(),
            derivs: Vec::new(),
            t0,
            tf,
            termination: Termination::Completed,
            evals: 0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64], dx: &[f64]) {
        debug_assert!(self.times.last().is_none_or(|last| *last < t));
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.derivs.extend_from_slice(dx);
    }

    pub(crate) fn finish(&mut self, termination: Termination, evals: usize) {
        self.termination = termination;
        self.evals = evals;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn deriv(&self, i: usize) -> &[f64] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim)
    }

    pub fn last_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    /// Requested start of the horizon.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Requested end of the horizon; the grid reaches it only when completed.
    pub fn tf(&self) -> f64 {
        self.tf
    }

    /// Last time actually covered by the grid.
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial point")
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    /// Number of vector-field evaluations spent.
    pub fn evals(&self) -> usize {
        self.evals
    }

    /// Dense output by cubic Hermite interpolation on the bracketing interval;
    /// grid points are returned exactly.
    pub fn sample_at(&self, t: f64) -> Result<Vec<f64>, OdeError> {
        let (lo, hi) = (self.times[0], self.t_end());
        if !(t >= lo && t <= hi) {
            return Err(OdeError::OutsideHorizon { t, lo, hi });
        }
        let i = self.times.partition_point(|s| *s <= t);
        // times[i-1] <= t < times[i]
        let left = i - 1;
        if self.times[left] == t || left + 1 == self.len() {
            return Ok(self.state(left).to_vec());
        }
        let (ta, tb) = (self.times[left], self.times[left + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let (ya, yb) = (self.state(left), self.state(left + 1));
        let (ma, mb) = (self.deriv(left), self.deriv(left + 1));
        // Hermite basis regrouped around the left endpoint; exact for linear data
        // whenever the endpoint slopes agree with the chord.
        Ok((0..self.dim)
            .map(|k| {
                let chord = yb[k] - ya[k];
                let c2 = 3.0 * chord - h * (2.0 * ma[k] + mb[k]);
                let c3 = h * (ma[k] + mb[k]) - 2.0 * chord;
                ya[k] + (t - ta) * ma[k] + s2 * c2 + s3 * c3
            })
            .collect())
    }

    /// CSV dump `t,x1,..,xn[,y1,..,ym]` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, outputs: Option<&[Vec<f64>]>, mut w: W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim).map(|i| format!("x{i}")));
        if let Some(first) = outputs.and_then(|o| o.first()) {
            header.extend((1..=first.len()).map(|i| format!("y{i}")));
        }
        writeln!(w, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![fmt17(*t)];
            row.extend(self.state(i).iter().map(|v| fmt17(*v)));
            if let Some(ys) = outputs {
                row.extend(ys[i].iter().map(|v| fmt17(*v)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// 17 significant digits, scientific notation.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Trajectory {
        // x' = 1 sampled at irregular points
        let mut tr = Trajectory::new(1, 0.0, 1.0);
        for t in [0.0, 0.3, 0.45, 1.0] {
            tr.push(t, &[t], &[1.0]);
        }
        tr
    }

    #[test]
    fn grid_points_are_exact() {
        let tr = line();
        for (i, t) in tr.times().iter().enumerate() {
            assert_eq!(tr.sample_at(*t).unwrap(), tr.state(i));
        }
    }

    #[test]
    fn hermite_reproduces_cubics() {
        // x = t^3, x' = 3t^2
        let mut tr = Trajectory::new(1, 0.0, 2.0);
        for t in [0.0, 0.7, 2.0] {
            tr.push(t, &[t * t * t], &[3.0 * t * t]);
        }
        for t in [0.1, 0.5, 1.3, 1.99] {
            assert!((tr.sample_at(t).unwrap()[0] - t * t * t).abs() < 1e-14);
        }
        assert_eq!(line().sample_at(0.5).unwrap()[0], 0.5);
    }

    #[test]
    fn outside_horizon() {
        assert!(matches!(line().sample_at(2.0), Err(OdeError::OutsideHorizon { .. })));
        assert!(line().sample_at(-1e-9).is_err());
    }

    #[test]
    fn csv_layout() {
        let tr = line();
        let ys: Vec<Vec<f64>> = tr.states().map(|x| vec![2.0 * x[0]]).collect();
        let mut buf = Vec::new();
        tr.write_csv(Some(&ys), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x1,y1"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0")
        );
        assert_eq!(text.lines().count(), 5);
        let row: Vec<f64> = text.lines().nth(2).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, [0.3, 0.3, 0.6]);
    }
}
