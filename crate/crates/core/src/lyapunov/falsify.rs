use rand::Rng;
use serde::Serialize;

use crate::sampling::{norm2, par_indexed, stream, uniform_in_box, unit_sphere};
use crate::system::System;

use super::candidate::{vdot, CandidateV};
use super::{Bounds, CorollaryBounds, LyapunovError};

/// Where the inequalities are probed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckDomain {
    pub x_box: Vec<(f64, f64)>,
    /// `[t_lo, t_hi]`; `t_lo` doubles as `t0` in the growth factor
    pub t_range: (f64, f64),
    /// random samples on top of the deterministic probes
    pub samples: usize,
    pub seed: u64,
    /// sample `i` scales its unit direction by `radii[i % radii.len()]`
    pub radii: Vec<f64>,
    pub threads: Option<usize>,
}

impl CheckDomain {
    pub fn new(x_box: Vec<(f64, f64)>, t_range: (f64, f64), samples: usize, seed: u64) -> CheckDomain {
        CheckDomain { x_box, t_range, samples, seed, radii: vec![0.1, 1.0, 10.0], threads: None }
    }

    pub fn validate(&self, n: usize) -> Result<(), LyapunovError> {
        let bad = |m: String| Err(LyapunovError::Domain(m));
        if self.x_box.len() != n {
            return Err(LyapunovError::Dimension { what: "x box", got: self.x_box.len(), want: n });
        }
        if self.x_box.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return bad("every box interval needs finite lo < hi".into());
        }
        let (t_lo, t_hi) = self.t_range;
        if !(t_lo >= 0.0 && t_hi >= t_lo && t_hi.is_finite()) {
            return bad(format!("need 0 <= t_lo <= t_hi, got [{t_lo}, {t_hi}]"));
        }
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.radii.is_empty() || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("radii must be positive".into());
        }
        Ok(())
    }

    /// Corners and centre of the box, crossed with signed axis directions and
    /// the diagonal at every radius, at both ends of the time range.
    fn probes(&self) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.x_box.len();
        let mut xs: Vec<Vec<f64>> = Vec::new();
        if n <= 10 {
            for mask in 0..1usize << n {
                xs.push((0..n).map(|j| if mask >> j & 1 == 0 { self.x_box[j].0 } else { self.x_box[j].1 }).collect());
            }
        }
        xs.push(self.x_box.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect());
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for j in 0..n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[j] = s;
                dirs.push(e);
            }
        }
        dirs.push(vec![1.0 / (n as f64).sqrt(); n]);
        let (t_lo, t_hi) = self.t_range;
        let mut out = Vec::new();
        for x in &xs {
            for d in &dirs {
                for r in &self.radii {
                    for t in [t_lo, t_hi] {
                        out.push((x.clone(), d.iter().map(|v| v * r).collect(), t));
                    }
                }
            }
        }
        out
    }

    fn random_point(&self, i: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let mut rng = stream(self.seed, i);
        let x = uniform_in_box(&mut rng, &self.x_box);
        let r = self.radii[i % self.radii.len()];
        let xi = unit_sphere(&mut rng, self.x_box.len()).into_iter().map(|v| v * r).collect();
        let (t_lo, t_hi) = self.t_range;
        let t = if t_hi > t_lo { rng.random_range(t_lo..t_hi) } else { t_lo };
        (x, xi, t)
    }
}

/// Slack accepted on every inequality.
pub fn tolerance(v: f64) -> f64 {
    1e-9 + 1e-9 * v.abs()
}

/// One inequality `lhs <= rhs` evaluated at a point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// A violated inequality with the point that violates it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub t: f64,
    pub v: f64,
    pub inequality: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FalsificationReport {
    pub condition: &'static str,
    pub passed: bool,
    pub checked: usize,
    /// smallest `rhs - lhs` seen over all points and inequalities
    pub worst_margin: f64,
    /// the most violated point, when any inequality failed beyond tolerance
    pub counterexample: Option<Counterexample>,
}

/// A family of pointwise inequalities on `(x, xi, t)`.
pub trait Condition: Send + Sync {
    fn name(&self) -> &'static str;

    /// `V` at the point and the inequalities it must satisfy there.
    fn evaluate(
        &self,
        sys: &System,
        v: &CandidateV,
        t0: f64,
        x: &[f64],
        xi: &[f64],
        t: f64,
    ) -> Result<(f64, Vec<Inequality>), LyapunovError>;
}

fn nu_norm(sys: &System, x: &[f64], xi: &[f64], t: f64) -> Result<f64, LyapunovError> {
    let (_, jh, _) = sys.h_and_jacobian(x, t)?;
    let n = sys.n();
    let nu: Vec<f64> = (0..sys.m()).map(|i| (0..n).map(|j| jh[(i, j)] * xi[j]).sum()).collect();
    Ok(norm2(&nu))
}

/// `alpha1 |nu|^p <= V <= alpha2 |xi|^p exp(alpha3 (t - t0))`.
pub struct Sandwich(pub Bounds);
/// `Vdot <= -alpha4 V`.
pub struct Decay(pub Bounds);
/// Time-invariant pair `alpha1 |nu|^p <= V <= alpha2 |xi|^p`, `Vdot <= -decay V`.
pub struct TimeInvariant(pub CorollaryBounds);

fn sandwich(
    sys: &System,
    v: f64,
    alpha1: f64,
    alpha2: f64,
    growth: f64,
    p: f64,
    x: &[f64],
    xi: &[f64],
    t: f64,
) -> Result<[Inequality; 2], LyapunovError> {
    Ok([
        Inequality { name: "lower", lhs: alpha1 * nu_norm(sys, x, xi, t)?.powf(p), rhs: v },
        Inequality { name: "upper", lhs: v, rhs: alpha2 * norm2(xi).powf(p) * growth },
    ])
}

impl Condition for Sandwich {
    fn name(&self) -> &'static str {
        "sandwich"
    }

    fn evaluate(
        &self,
        sys: &System,
        cand: &CandidateV,
        t0: f64,
        x: &[f64],
        xi: &[f64],
        t: f64,
    ) -> Result<(f64, Vec<Inequality>), LyapunovError> {
        let b = &self.0;
        let v = cand.value(x, xi, t)?;
        let growth = (b.alpha3 * (t - t0)).exp();
        Ok((v, sandwich(sys, v, b.alpha1, b.alpha2, growth, b.p, x, xi, t)?.to_vec()))
    }
}

impl Condition for Decay {
    fn name(&self) -> &'static str {
        "decay"
    }

    fn evaluate(
        &self,
        sys: &System,
        cand: &CandidateV,
        _t0: f64,
        x: &[f64],
        xi: &[f64],
        t: f64,
    ) -> Result<(f64, Vec<Inequality>), LyapunovError> {
        let v = cand.value(x, xi, t)?;
        let vd = vdot(sys, cand, x, xi, t)?;
        Ok((v, vec![Inequality { name: "decay", lhs: vd, rhs: -self.0.alpha4 * v }]))
    }
}

impl Condition for TimeInvariant {
    fn name(&self) -> &'static str {
        "time-invariant"
    }

    fn evaluate(
        &self,
        sys: &System,
        cand: &CandidateV,
        _t0: f64,
        x: &[f64],
        xi: &[f64],
        t: f64,
    ) -> Result<(f64, Vec<Inequality>), LyapunovError> {
        let b = &self.0;
        let v = cand.value(x, xi, t)?;
        let mut out = sandwich(sys, v, b.alpha1, b.alpha2, 1.0, b.p, x, xi, t)?.to_vec();
        out.push(Inequality { name: "decay", lhs: vdot(sys, cand, x, xi, t)?, rhs: -b.decay * v });
        Ok((v, out))
    }
}

/// Evaluates `cond` at every probe and random sample of `domain`. The
/// reduction runs in sample order, so the report does not depend on the
/// worker count.
pub fn falsify(
    sys: &System,
    cand: &CandidateV,
    cond: &dyn Condition,
    domain: &CheckDomain,
) -> Result<FalsificationReport, LyapunovError> {
    if cand.n() != sys.n() {
        return Err(LyapunovError::Dimension { what: "candidate", got: cand.n(), want: sys.n() });
    }
    domain.validate(sys.n())?;
    let probes = domain.probes();
    let total = probes.len() + domain.samples;
    let t0 = domain.t_range.0;
    let results = par_indexed(total, domain.threads, |i| {
        let (x, xi, t) = match probes.get(i) {
            Some(p) => p.clone(),
            None => domain.random_point(i - probes.len()),
        };
        let (v, ineqs) = cond.evaluate(sys, cand, t0, &x, &xi, t)?;
        Ok::<_, LyapunovError>((x, xi, t, v, ineqs))
    })?;

    let mut report = FalsificationReport {
        condition: cond.name(),
        passed: true,
        checked: total,
        worst_margin: f64::INFINITY,
        counterexample: None,
    };
    for r in results {
        let (x, xi, t, v, ineqs) = r?;
        for q in ineqs {
            let margin = q.margin();
            // NaN margins count as violations
            if !(margin >= report.worst_margin) {
                report.worst_margin = margin;
            }
            if !(margin >= -tolerance(v)) {
                report.passed = false;
                let worse = report.counterexample.as_ref().is_none_or(|c| !(margin >= c.margin));
                if worse {
                    report.counterexample = Some(Counterexample {
                        x: x.clone(),
                        xi: xi.clone(),
                        t,
                        v,
                        inequality: q.name,
                        lhs: q.lhs,
                        rhs: q.rhs,
                        margin,
                    });
                }
            }
        }
    }
    Ok(report)
}
