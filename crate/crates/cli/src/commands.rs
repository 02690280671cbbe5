use serde_json::{json, Value};

use occ_core::contraction::{
    fit_rate, noise_floor, partial_pair_record, simulate_pair, CheckConfig, CheckParams, CheckRegistry,
    DivergenceSeries, SamplingPlan, Verdict,
};
use occ_core::lyapunov::{
    check_decay, check_sandwich, check_time_invariant, implied_rate, Bounds, CandidateV, CheckDomain,
    CorollaryBounds,
};
use occ_core::ode::{fmt17, map_output, IntegratorConfig, Termination, Trajectory};
use occ_core::sampling::norm2;
use occ_core::system::{load_system, StateField, System};

use crate::args::{
    parse_box, parse_interval, parse_vector, CheckArgs, Figure, JacobianArgs, LyapunovArgs, OesEqArgs,
    ReproduceArgs, SimulateArgs, Solver,
};
use crate::report::{usage, Failure, Outcome, EXIT_FALSIFIED, EXIT_NUMERICAL, EXIT_OK};

/// Worker cap from `OCCTL_THREADS`, if set.
pub fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var("OCCTL_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| usage(anyhow::anyhow!("OCCTL_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn state_vector(sys: &System, src: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let v = parse_vector(src).map_err(|e| usage(anyhow::anyhow!("--{what}: {e}")))?;
    if v.len() != sys.n() {
        return Err(usage(anyhow::anyhow!("--{what} has {} entries, system has {} states", v.len(), sys.n())));
    }
    Ok(v)
}

fn integrator(s: &Solver) -> IntegratorConfig {
    IntegratorConfig {
        method: s.method.clone(),
        step: s.step,
        rtol: s.rtol,
        atol: s.atol,
        max_step: s.max_step,
    }
}

fn trajectory_csv(sys: &System, traj: &Trajectory) -> Result<String, Failure> {
    let ys = map_output(sys, traj)?;
    let mut buf = Vec::new();
    traj.write_csv(Some(&ys), &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is ascii"))
}

fn series_csv(s: &DivergenceSeries) -> String {
    let mut buf = Vec::new();
    s.write_csv(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is ascii")
}

fn termination_exit(t: Termination) -> i32 {
    if t.is_completed() {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.common.system)?;
    let x0 = state_vector(&sys, &a.x0, "x0")?;
    let traj = integrator(&a.solver).build()?.integrate(&StateField { sys: &sys }, &x0, a.common.t0, a.common.tf)?;
    let csv = trajectory_csv(&sys, &traj)?;
    let x_end = traj.last_state().to_vec();
    let y_end = sys.eval_h(&x_end, traj.t_end())?;
    let result = json!({
        "system": sys.name(),
        "method": a.solver.method,
        "x0": x0,
        "termination": traj.termination(),
        "t_end": traj.t_end(),
        "points": traj.len(),
        "evals": traj.evals(),
        "x_end": x_end,
        "y_end": y_end,
    });
    let mut out = Outcome::new(termination_exit(traj.termination()), result);
    out.files.push(("trajectory.csv".into(), csv.clone()));
    out.csv = Some(csv);
    Ok(out)
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn jacobian(a: &JacobianArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let x = state_vector(&sys, &a.x, "x")?;
    let (f, h) = sys.eval_fh(&x, a.t)?;
    let j = sys.jacobians(&x, a.t)?;
    let result = json!({
        "system": sys.name(),
        "x": x,
        "t": a.t,
        "f": f,
        "h": h,
        "jf": matrix_rows(&j.jf),
        "jh": matrix_rows(&j.jh),
        "dh_dt": j.dh_dt.iter().copied().collect::<Vec<_>>(),
    });
    let mut csv = String::from("block,row,values\n");
    for (block, m) in [("jf", &j.jf), ("jh", &j.jh)] {
        for (i, row) in matrix_rows(m).iter().enumerate() {
            let vals: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
            csv.push_str(&format!("{block},{},{}\n", i + 1, vals.join(" ")));
        }
    }
    let mut out = Outcome::new(EXIT_OK, result);
    out.csv = Some(csv);
    Ok(out)
}

fn check_setup(a: &CheckArgs, sys: &System) -> Result<(SamplingPlan, CheckConfig), Failure> {
    let bounds = parse_box(&a.bounds, sys.n()).map_err(|e| usage(anyhow::anyhow!("--box: {e}")))?;
    let plan = SamplingPlan::new(bounds, a.pairs, a.common.seed, a.common.t0, a.common.tf);
    let cfg = CheckConfig {
        integrator: integrator(&a.solver),
        grid_points: a.grid_points,
        alpha_min: a.alpha_min,
        threads: thread_cap()?,
    };
    Ok((plan, cfg))
}

fn verdict_exit(v: &Verdict) -> i32 {
    if v.holds {
        EXIT_OK
    } else if v.only_numerical_failures() {
        EXIT_NUMERICAL
    } else {
        EXIT_FALSIFIED
    }
}

fn records_csv(v: &Verdict) -> String {
    let mut csv = String::from("index,status,alpha,c_tight,dx0,dy0,max_d\n");
    let num = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
    for r in &v.records {
        let status = serde_json::to_value(r.status).expect("status serializes");
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.sample.index,
            status.as_str().unwrap_or_default(),
            num(r.fit.as_ref().map(|f| f.alpha)),
            num(r.fit.as_ref().map(|f| f.c_tight)),
            fmt17(r.dx0),
            fmt17(r.dy0),
            fmt17(r.max_d),
        ));
    }
    csv
}

fn verdict_outcome(v: Verdict, extra: Value) -> Outcome {
    let exit = verdict_exit(&v);
    let csv = records_csv(&v);
    let mut files = vec![("samples.csv".to_string(), csv.clone())];
    for (i, s) in v.series.iter().enumerate() {
        if let Some(s) = s {
            files.push((format!("series/sample_{i:04}.csv"), series_csv(s)));
        }
    }
    let mut result = serde_json::to_value(&v).expect("verdict serializes");
    if let (Value::Object(map), Value::Object(more)) = (&mut result, extra) {
        map.extend(more);
    }
    Outcome { exit, result, files, csv: Some(csv) }
}

pub fn trajectory_check(name: &str, a: &CheckArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.common.system)?;
    let (plan, cfg) = check_setup(a, &sys)?;
    let v = CheckRegistry::builtin().get(name)?.run(&sys, &plan, &cfg, &CheckParams::default())?;
    Ok(verdict_outcome(v, json!({ "system": sys.name(), "plan": plan, "config": cfg })))
}

pub fn oes_eq(a: &OesEqArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.check.common.system)?;
    let (plan, cfg) = check_setup(&a.check, &sys)?;
    let y_star = parse_vector(&a.y_star).map_err(|e| usage(anyhow::anyhow!("--y-star: {e}")))?;
    let x_ref0 = a.x_ref.as_deref().map(|s| state_vector(&sys, s, "x-ref")).transpose()?;
    let params = CheckParams { y_star: Some(y_star.clone()), x_ref0: x_ref0.clone() };
    let v = CheckRegistry::builtin().get("oes-eq")?.run(&sys, &plan, &cfg, &params)?;
    let scale = if x_ref0.is_some() { "distance to x_ref0" } else { "1 + |x0|" };
    Ok(verdict_outcome(
        v,
        json!({ "system": sys.name(), "plan": plan, "config": cfg, "y_star": y_star, "x_ref0": x_ref0, "scale": scale }),
    ))
}

pub fn lyapunov(a: &LyapunovArgs) -> Result<Outcome, Failure> {
    let sys = load_system(&a.system)?;
    let cand = CandidateV::parse(&a.v, sys.n())?;
    let x_box = parse_box(&a.bounds, sys.n()).map_err(|e| usage(anyhow::anyhow!("--box: {e}")))?;
    let t_range = parse_interval(&a.t_range).map_err(|e| usage(anyhow::anyhow!("--t-range: {e}")))?;
    let radii = parse_vector(&a.radii).map_err(|e| usage(anyhow::anyhow!("--radii: {e}")))?;
    let domain = CheckDomain { x_box, t_range, samples: a.samples, seed: a.seed, radii, threads: thread_cap()? };

    let (reports, bounds_json, rate) = match a.decay {
        Some(decay) => {
            let b = CorollaryBounds { alpha1: a.alpha1, alpha2: a.alpha2, decay, p: a.p };
            let r = check_time_invariant(&sys, &cand, &b, &domain)?;
            (vec![r], serde_json::to_value(b).expect("bounds serialize"), implied_rate(&b.as_bounds())?)
        }
        None => {
            let alpha4 = a.alpha4.ok_or_else(|| usage(anyhow::anyhow!("--alpha4 or --decay is required")))?;
            let b = Bounds { alpha1: a.alpha1, alpha2: a.alpha2, alpha3: a.alpha3, alpha4, p: a.p };
            let rate = implied_rate(&b)?;
            let r = vec![check_sandwich(&sys, &cand, &b, &domain)?, check_decay(&sys, &cand, &b, &domain)?];
            (r, serde_json::to_value(b).expect("bounds serialize"), rate)
        }
    };
    let passed = reports.iter().all(|r| r.passed);
    let mut csv = String::from("condition,passed,checked,worst_margin\n");
    for r in &reports {
        csv.push_str(&format!("{},{},{},{}\n", r.condition, r.passed, r.checked, fmt17(r.worst_margin)));
    }
    let result = json!({
        "system": sys.name(),
        "candidate": cand.expr().to_string(),
        "bounds": bounds_json,
        "domain": domain,
        "passed": passed,
        "implied_rate": { "c": rate.0, "alpha": rate.1 },
        "reports": reports,
    });
    let mut out = Outcome::new(if passed { EXIT_OK } else { EXIT_FALSIFIED }, result);
    out.files.push(("conditions.csv".into(), csv.clone()));
    out.csv = Some(csv);
    Ok(out)
}

pub fn reproduce(a: &ReproduceArgs) -> Result<Outcome, Failure> {
    match a.name {
        Figure::Fig1 => fig1(),
        Figure::Fig2 => fig2(),
        Figure::Remark1 => remark1(a.seed),
    }
}

fn fine_config() -> Result<CheckConfig, Failure> {
    Ok(CheckConfig { grid_points: 1001, threads: thread_cap()?, ..CheckConfig::default() })
}

fn single_run(sys: &System, x0: &[f64], tf: f64, cfg: &CheckConfig) -> Result<Trajectory, Failure> {
    Ok(cfg.integrator.build()?.integrate(&StateField { sys }, x0, 0.0, tf)?)
}

fn fig1() -> Result<Outcome, Failure> {
    let sys = load_system("ex1-timevarying")?;
    let cfg = fine_config()?;
    let (xa, xb) = ([-2.5, -5.0], [-1.5, -3.0]);
    let tf = 10.0;
    let ta = single_run(&sys, &xa, tf, &cfg)?;
    let tb = single_run(&sys, &xb, tf, &cfg)?;
    let pair = simulate_pair(&sys, &xa, &xb, 0.0, tf, &cfg)?;
    let fit = fit_rate(&pair.times, &pair.d, pair.dx0, noise_floor(&pair.d));
    let mut div = String::from("t,d,state_d\n");
    for ((t, d), s) in pair.times.iter().zip(&pair.d).zip(&pair.state_d) {
        div.push_str(&format!("{},{},{}\n", fmt17(*t), fmt17(*d), fmt17(*s)));
    }
    let completed = [ta.termination(), tb.termination(), pair.termination].iter().all(|t| t.is_completed());
    let result = json!({
        "figure": "fig1",
        "system": sys.name(),
        "initial_states": [xa, xb],
        "horizon": [0.0, tf],
        "terminations": [ta.termination(), tb.termination()],
        "pair_termination": pair.termination,
        "pair_points": pair.times.len(),
        "fit": fit.as_ref().ok(),
        "fit_error": fit.as_ref().err().map(|e| e.to_string()),
        "note": if completed { "" } else { "integration stopped before the end of the horizon; series are truncated" },
    });
    let mut out = Outcome::new(if completed { EXIT_OK } else { EXIT_NUMERICAL }, result);
    out.files.push(("fig1_trajectory_a.csv".into(), trajectory_csv(&sys, &ta)?));
    out.files.push(("fig1_trajectory_b.csv".into(), trajectory_csv(&sys, &tb)?));
    out.files.push(("fig1_divergence.csv".into(), div.clone()));
    out.csv = Some(div);
    Ok(out)
}

fn fig2() -> Result<Outcome, Failure> {
    let sys = load_system("ex2-timeinvariant")?;
    let cfg = fine_config()?;
    let x0 = [3.0, 3.0];
    let tf = 10.0;
    let traj = single_run(&sys, &x0, tf, &cfg)?;
    let ys = map_output(&sys, &traj)?;
    let y_end = ys.last().map(|y| y[0]).unwrap_or(f64::NAN);
    let unstable_at = traj
        .times()
        .iter()
        .zip(traj.states())
        .find(|(_, x)| norm2(x) > 1e3)
        .map(|(t, _)| *t);
    let result = json!({
        "figure": "fig2",
        "system": sys.name(),
        "x0": x0,
        "horizon": [0.0, tf],
        "termination": traj.termination(),
        "y_end": y_end,
        "y_star_reference": 0.246,
        "distance_to_reference": (y_end - 0.246).abs(),
        "state_norm_end": norm2(traj.last_state()),
        "state_unstable": unstable_at.is_some(),
        "state_norm_exceeds_1e3_at": unstable_at,
    });
    let csv = trajectory_csv(&sys, &traj)?;
    let mut out = Outcome::new(termination_exit(traj.termination()), result);
    out.files.push(("fig2_trajectory.csv".into(), csv.clone()));
    out.csv = Some(csv);
    Ok(out)
}

fn remark1(seed: u64) -> Result<Outcome, Failure> {
    let sys = load_system("lti-remark1")?;
    let cfg = fine_config()?;
    let tf = 10.0;
    let pair = simulate_pair(&sys, &[0.0, 0.0], &[0.0, 1.0], 0.0, tf, &cfg)?;
    let fit = fit_rate(&pair.times, &pair.d, pair.dx0, noise_floor(&pair.d)).ok();
    let (partial_record, partial_series) = partial_pair_record(&sys, 0, &[1.0, 0.0], &[1.0, 1.0], 0.0, tf, &cfg)?;
    let plan = SamplingPlan::cube(2, -5.0, 5.0, 20, seed, 0.0, tf);
    let registry = CheckRegistry::builtin();
    let none = CheckParams::default();
    let contraction = registry.get("contraction")?.run(&sys, &plan, &cfg, &none)?;
    let partial = registry.get("partial")?.run(&sys, &plan, &cfg, &none)?;
    let exit = if !contraction.holds {
        verdict_exit(&contraction)
    } else if partial.holds {
        EXIT_OK
    } else {
        verdict_exit(&partial)
    };
    let summary = |v: &Verdict| {
        json!({ "holds": v.holds, "pairs": v.pairs, "min_alpha": v.min_alpha, "max_c": v.max_c, "witness": v.witness })
    };
    let result = json!({
        "figure": "remark1",
        "system": sys.name(),
        "contraction_pair": { "x0": [0.0, 0.0], "x0p": [0.0, 1.0], "fit": fit, "termination": pair.termination },
        "partial_pair": partial_record,
        "output_contraction": summary(&contraction),
        "partial_contraction": summary(&partial),
    });
    let mut out = Outcome::new(exit, result);
    let csv = series_csv(&pair);
    out.files.push(("remark1_contraction_pair.csv".into(), csv.clone()));
    out.files.push(("remark1_equal_output_pair.csv".into(), series_csv(&partial_series)));
    out.csv = Some(csv);
    Ok(out)
}
