use occ_core::contraction::{
    check_oes_equilibrium, check_oes_variational, check_output_contraction, check_partial_contraction,
    fd_variational_check, fit_rate, noise_floor, partial_pair_record, simulate_pair, simulate_variational,
    CheckConfig, CheckParams, CheckRegistry, ContractionError, SamplingPlan, Status,
};
use occ_core::ode::Termination;
use occ_core::system::{builtin, validate, SystemSpec};
use occ_core::expr::parse;

fn plan(pairs: usize, tf: f64) -> SamplingPlan {
    SamplingPlan::cube(2, -5.0, 5.0, pairs, 7, 0.0, tf)
}

/// `3y = cos y - sin y` by bisection on [0, 1].
fn example_two_root() -> f64 {
    let g = |y: f64| 3.0 * y - y.cos() + y.sin();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn lti_pair_distance_follows_the_analytic_solution() {
    let sys = builtin("lti-remark1").unwrap();
    let s = simulate_pair(&sys, &[1.0, 0.0], &[0.0, 0.0], 0.0, 12.0, &CheckConfig::default()).unwrap();
    assert_eq!(s.dx0, 1.0);
    for (t, d) in s.times.iter().zip(&s.d) {
        let exact = 0.5 * ((-t).exp() + (-3.0 * t).exp());
        assert!((d - exact).abs() <= 1e-8, "t = {t}");
    }
    // slope tends to the slow mode as the horizon grows
    let short = fit_rate(&s.times[..101], &s.d[..101], 1.0, noise_floor(&s.d)).unwrap();
    let long = fit_rate(&s.times, &s.d, 1.0, noise_floor(&s.d)).unwrap();
    assert!((long.alpha - 1.0).abs() < (short.alpha - 1.0).abs());
    assert!((long.alpha - 1.0).abs() < 0.05, "{}", long.alpha);
}

#[test]
fn example_one_pair_stops_at_the_blow_up() {
    let sys = builtin("ex1-timevarying").unwrap();
    let s = simulate_pair(&sys, &[-2.5, -5.0], &[-1.5, -3.0], 0.0, 5.0, &CheckConfig::default()).unwrap();
    let t_stop = s.termination.failure_time().expect("ex1 diverges in finite time");
    assert!(t_stop > 0.4 && t_stop < 0.5, "{t_stop}");
    assert!(*s.times.last().unwrap() <= t_stop);
    // before the blow-up the states separate far faster than the outputs
    let last = s.times.len() - 1;
    assert!(s.state_d[last] > 10.0 * s.d[last]);
}

#[test]
fn identical_pair_is_rejected() {
    let sys = builtin("lti-remark1").unwrap();
    let err = simulate_pair(&sys, &[1.0, 2.0], &[1.0, 2.0], 0.0, 1.0, &CheckConfig::default()).unwrap_err();
    assert!(matches!(err, ContractionError::IdenticalPair));
}

#[test]
fn remark_one_discriminates_output_and_partial_contraction() {
    let cfg = CheckConfig::default();
    let lti = builtin("lti-remark1").unwrap();
    let oc = check_output_contraction(&lti, &plan(50, 10.0), &cfg).unwrap();
    assert!(oc.holds);
    assert!(oc.min_alpha.unwrap() >= 0.9);

    let pc = check_partial_contraction(&lti, &plan(50, 10.0), &cfg).unwrap();
    assert!(!pc.holds);
    let w = pc.witness.unwrap();
    assert_eq!(w.kind, Status::EqualOutputDivergence);
    assert!((w.sample.x0[0] - w.sample.x0p.unwrap()[0]).abs() <= 1e-10);

    let bad = builtin("lti-remark1-badout").unwrap();
    assert!(!check_output_contraction(&bad, &plan(50, 10.0), &cfg).unwrap().holds);
}

#[test]
fn remark_one_explicit_pair() {
    let lti = builtin("lti-remark1").unwrap();
    let (record, series) = partial_pair_record(&lti, 0, &[1.0, 0.0], &[1.0, 1.0], 0.0, 10.0, &CheckConfig::default()).unwrap();
    assert_eq!(record.status, Status::EqualOutputDivergence);
    assert_eq!(series.dy0, 0.0);
    // x1 difference is (e^{-t} - e^{-3t}) / 2, peaking at t = ln(3)/2
    let peak = 0.5 * ((-(3f64.ln()) / 2.0).exp() - (-1.5 * 3f64.ln()).exp());
    assert!((series.max_d() - peak).abs() < 1e-4, "{} vs {peak}", series.max_d());
}

#[test]
fn full_state_output_makes_partial_contraction_hold() {
    let spec = SystemSpec {
        name: "lti-identity".into(),
        n: 2,
        m: 2,
        f: vec![parse("-2*x1 + x2").unwrap(), parse("x1 - 2*x2").unwrap()],
        h: vec![parse("x1").unwrap(), parse("x2").unwrap()],
    };
    let sys = validate(spec).unwrap();
    let v = check_partial_contraction(&sys, &plan(20, 10.0), &CheckConfig::default()).unwrap();
    assert!(v.holds, "{:?}", v.witness);
}

#[test]
fn contraction_bound_holds_pointwise_on_stored_series() {
    let sys = builtin("lti-remark1").unwrap();
    let v = check_output_contraction(&sys, &plan(30, 10.0), &CheckConfig::default()).unwrap();
    assert!(v.holds);
    for (record, series) in v.records.iter().zip(&v.series) {
        let fit = record.fit.as_ref().unwrap();
        let series = series.as_ref().unwrap();
        for (t, d) in series.times.iter().zip(&series.d) {
            let bound = fit.c_tight * (-fit.alpha * t).exp() * series.dx0;
            assert!(*d <= bound * (1.0 + 1e-12), "t = {t}: {d} > {bound}");
        }
    }
}

#[test]
fn variational_solution_of_the_fast_lti_mode() {
    let sys = builtin("lti-remark1").unwrap();
    let cfg = CheckConfig { integrator: occ_core::ode::IntegratorConfig::rk45(1e-12, 1e-14), ..CheckConfig::default() };
    let run = simulate_variational(&sys, &[0.3, -0.2], &[1.0, -1.0], 0.0, 2.0, &cfg).unwrap();
    let xi = run.xi.last().unwrap();
    let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
    assert!((norm - 2f64.sqrt() * (-6f64).exp()).abs() < 1e-10);
    assert!((norm - 0.003506).abs() < 1e-6);

    let scaled = simulate_variational(&sys, &[0.3, -0.2], &[10.0, -10.0], 0.0, 2.0, &cfg).unwrap();
    for (a, b) in run.nu_norms().iter().zip(scaled.nu_norms()) {
        assert!((10.0 * a - b).abs() <= 1e-9 * (1.0 + b));
    }
}

#[test]
fn example_one_output_variation_is_the_sum_of_variations() {
    let sys = builtin("ex1-timevarying").unwrap();
    let run = simulate_variational(&sys, &[0.1, -0.2], &[0.6, 0.8], 0.0, 0.2, &CheckConfig::default()).unwrap();
    for (xi, nu) in run.xi.iter().zip(&run.nu) {
        assert!((nu[0] - (xi[0] + xi[1])).abs() <= 1e-14 * (1.0 + xi[0].abs() + xi[1].abs()));
    }
}

#[test]
fn difference_quotient_matches_variation_on_lti() {
    let sys = builtin("lti-remark1").unwrap();
    // xi0 mixes both modes with positive weights, so nu = xi1 never crosses zero
    // and the relative deviation stays well conditioned
    for delta in [1e-2, 1e-4, 1e-6] {
        let r = fd_variational_check(&sys, &[1.0, 2.0], &[1.0, 0.5], delta, 0.0, 5.0, &CheckConfig::default()).unwrap();
        assert_eq!(r.termination, Termination::Completed);
        assert!(r.state_deviation <= 1e-7 && r.output_deviation <= 1e-7, "{r:?}");
    }
}

#[test]
fn difference_quotient_converges_linearly_before_the_example_one_blow_up() {
    let sys = builtin("ex1-timevarying").unwrap();
    let cfg = CheckConfig::default();
    let dev = |delta| {
        let r = fd_variational_check(&sys, &[0.2, 0.1], &[0.6, 0.8], delta, 0.0, 0.3, &cfg).unwrap();
        assert!(r.termination.is_completed());
        r.state_deviation
    };
    let (a, b) = (dev(1e-4), dev(1e-5));
    assert!(b <= 1e-3);
    assert!((a / b - 10.0).abs() < 2.0, "{a} {b}");
}

#[test]
fn oes_on_the_examples() {
    let cfg = CheckConfig::default();
    let ex2 = builtin("ex2-timeinvariant").unwrap();
    let v = check_oes_variational(&ex2, &plan(50, 5.0), &cfg).unwrap();
    assert!(v.holds && v.min_alpha.unwrap() >= 0.9);

    let bad = builtin("lti-remark1-badout").unwrap();
    assert!(!check_oes_variational(&bad, &plan(20, 5.0), &cfg).unwrap().holds);
}

#[test]
fn example_one_blow_up_is_reported_as_numerical() {
    let sys = builtin("ex1-timevarying").unwrap();
    let cfg = CheckConfig::default();
    let oc = check_output_contraction(&sys, &plan(8, 5.0), &cfg).unwrap();
    let oes = check_oes_variational(&sys, &plan(8, 5.0), &cfg).unwrap();
    for v in [&oc, &oes] {
        assert!(!v.holds);
        assert!(v.only_numerical_failures());
        assert_eq!(v.numerical_failures, 8);
        assert!(v.records.iter().all(|r| matches!(
            r.termination,
            Termination::StepUnderflow { .. } | Termination::BlowUp { .. }
        )));
    }
    // both checks reach the same verdict on the same box
    assert_eq!(oc.holds, oes.holds);
}

#[test]
fn example_two_output_approaches_its_equilibrium() {
    let sys = builtin("ex2-timeinvariant").unwrap();
    let root = example_two_root();
    assert!((root - 0.2432386258829211).abs() < 1e-13);
    assert!((root - 0.246).abs() <= 5e-3);

    let cfg = CheckConfig::default();
    let near = SamplingPlan::new(vec![(2.99, 3.01); 2], 4, 0, 0.0, 10.0);
    let reference_value = check_oes_equilibrium(&sys, &[0.246], None, &near, &cfg).unwrap();
    for s in &reference_value.series {
        let s = s.as_ref().unwrap();
        assert!(s.d[0] > 5.0 && s.d_at(10.0).unwrap() <= 5e-3);
    }

    let v = check_oes_equilibrium(&sys, &[root], Some(&[0.0, 0.0]), &plan(20, 5.0), &cfg).unwrap();
    assert!(v.holds && v.min_alpha.unwrap() >= 0.9);
}

#[test]
fn time_varying_system_is_rejected_for_equilibrium_stability() {
    let sys = builtin("ex1-timevarying").unwrap();
    let err = check_oes_equilibrium(&sys, &[0.0], None, &plan(2, 1.0), &CheckConfig::default()).unwrap_err();
    assert!(matches!(err, ContractionError::TimeVarying(_)));
}

#[test]
fn registry_dispatches_by_name() {
    let reg = CheckRegistry::builtin();
    let names: Vec<_> = reg.names().collect();
    for n in ["contraction", "oes", "oes-eq", "partial"] {
        assert!(names.contains(&n));
    }
    let sys = builtin("lti-remark1").unwrap();
    let via_registry = reg
        .get("contraction")
        .unwrap()
        .run(&sys, &plan(6, 5.0), &CheckConfig::default(), &CheckParams::default())
        .unwrap();
    assert_eq!(via_registry, check_output_contraction(&sys, &plan(6, 5.0), &CheckConfig::default()).unwrap());
    assert!(matches!(reg.get("nope"), Err(ContractionError::UnknownCheck(_))));
    let eq = reg.get("oes-eq").unwrap().run(&sys, &plan(2, 1.0), &CheckConfig::default(), &CheckParams::default());
    assert!(matches!(eq, Err(ContractionError::MissingEquilibrium(_))));
}

#[test]
fn plan_validation() {
    let sys = builtin("lti-remark1").unwrap();
    let cfg = CheckConfig::default();
    for bad in [
        SamplingPlan::cube(3, -1.0, 1.0, 4, 0, 0.0, 1.0),
        SamplingPlan::cube(2, 1.0, -1.0, 4, 0, 0.0, 1.0),
        SamplingPlan::cube(2, -1.0, 1.0, 0, 0, 0.0, 1.0),
        SamplingPlan::cube(2, -1.0, 1.0, 4, 0, 1.0, 1.0),
    ] {
        assert!(check_output_contraction(&sys, &bad, &cfg).is_err(), "{bad:?}");
    }
}
