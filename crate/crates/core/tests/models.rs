use std::collections::BTreeSet;

use occ_core::expr::parse;
use occ_core::ode::{integrate_rk4, integrate_rk45, map_output, FnField, IntegratorRegistry, Termination};
use occ_core::system::{builtin, builtin_names, load_system, AugmentedSystem, ModelError, StateField};

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn expressions_from_the_examples() {
    let e1 = parse("-0.1*x1^3 - (4 + sin(t) + 0.3*x1^2)*x2 + sin(x1 + x2) + cos(t)").unwrap();
    assert_eq!(e1.free_vars(), set(&["t", "x1", "x2"]));
    assert_eq!(parse("3.0").unwrap().free_vars(), BTreeSet::new());

    let empty: [(&str, f64); 0] = [];
    assert_eq!(parse("2^3^2").unwrap().eval(&empty).unwrap(), 512.0);
    assert_eq!(parse("pi").unwrap().eval(&empty).unwrap(), std::f64::consts::PI);
    let f1 = parse("-3*x2 - sin(x1 + x2)").unwrap();
    assert!((f1.eval(&[("x1", 3.0), ("x2", 3.0)]).unwrap() - (-8.720585)).abs() < 1e-6);
}

#[test]
fn builtins_and_files() {
    let ex2 = load_system("ex2-timeinvariant").unwrap();
    assert_eq!((ex2.n(), ex2.m()), (2, 1));
    assert!(ex2.is_time_invariant());
    assert!(!load_system("ex1-timevarying").unwrap().is_time_invariant());
    assert_eq!(builtin_names().count(), 4);

    let dir = std::env::temp_dir().join(format!("occ-models-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"name": "bad", "n": 2, "m": 1, "f": ["x3", "x1"], "h": ["x1"]}"#).unwrap();
    assert!(matches!(load_system(bad.to_str().unwrap()), Err(ModelError::UnknownVariable { .. })));
    let good = dir.join("good.json");
    std::fs::write(&good, r#"{"name": "osc", "n": 2, "m": 1, "f": ["x2", "-x1"], "h": ["x1"]}"#).unwrap();
    assert_eq!(load_system(good.to_str().unwrap()).unwrap().name(), "osc");
    assert!(matches!(load_system("no-such-system"), Err(ModelError::UnknownSystem(_))));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn jacobians_from_the_examples() {
    let ex2 = builtin("ex2-timeinvariant").unwrap();
    let j = ex2.jacobians(&[0.0, 0.0], 0.0).unwrap();
    let expected = [[-1.0, -4.0], [-3.0, 0.0]];
    let (fd, _) = ex2.finite_diff_jacobian(&[0.0, 0.0], 0.0, 1e-6).unwrap();
    for r in 0..2 {
        for c in 0..2 {
            assert!((j.jf[(r, c)] - expected[r][c]).abs() < 1e-15);
            assert!((fd[(r, c)] - expected[r][c]).abs() < 1e-9);
        }
    }
    let ex1 = builtin("ex1-timevarying").unwrap();
    let j = ex1.jacobians(&[1.0, 2.0], 0.5).unwrap();
    assert_eq!((j.jh[(0, 0)], j.jh[(0, 1)]), (1.0, 1.0));
    let (fd, _) = ex1.finite_diff_jacobian(&[1.0, 2.0], 0.5, 1e-6).unwrap();
    assert!((&j.jf - fd).amax() <= 1e-5 * j.jf.amax());
    assert!(matches!(ex1.finite_diff_jacobian(&[1.0, 2.0], 0.5, 0.0), Err(ModelError::BadStep(_))));
}

#[test]
fn integrators_against_closed_forms() {
    let decay = FnField::new(1, |_t: f64, x: &[f64], dx: &mut [f64]| {
        dx[0] = -x[0];
    });
    let coarse = integrate_rk4(&decay, &[1.0], 0.0, 1.0, 2e-2).unwrap();
    let fine = integrate_rk4(&decay, &[1.0], 0.0, 1.0, 1e-2).unwrap();
    let e = (-1.0f64).exp();
    let ratio = (coarse.last_state()[0] - e).abs() / (fine.last_state()[0] - e).abs();
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    let rk4 = integrate_rk4(&decay, &[1.0], 0.0, 1.0, 1e-4).unwrap();
    let rk45 = integrate_rk45(&decay, &[1.0], 0.0, 1.0, 1e-8, 1e-8).unwrap();
    assert!((rk45.last_state()[0] - e).abs() <= 1e-7);
    assert!(rk45.evals() < rk4.evals());

    let lti = builtin("lti-remark1").unwrap();
    let traj = integrate_rk4(&StateField { sys: &lti }, &[1.0, 1.0], 0.0, 1.0, 1e-3).unwrap();
    assert!(traj.last_state().iter().all(|v| (v - e).abs() < 1e-8));

    let ex2 = builtin("ex2-timeinvariant").unwrap();
    let traj = integrate_rk45(&StateField { sys: &ex2 }, &[3.0, 3.0], 0.0, 5.0, 1e-9, 1e-12).unwrap();
    assert_eq!(traj.termination(), Termination::Completed);
}

#[test]
fn outputs_along_lti_trajectories() {
    let spec = r#"{"name": "lti-sum", "n": 2, "m": 1, "f": ["-2*x1 + x2", "x1 - 2*x2"], "h": ["x1 + x2"]}"#;
    let sum = occ_core::system::SystemDoc::from_json(spec).unwrap().build().unwrap();
    let traj = integrate_rk45(&StateField { sys: &sum }, &[1.0, 1.0], 0.0, 1.0, 1e-12, 1e-14).unwrap();
    let y = map_output(&sum, &traj).unwrap();
    assert!((y.last().unwrap()[0] - 0.7357589).abs() < 1e-7);

    let bad = builtin("lti-remark1-badout").unwrap();
    let traj = integrate_rk45(&StateField { sys: &bad }, &[1.0, 1.0], 0.0, 1.0, 1e-12, 1e-14).unwrap();
    assert!((map_output(&bad, &traj).unwrap().last().unwrap()[0] - std::f64::consts::E).abs() < 1e-7);
}

#[test]
fn augmented_field_keeps_zero_variation() {
    let ex1 = builtin("ex1-timevarying").unwrap();
    let aug = AugmentedSystem::new(&ex1);
    let traj = integrate_rk45(&aug, &[0.5, -0.5, 0.0, 0.0], 0.0, 0.2, 1e-9, 1e-12).unwrap();
    assert!(traj.states().all(|z| z[2] == 0.0 && z[3] == 0.0));
}

#[test]
fn integrator_registry_by_name() {
    let reg = IntegratorRegistry::builtin();
    let names: Vec<_> = reg.names().collect();
    assert!(names.contains(&"rk4-fixed") && names.contains(&"rk45-adaptive"));
}
