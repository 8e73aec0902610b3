use engelbook::pipeline::{
    assemble, binding_probe_segment, build_binding_engel, build_collar_engel, collar_probe_segment, gluing_check,
    looseness_probe, model_catalog, model_names, Params, SampleConfig,
};
use engelbook::invariants::Loop;
use engelbook::Tolerances;
use std::f64::consts::FRAC_PI_4;

fn cfg(samples: usize) -> SampleConfig {
    SampleConfig { samples, seed: 7, ..SampleConfig::default() }
}

#[test]
fn every_model_meets_its_expected_outcome() {
    for name in model_names() {
        let m = model_catalog(name, &Params::default()).unwrap();
        let checks = m.verify(&cfg(200)).unwrap();
        let pass = checks.iter().all(|c| c.pass);
        let failing: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
        assert_eq!(pass, m.expected_pass, "{name}: failing {failing:?}");
    }
}

#[test]
fn product_open_book_fails_only_transversality() {
    let m = model_catalog("product_openbook", &Params::default()).unwrap();
    let checks = m.verify(&cfg(100)).unwrap();
    for c in &checks {
        if c.name.contains("adaptedness") {
            assert!(!c.pass);
            assert!(c.failures.iter().all(|f| f.diagnostic.contains("W tangent to the fibers")));
        } else {
            assert!(c.pass, "{}", c.name);
        }
    }
}

#[test]
fn catalog_shapes_and_parameter_validation() {
    let b = model_catalog("binding_Eb", &Params::default()).unwrap();
    assert_eq!(b.pieces.len(), 1);
    let w = b.pieces[0].w.as_ref().unwrap();
    assert_eq!(w.eval(&[0.0, 0.0, 0.5, 0.0]), vec![0.0, 1.0, 0.0, 1.0]);
    assert!(b.pieces[0].binding.is_some());
    let p = Params { n: Some(2), theta0: Some(0.0), ..Params::default() };
    let l = model_catalog("engel_darboux_loose", &p).unwrap();
    assert_eq!(l.pieces[0].engel_distribution().unwrap().spanning.len(), 2);
    let even_k = Params { k: Some(2), eps: Some(0.1), ..Params::default() };
    let d = model_catalog("engel_prolongation_Dk", &even_k).unwrap();
    assert!(d.verify(&cfg(100)).unwrap().iter().all(|c| c.pass));
    assert!(model_catalog("no_such_model", &Params::default()).is_err());
    assert!(model_catalog("engel_darboux_loose", &Params { n: Some(0), ..Params::default() }).is_err());
}

#[test]
fn gluing_sweep_matches_the_smoothness_condition() {
    let tol = Tolerances::default();
    for k in [1, 3, 5] {
        let bindings: Vec<_> = (1..=7).map(|l| build_binding_engel(l, k, 1.0).unwrap()).collect();
        for lambda in -2..=2 {
            let collar = build_collar_engel(lambda, k, FRAC_PI_4).unwrap();
            for (i, b) in bindings.iter().enumerate() {
                let l = i as i64 + 1;
                let pass = gluing_check(&collar, b, &tol).unwrap().pass;
                assert_eq!(pass, l - k == lambda, "l={l} k={k} lambda={lambda}");
            }
        }
    }
}

#[test]
fn slope_mismatch_is_reported() {
    let tol = Tolerances::default();
    let collar = build_collar_engel(2, 3, FRAC_PI_4).unwrap();
    let r = gluing_check(&collar, &build_binding_engel(5, 3, 0.9).unwrap(), &tol).unwrap();
    assert!(!r.pass);
    assert!(r.failures.iter().any(|f| f.diagnostic.contains("slope")));
}

#[test]
fn assemble_grid_passes() {
    for k in [1, 3, 5] {
        for lambda in -1..=2 {
            if k + lambda < 1 {
                assert!(assemble(lambda, k, None, None, &cfg(100)).is_err());
                continue;
            }
            let r = assemble(lambda, k, None, None, &cfg(100)).unwrap();
            let failing: Vec<_> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect();
            assert!(r.overall_pass, "lambda={lambda} k={k}: {failing:?}");
            assert_eq!(r.l, k + lambda);
            assert_eq!(r.invariants.tw_gamma_y, lambda);
            assert_eq!(r.invariants.tw_gamma_phi, k);
            assert_eq!(r.invariants.boundary_twist, k);
            assert_eq!(r.singularities.relative_euler, k);
        }
    }
    assert!(assemble(-4, 3, None, None, &cfg(10)).is_err());
}

#[test]
fn assemble_with_other_slope() {
    let r = assemble(1, 3, Some(0.6), None, &cfg(100)).unwrap();
    assert!(r.overall_pass);
    assert!((1.0 / (r.r0 * r.r0) - 1.0 / 0.6f64.tan()).abs() < 1e-9);
    assert!(build_collar_engel(1, 3, 2.0).is_err());
}

#[test]
fn looseness_counts() {
    let tol = Tolerances::default();
    let b = build_binding_engel(5, 3, 1.0).unwrap();
    assert_eq!(looseness_probe(&b, &binding_probe_segment(1.0), &tol).unwrap(), 5);
    let c = build_collar_engel(2, 3, FRAC_PI_4).unwrap();
    assert_eq!(looseness_probe(&c, &collar_probe_segment(), &tol).unwrap(), 3);
    let short = Loop { label: "short".into(), base: vec![0.0, 0.0, 0.1, 0.0], segments: vec![vec![0.0, 0.0, 0.0, 0.3], vec![0.0, 0.0, 0.0, -0.3]] };
    assert_eq!(looseness_probe(&c, &short, &tol).unwrap(), 0);
    let along_x = Loop::circle("x", vec![0.0, 0.0, 0.1, 0.0], 0);
    assert!(looseness_probe(&c, &along_x, &tol).is_err());
}
