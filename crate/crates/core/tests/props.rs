mod common;

use engelbook::expr::Expr;
use engelbook::fields::lie_bracket;
use engelbook::invariants::{twisting_number, Loop};
use engelbook::{Chart, Coordinate, VectorField};
use proptest::prelude::*;
use std::sync::Arc;

fn random_field(seed: u64) -> VectorField {
    let mut rng = common::rng(seed);
    let comps = (0..4).map(|_| common::random_expr(&mut rng)).collect();
    VectorField::new(&common::mixed_chart(), comps).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= tol * (1.0 + u.abs().max(v.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_central_differences(seed in any::<u64>(), var in 0usize..4) {
        let mut rng = common::rng(seed);
        let f = common::random_expr(&mut rng);
        let p = common::random_point(&mut rng);
        let h = 1e-5;
        let (mut a, mut b) = (p.clone(), p.clone());
        a[var] += h;
        b[var] -= h;
        let fd = (f.eval(&a) - f.eval(&b)) / (2.0 * h);
        let ex = f.differentiate(var).eval(&p);
        prop_assert!((fd - ex).abs() <= 1e-6 * ex.abs().max(1.0), "fd {fd} vs {ex}");
    }

    #[test]
    fn canonical_form_ignores_term_order(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let f = common::random_expr(&mut rng);
        let mut terms = f.terms().to_vec();
        terms.reverse();
        let g = Expr::from_terms(terms);
        prop_assert!(f.canonical_equal(&g));
        prop_assert!(f.add(&Expr::zero()).canonical_equal(&f));
        prop_assert!(f.sub(&f).is_zero());
    }

    #[test]
    fn product_commutes_and_evaluates(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (f, g) = (common::random_expr(&mut rng), common::random_expr(&mut rng));
        let p = common::random_point(&mut rng);
        prop_assert!(f.mul(&g).canonical_equal(&g.mul(&f)));
        let want = f.eval(&p) * g.eval(&p);
        prop_assert!((f.mul(&g).eval(&p) - want).abs() <= 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn bracket_is_antisymmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (x, y) = (random_field(s1), random_field(s2));
        let sum = lie_bracket(&x, &y).unwrap().add(&lie_bracket(&y, &x).unwrap()).unwrap();
        let p = common::random_point(&mut common::rng(s1 ^ s2));
        prop_assert!(sum.eval(&p).iter().all(|v| v.abs() < 1e-9), "{:?}", sum.eval(&p));
    }

    #[test]
    fn bracket_satisfies_jacobi(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let (x, y, z) = (random_field(s1), random_field(s2), random_field(s3));
        let b = |u: &VectorField, v: &VectorField| lie_bracket(u, v).unwrap();
        let total = b(&x, &b(&y, &z)).add(&b(&y, &b(&z, &x))).unwrap().add(&b(&z, &b(&x, &y))).unwrap();
        let p = common::random_point(&mut common::rng(s3));
        let scale: f64 = [b(&x, &b(&y, &z)), b(&y, &b(&z, &x))].iter().flat_map(|f| f.eval(&p)).map(f64::abs).fold(1.0, f64::max);
        prop_assert!(total.eval(&p).iter().all(|v| v.abs() < 1e-9 * scale), "{:?}", total.eval(&p));
    }

    #[test]
    fn bracket_matches_finite_differences(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (x, y) = (random_field(s1), random_field(s2));
        let p = common::random_point(&mut common::rng(s1.wrapping_add(s2)));
        let ex = lie_bracket(&x, &y).unwrap().eval(&p);
        let fd = common::fd_bracket(&x, &y, &p);
        prop_assert!(close(&ex, &fd, 1e-5), "{ex:?} vs {fd:?}");
    }
}

fn torus_chart() -> Arc<Chart> {
    Arc::new(Chart::new("T2", vec![Coordinate::angular("s"), Coordinate::angular("t")]).unwrap())
}

/// `(cos th, sin th)` and its rotation by a right angle, with `th = a s + b t`.
fn rotating_pair(c: &Arc<Chart>, a: i64, b: i64) -> (VectorField, VectorField) {
    let f = [(0, a), (1, b)];
    let (co, si) = (Expr::cos(&f, 0.3), Expr::sin(&f, 0.3));
    (
        VectorField::new(c, vec![co.clone(), si.clone()]).unwrap(),
        VectorField::new(c, vec![si.neg(), co]).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn twisting_survives_reparametrization(
        a in -4i64..=4, b in -4i64..=4, c in -4i64..=4, d in -4i64..=4,
        p in -2i64..=2, q in -2i64..=2, pieces in 1usize..5, n in 64usize..200,
    ) {
        let chart = torus_chart();
        let (x, _) = rotating_pair(&chart, c, d);
        let (e1, e2) = rotating_pair(&chart, a, b);
        let base = vec![0.4, 1.1];
        let whole = Loop::winding("g", base.clone(), &[p, q]);
        let step: Vec<f64> = whole.segments[0].iter().map(|v| v / pieces as f64).collect();
        let split = Loop { label: "g split".into(), base, segments: vec![step; pieces] };
        let t0 = twisting_number(&x, (&e1, &e2), &whole, n, 0.25).unwrap();
        let t1 = twisting_number(&x, (&e1, &e2), &split, n, 0.25).unwrap();
        let t2 = twisting_number(&x, (&e1, &e2), &whole, 2 * n, 0.25).unwrap();
        let want = (c - a) * p + (d - b) * q;
        prop_assert_eq!(t0.value, want);
        prop_assert_eq!(t1.value, want);
        prop_assert_eq!(t2.value, want);
    }
}
