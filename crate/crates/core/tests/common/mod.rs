#![allow(dead_code)]

use engelbook::expr::{Expr, Mode, TrigTerm};
use engelbook::{Chart, Coordinate, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Chart `(x, y, r, z)`: two angles, a radius bounded away from 0, a line.
pub fn mixed_chart() -> Arc<Chart> {
    Arc::new(
        Chart::new(
            "mixed",
            vec![
                Coordinate::angular("x"),
                Coordinate::angular("y"),
                Coordinate::radial("r", 0.5, 1.5).closed(),
                Coordinate::linear("z", -1.0, 1.0),
            ],
        )
        .unwrap(),
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trig polynomial on `mixed_chart` with polynomial degree at most 4 and
/// frequencies at most 7 in absolute value.
pub fn random_expr(rng: &mut ChaCha8Rng) -> Expr {
    let n = rng.gen_range(1..=4);
    let terms = (0..n)
        .map(|_| {
            let pr = rng.gen_range(-2..=2i32);
            let pz = rng.gen_range(0..=(4 - pr.abs()).min(2));
            let mut powers = vec![];
            if pr != 0 {
                powers.push((2, pr));
            }
            if pz != 0 {
                powers.push((3, pz));
            }
            let mode = [Mode::Const, Mode::Cos, Mode::Sin][rng.gen_range(0..3)];
            let freq = if mode == Mode::Const {
                vec![]
            } else {
                vec![(0, rng.gen_range(-7..=7i64)), (1, rng.gen_range(-7..=7i64))]
            };
            TrigTerm { coeff: rng.gen_range(-2.0..2.0), powers, mode, freq, phase: rng.gen_range(0.0..6.0) }
        })
        .collect();
    Expr::from_terms(terms)
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Vec<f64> {
    vec![rng.gen_range(0.0..6.28), rng.gen_range(0.0..6.28), rng.gen_range(0.6..1.4), rng.gen_range(-0.9..0.9)]
}

/// Central-difference Jacobian `J[i][j] = d v_i / d x_j` of a field.
pub fn fd_jacobian(v: &VectorField, p: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = p.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut a = p.to_vec();
        let mut b = p.to_vec();
        a[j] += h;
        b[j] -= h;
        let (va, vb) = (v.eval(&a), v.eval(&b));
        for i in 0..n {
            jac[i][j] = (va[i] - vb[i]) / (2.0 * h);
        }
    }
    jac
}

/// `[X, Y]` from finite differences of the component functions.
pub fn fd_bracket(x: &VectorField, y: &VectorField, p: &[f64]) -> Vec<f64> {
    let h = 1e-5;
    let (jx, jy) = (fd_jacobian(x, p, h), fd_jacobian(y, p, h));
    let (xv, yv) = (x.eval(p), y.eval(p));
    (0..p.len())
        .map(|i| (0..p.len()).map(|j| xv[j] * jy[i][j] - yv[j] * jx[i][j]).sum())
        .collect()
}
