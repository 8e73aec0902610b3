//! Integer invariants by angle unwrapping along loops.
//!
//! Positive twisting means rotation from the first frame vector toward the second.

use crate::chart::Point;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{Distribution, VectorField};
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

pub const DEFAULT_SAMPLES: usize = 256;
pub const MAX_SAMPLES: usize = 4096;
const PLANE_TOL: f64 = 1e-8;

/// Piecewise linear closed curve in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub label: String,
    pub base: Point,
    /// Displacements traversed one after another, each in equal parameter time.
    pub segments: Vec<Vec<f64>>,
}

impl Loop {
    /// Loop winding `turns[i]` times around each angular coordinate `i`.
    pub fn winding(label: &str, base: Point, turns: &[i64]) -> Self {
        let seg = turns.iter().map(|&t| t as f64 * TAU).collect();
        Loop { label: label.into(), base, segments: vec![seg] }
    }

    /// Once around coordinate `i`.
    pub fn circle(label: &str, base: Point, i: usize) -> Self {
        let mut turns = vec![0; base.len()];
        turns[i] = 1;
        Loop::winding(label, base, &turns)
    }

    /// Traverses `self`, then `other` (same base point).
    pub fn concat(&self, other: &Loop, label: &str) -> Result<Loop> {
        if self.base != other.base {
            return Err(Error::Precondition("loops must share a base point".into()));
        }
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        Ok(Loop { label: label.into(), base: self.base.clone(), segments })
    }

    /// Point at parameter `t` in `[0, 1]`.
    pub fn at(&self, t: f64) -> Point {
        let n = self.segments.len();
        let s = (t.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let local = s - k as f64;
        let mut p = self.base.clone();
        for seg in &self.segments[..k] {
            for (a, b) in p.iter_mut().zip(seg) {
                *a += b;
            }
        }
        for (a, b) in p.iter_mut().zip(&self.segments[k]) {
            *a += local * b;
        }
        p
    }

    /// Tangent (per unit parameter) at `t`.
    pub fn velocity(&self, t: f64) -> Vec<f64> {
        let n = self.segments.len();
        let k = ((t.clamp(0.0, 1.0) * n as f64).floor() as usize).min(n - 1);
        self.segments[k].iter().map(|v| v * n as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwistingReport {
    pub value: i64,
    pub residual: f64,
    pub samples: usize,
}

fn wrap(a: f64) -> f64 {
    let mut d = (a + PI).rem_euclid(TAU) - PI;
    if d <= -PI {
        d += TAU;
    }
    d
}

fn fmt_point(p: &[f64]) -> String {
    let v: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", v.join(", "))
}

/// Coefficients of `x` in the frame `(c1, c2)` by least squares.
fn decompose(x: &[f64], c1: &[f64], c2: &[f64], p: &[f64]) -> Result<(f64, f64)> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
    let (a11, a12, a22) = (dot(c1, c1), dot(c1, c2), dot(c2, c2));
    let det = a11 * a22 - a12 * a12;
    if det.abs() < 1e-24 {
        return Err(Error::ZeroVector(format!("degenerate frame at {}", fmt_point(p))));
    }
    let (b1, b2) = (dot(c1, x), dot(c2, x));
    let g1 = (a22 * b1 - a12 * b2) / det;
    let g2 = (a11 * b2 - a12 * b1) / det;
    let res: f64 = x.iter().zip(c1).zip(c2).map(|((xi, u), v)| (xi - g1 * u - g2 * v).powi(2)).sum::<f64>().sqrt();
    let scale = dot(x, x).sqrt().max(1.0);
    if res > PLANE_TOL * scale {
        return Err(Error::LeavesPlane(fmt_point(p)));
    }
    if g1.hypot(g2) < 1e-12 {
        return Err(Error::ZeroVector(fmt_point(p)));
    }
    Ok((g1, g2))
}

/// Unwraps `angle(t)` over `[0, 1]`, with `period` the angle of one full turn
/// (`2 pi` for vectors, `pi` for lines), doubling the sample count until every
/// step is well resolved and the total is close to an integer.
fn unwrap_turns(
    n_samples: usize,
    residual_tol: f64,
    period: f64,
    angle: &dyn Fn(f64) -> Result<f64>,
) -> Result<TwistingReport> {
    let mut n = n_samples.max(4);
    loop {
        let mut prev = angle(0.0)?;
        let mut total = 0.0;
        let mut max_step = 0.0f64;
        for i in 1..=n {
            let a = angle(i as f64 / n as f64)?;
            let d = if period == PI { wrap(2.0 * (a - prev)) / 2.0 } else { wrap(a - prev) };
            max_step = max_step.max(d.abs());
            total += d;
            prev = a;
        }
        let turns = total / TAU;
        let value = turns.round();
        let residual = (turns - value).abs();
        if residual < residual_tol && max_step < period / 4.0 {
            return Ok(TwistingReport { value: value as i64, residual, samples: n });
        }
        if n >= MAX_SAMPLES {
            return Err(Error::NoConvergence(residual));
        }
        n *= 2;
    }
}

/// Winding number of `x` in the frame `(c1, c2)` along `gamma`.
pub fn twisting_number(
    x: &VectorField,
    frame: (&VectorField, &VectorField),
    gamma: &Loop,
    n_samples: usize,
    residual_tol: f64,
) -> Result<TwistingReport> {
    let angle = |t: f64| -> Result<f64> {
        let p = gamma.at(t);
        let (g1, g2) = decompose(&x.eval(&p), &frame.0.eval(&p), &frame.1.eval(&p), &p)?;
        Ok(g2.atan2(g1))
    };
    unwrap_turns(n_samples, residual_tol, TAU, &angle)
}

/// Winding of `c_prime` against the frame `(c, J c)`, where `J` is the rotation by
/// a right angle in the oriented plane `(p1, p2)`.
pub fn rotation_number(
    c_prime: &VectorField,
    c: &VectorField,
    plane: (&VectorField, &VectorField),
    gamma: &Loop,
    n_samples: usize,
    residual_tol: f64,
) -> Result<TwistingReport> {
    let angle = |t: f64| -> Result<f64> {
        let p = gamma.at(t);
        let (e1, e2) = (plane.0.eval(&p), plane.1.eval(&p));
        let (a1, a2) = decompose(&c_prime.eval(&p), &e1, &e2, &p)?;
        let (b1, b2) = decompose(&c.eval(&p), &e1, &e2, &p)?;
        Ok(a2.atan2(a1) - b2.atan2(b1))
    };
    unwrap_turns(n_samples, residual_tol, TAU, &angle)
}

/// Angle, in the oriented plane `(p1, p2)`, of the line `span(v1, v2) ∩ span(p1, p2)`.
fn intersection_angle(v: &[Vec<f64>; 2], pl: &[Vec<f64>; 2], p: &[f64]) -> Result<f64> {
    let n = v[0].len();
    let m = DMatrix::from_fn(n, 4, |i, j| match j {
        0 => v[0][i],
        1 => v[1][i],
        2 => -pl[0][i],
        _ => -pl[1][i],
    });
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::ZeroVector(fmt_point(p)))?;
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    if sv.len() < 4 || sv[order[1]] < 1e-9 {
        return Err(Error::ZeroVector(format!("intersection line not unique at {}", fmt_point(p))));
    }
    let null = vt.row(order[0]);
    let (c, d) = (null[2], null[3]);
    if c.hypot(d) < 1e-9 {
        return Err(Error::ZeroVector(format!("intersection line vanishes at {}", fmt_point(p))));
    }
    Ok(d.atan2(c))
}

/// Relative rotation of the lines `xi0 ∩ D'` against `xi0 ∩ D` along each generator.
pub fn delta_homomorphism(
    d: &Distribution,
    d_prime: &Distribution,
    xi0: (&VectorField, &VectorField),
    generators: &[Loop],
    n_samples: usize,
    residual_tol: f64,
) -> Result<BTreeMap<String, i64>> {
    if d.spanning.len() != 2 || d_prime.spanning.len() != 2 {
        return Err(Error::WrongArity("delta needs rank-2 distributions".into()));
    }
    let mut out = BTreeMap::new();
    for g in generators {
        let angle = |t: f64| -> Result<f64> {
            let p = g.at(t);
            let pl = [xi0.0.eval(&p), xi0.1.eval(&p)];
            let a = intersection_angle(&[d.spanning[0].eval(&p), d.spanning[1].eval(&p)], &pl, &p)?;
            let b = intersection_angle(&[d_prime.spanning[0].eval(&p), d_prime.spanning[1].eval(&p)], &pl, &p)?;
            Ok(b - a)
        };
        let r = unwrap_turns(n_samples, residual_tol, PI, &angle)?;
        out.insert(g.label.clone(), r.value);
    }
    Ok(out)
}

/// `(iX, jX, kX)` for `X = a + b i + c j + d k`.
pub fn geiges_framing(x: &[Expr; 4], pts: &[Point]) -> Result<[[Expr; 4]; 3]> {
    for p in pts {
        let n: f64 = x.iter().map(|e| e.eval(p).powi(2)).sum::<f64>().sqrt();
        if n < 1e-12 {
            return Err(Error::ZeroVector(fmt_point(p)));
        }
    }
    let [a, b, c, d] = x.clone();
    let i = [b.neg(), a.clone(), d.neg(), c.clone()];
    let j = [c.neg(), d.clone(), a.clone(), b.neg()];
    let k = [d.neg(), c.neg(), b.clone(), a];
    Ok([i, j, k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use std::sync::Arc;

    fn torus() -> Arc<Chart> {
        Arc::new(Chart::builder("t").angular("x").angular("y").build().unwrap())
    }

    #[test]
    fn winding_of_rotating_field() {
        let c = torus();
        let e1 = VectorField::coordinate(&c, 0);
        let e2 = VectorField::coordinate(&c, 1);
        for k in -3i64..=3 {
            let x = VectorField::new(&c, vec![Expr::cos(&[(1, k)], 0.0), Expr::sin(&[(1, k)], 0.0)]).unwrap();
            let gy = Loop::circle("gy", vec![0.3, 0.0], 1);
            let r = twisting_number(&x, (&e1, &e2), &gy, 256, 0.25).unwrap();
            assert_eq!(r.value, k);
            assert!(r.residual < 1e-9);
            let gx = Loop::circle("gx", vec![0.0, 0.4], 0);
            assert_eq!(twisting_number(&x, (&e1, &e2), &gx, 256, 0.25).unwrap().value, 0);
        }
    }

    #[test]
    fn undersampling_triggers_doubling() {
        let c = torus();
        let e1 = VectorField::coordinate(&c, 0);
        let e2 = VectorField::coordinate(&c, 1);
        let x = VectorField::new(&c, vec![Expr::cos(&[(1, 40)], 0.0), Expr::sin(&[(1, 40)], 0.0)]).unwrap();
        let r = twisting_number(&x, (&e1, &e2), &Loop::circle("g", vec![0.0, 0.0], 1), 16, 0.25).unwrap();
        assert_eq!(r.value, 40);
        assert!(r.samples > 16);
    }

    #[test]
    fn quaternion_units() {
        let one = [Expr::constant(1.0), Expr::zero(), Expr::zero(), Expr::zero()];
        let f = geiges_framing(&one, &[vec![0.0]]).unwrap();
        assert_eq!(f[0][1].as_constant(), Some(1.0));
        assert_eq!(f[1][2].as_constant(), Some(1.0));
        assert_eq!(f[2][3].as_constant(), Some(1.0));
        let i = [Expr::zero(), Expr::constant(1.0), Expr::zero(), Expr::zero()];
        let f = geiges_framing(&i, &[vec![0.0]]).unwrap();
        assert_eq!(f[0][0].as_constant(), Some(-1.0));
        let z = [Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()];
        assert!(geiges_framing(&z, &[vec![0.0]]).is_err());
    }

    #[test]
    fn concatenated_loop() {
        let gx = Loop::circle("gx", vec![0.0, 0.0], 0);
        let gy = Loop::circle("gy", vec![0.0, 0.0], 1);
        let g = gx.concat(&gy, "gxy").unwrap();
        assert_eq!(g.at(0.5), vec![TAU, 0.0]);
        assert_eq!(g.at(1.0), vec![TAU, TAU]);
    }
}
