//! Characteristic foliations on embedded surfaces.

mod portrait;
mod xi_prime;

pub use portrait::{portrait_csv, portrait_svg};
pub use xi_prime::{construct_xi_prime, XiPrime, XiPrimeConstruction, XiPrimeParams};

use crate::chart::{Chart, Coordinate};
use crate::error::{Error, Result};
use crate::expr::AffineImage;
use crate::fields::{OneForm, VectorField};
use crate::invariants::{twisting_number, Loop};
use crate::verify::{CheckReport, Tolerances};
use nalgebra::Matrix2;
use serde::Serialize;
use std::f64::consts::TAU;
use std::sync::Arc;

pub type PlaneFn = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
pub type AmbientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type SurfaceFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

const FD_STEP: f64 = 1e-6;
const DET_TOL: f64 = 1e-9;
const ZERO_RESIDUAL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDomain {
    Disk { radius: f64 },
    /// Parameter `circle` is periodic, the other runs over `[lo, hi]`.
    Annulus { circle: usize, lo: f64, hi: f64 },
    Torus,
}

#[derive(Clone)]
pub enum SurfaceMap {
    /// Target coordinate `i` is `images[i]` in the parameters `(u, v) = (var 0, var 1)`.
    Affine { target: Arc<Chart>, images: Vec<AffineImage> },
    /// Evaluation closure into an ambient space of dimension `dim`; not symbolic.
    Numeric { dim: usize, f: SurfaceFn },
}

#[derive(Clone)]
pub struct SurfaceEmbedding {
    pub label: String,
    pub domain: ParamDomain,
    pub map: SurfaceMap,
}

impl SurfaceEmbedding {
    pub fn affine(label: &str, domain: ParamDomain, target: &Arc<Chart>, images: Vec<AffineImage>) -> Result<Self> {
        if images.len() != target.dim() {
            return Err(Error::WrongArity(format!("{} images for dimension {}", images.len(), target.dim())));
        }
        Ok(SurfaceEmbedding { label: label.into(), domain, map: SurfaceMap::Affine { target: target.clone(), images } })
    }

    pub fn numeric(label: &str, domain: ParamDomain, dim: usize, f: SurfaceFn) -> Self {
        SurfaceEmbedding { label: label.into(), domain, map: SurfaceMap::Numeric { dim, f } }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.map, SurfaceMap::Affine { .. })
    }

    pub fn point(&self, u: f64, v: f64) -> Vec<f64> {
        match &self.map {
            SurfaceMap::Affine { images, .. } => images
                .iter()
                .map(|im| im.constant + im.coeffs.iter().map(|&(j, c)| c as f64 * [u, v][j]).sum::<f64>())
                .collect(),
            SurfaceMap::Numeric { f, .. } => f(u, v),
        }
    }

    /// Two-dimensional parameter chart matching the domain.
    pub fn param_chart(&self) -> Result<Arc<Chart>> {
        let coords = match self.domain {
            ParamDomain::Torus => vec![Coordinate::angular("u"), Coordinate::angular("v")],
            ParamDomain::Disk { radius } => {
                vec![Coordinate::linear("u", -radius, radius), Coordinate::linear("v", -radius, radius)]
            }
            ParamDomain::Annulus { circle, lo, hi } => {
                let mut c = vec![Coordinate::linear("u", lo, hi), Coordinate::linear("v", lo, hi)];
                c[circle] = Coordinate::angular(if circle == 0 { "u" } else { "v" });
                c
            }
        };
        Ok(Arc::new(Chart::new(&format!("{}-params", self.label), coords)?))
    }
}

/// A one-form on the ambient space: symbolic on a chart, or an evaluation closure.
#[derive(Clone)]
pub enum AmbientForm {
    Symbolic(OneForm),
    Numeric(AmbientFn),
}

impl AmbientForm {
    fn eval(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AmbientForm::Symbolic(a) => a.eval(x),
            AmbientForm::Numeric(f) => f(x),
        }
    }
}

/// Pullback of a one-form to the parameter plane.
#[derive(Clone)]
pub enum PulledBack {
    Exact(OneForm),
    Numeric(PlaneFn),
}

impl PulledBack {
    pub fn eval(&self, u: f64, v: f64) -> [f64; 2] {
        match self {
            PulledBack::Exact(f) => {
                let p = [u, v];
                [f.coeffs[0].eval(&p), f.coeffs[1].eval(&p)]
            }
            PulledBack::Numeric(f) => f(u, v),
        }
    }

    /// `J[i][j] = d beta_i / d u_j`.
    pub fn jacobian(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        match self {
            PulledBack::Exact(f) => {
                let p = [u, v];
                let d = |i: usize, j: usize| f.coeffs[i].differentiate(j).eval(&p);
                [[d(0, 0), d(0, 1)], [d(1, 0), d(1, 1)]]
            }
            PulledBack::Numeric(f) => {
                let h = FD_STEP;
                let (a, b) = (f(u + h, v), f(u - h, v));
                let (c, d) = (f(u, v + h), f(u, v - h));
                [
                    [(a[0] - b[0]) / (2.0 * h), (c[0] - d[0]) / (2.0 * h)],
                    [(a[1] - b[1]) / (2.0 * h), (c[1] - d[1]) / (2.0 * h)],
                ]
            }
        }
    }

    /// Coefficient of `du ^ dv` in the exterior derivative; also the divergence of
    /// the dual field `(beta_v, -beta_u)`.
    pub fn curl(&self, u: f64, v: f64) -> f64 {
        let j = self.jacobian(u, v);
        j[1][0] - j[0][1]
    }
}

fn fd_jacobian(f: &dyn Fn(f64, f64) -> Vec<f64>, u: f64, v: f64) -> Vec<[f64; 2]> {
    let h = FD_STEP;
    let (a, b, c, d) = (f(u + h, v), f(u - h, v), f(u, v + h), f(u, v - h));
    (0..a.len()).map(|i| [(a[i] - b[i]) / (2.0 * h), (c[i] - d[i]) / (2.0 * h)]).collect()
}

fn immersion_rank_ok(cols: &[[f64; 2]]) -> bool {
    let m = nalgebra::DMatrix::from_fn(cols.len(), 2, |i, j| cols[i][j]);
    let sv = m.singular_values();
    sv.iter().filter(|&&s| s > 1e-9).count() == 2
}

/// Pullback of `alpha` to the surface, exact when both inputs are symbolic.
pub fn characteristic_foliation(alpha: &AmbientForm, s: &SurfaceEmbedding) -> Result<PulledBack> {
    match (&s.map, alpha) {
        (SurfaceMap::Affine { target, images }, AmbientForm::Symbolic(a)) => {
            if **target != *a.chart {
                return Err(Error::ChartMismatch(target.label.clone(), a.chart.label.clone()));
            }
            let cols: Vec<[f64; 2]> = images
                .iter()
                .map(|im| {
                    let mut c = [0.0; 2];
                    for &(j, k) in &im.coeffs {
                        c[j] += k as f64;
                    }
                    c
                })
                .collect();
            if !immersion_rank_ok(&cols) {
                return Err(Error::Precondition(format!("surface `{}` is not immersed", s.label)));
            }
            let pc = s.param_chart()?;
            let moved: Vec<_> = a.coeffs.iter().map(|e| e.compose_affine(images)).collect::<Result<_>>()?;
            let mut out = vec![crate::expr::Expr::zero(), crate::expr::Expr::zero()];
            for (e, c) in moved.iter().zip(&cols) {
                for j in 0..2 {
                    if c[j] != 0.0 {
                        out[j] = out[j].add(&e.scale(c[j]));
                    }
                }
            }
            Ok(PulledBack::Exact(OneForm::new(&pc, out)?))
        }
        _ => {
            let sc = s.clone();
            let a = alpha.clone();
            let f: PlaneFn = Arc::new(move |u, v| {
                let x = sc.point(u, v);
                let w = a.eval(&x);
                let j = fd_jacobian(&|p, q| sc.point(p, q), u, v);
                let mut out = [0.0; 2];
                for (wi, ji) in w.iter().zip(&j) {
                    out[0] += wi * ji[0];
                    out[1] += wi * ji[1];
                }
                out
            });
            // immersion at a few parameter points
            for &(u, v) in &[(0.1, 0.2), (0.37, 0.61), (0.8, 0.45)] {
                let (u, v) = clamp_to_domain(&s.domain, u, v);
                if !immersion_rank_ok(&fd_jacobian(&|p, q| s.point(p, q), u, v)) {
                    return Err(Error::Precondition(format!("surface `{}` is not immersed near ({u}, {v})", s.label)));
                }
            }
            Ok(PulledBack::Numeric(f))
        }
    }
}

fn clamp_to_domain(d: &ParamDomain, u: f64, v: f64) -> (f64, f64) {
    match *d {
        ParamDomain::Torus => (u * TAU, v * TAU),
        ParamDomain::Disk { radius } => (u * radius * 0.7, v * radius * 0.7),
        ParamDomain::Annulus { circle, lo, hi } => {
            let s = lo + (hi - lo) * v;
            if circle == 0 {
                (u * TAU, s)
            } else {
                (s, u * TAU)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusSlope {
    pub linear: bool,
    /// `dv/du` along the kernel; infinite when the kernel is `d/dv`.
    pub slope: f64,
    pub coeffs: [f64; 2],
}

/// Linearity and slope of the characteristic foliation on a torus.
pub fn torus_slope(alpha: &AmbientForm, torus: &SurfaceEmbedding, pts: &[(f64, f64)], tol: &Tolerances) -> Result<TorusSlope> {
    if torus.domain != ParamDomain::Torus {
        return Err(Error::Precondition(format!("`{}` is not a torus", torus.label)));
    }
    let pb = characteristic_foliation(alpha, torus)?;
    slope_of(&pb, pts, tol)
}

/// Slope data of a pulled-back form on a torus.
pub fn slope_of(pb: &PulledBack, pts: &[(f64, f64)], tol: &Tolerances) -> Result<TorusSlope> {
    let first = pts.first().copied().unwrap_or((0.0, 0.0));
    let c0 = pb.eval(first.0, first.1);
    let mut linear = true;
    // finite-difference tangents carry roughly 1e-10 of roundoff
    let mut ctol = tol.slope;
    match pb {
        PulledBack::Exact(f) => linear = f.coeffs.iter().all(|c| c.as_constant().is_some()),
        PulledBack::Numeric(_) => ctol = ctol.max(1e-7),
    }
    for &(u, v) in pts.iter().chain(std::iter::once(&first)) {
        let c = pb.eval(u, v);
        if c[0].hypot(c[1]) <= tol.rank {
            return Err(Error::SingularPullback(format!("({u}, {v})")));
        }
        if (c[0] - c0[0]).abs() > ctol || (c[1] - c0[1]).abs() > ctol {
            linear = false;
        }
    }
    // kernel of a du + b dv is spanned by (b, -a)
    let slope = if c0[1] == 0.0 { f64::INFINITY } else { -c0[0] / c0[1] };
    Ok(TorusSlope { linear, slope, coeffs: c0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SingularityKind {
    Elliptic,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Singularity {
    pub location: [f64; 2],
    pub kind: SingularityKind,
    pub sign: i32,
    pub det: f64,
    pub divergence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityReport {
    pub singularities: Vec<Singularity>,
    pub e_plus: i64,
    pub e_minus: i64,
    pub h_plus: i64,
    pub h_minus: i64,
    pub euler_identity: bool,
    pub relative_euler: i64,
}

impl SingularityReport {
    /// Aggregates counts, with `chi` the Euler characteristic of the surface.
    pub fn from_singularities(mut singularities: Vec<Singularity>, chi: i64) -> Self {
        singularities.sort_by(|a, b| {
            a.location[0].total_cmp(&b.location[0]).then(a.location[1].total_cmp(&b.location[1]))
        });
        let count = |k: SingularityKind, s: i32| singularities.iter().filter(|x| x.kind == k && x.sign == s).count() as i64;
        let (ep, em) = (count(SingularityKind::Elliptic, 1), count(SingularityKind::Elliptic, -1));
        let (hp, hm) = (count(SingularityKind::Hyperbolic, 1), count(SingularityKind::Hyperbolic, -1));
        SingularityReport {
            singularities,
            e_plus: ep,
            e_minus: em,
            h_plus: hp,
            h_minus: hm,
            euler_identity: ep + em - hp - hm == chi,
            relative_euler: ep - em - hp + hm,
        }
    }
}

fn newton(pb: &PulledBack, start: [f64; 2]) -> Option<[f64; 2]> {
    let mut z = start;
    for _ in 0..60 {
        let b = pb.eval(z[0], z[1]);
        if b[0].hypot(b[1]) < ZERO_RESIDUAL * 1e-2 {
            return Some(z);
        }
        let j = pb.jacobian(z[0], z[1]);
        let m = Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
        let step = match m.try_inverse() {
            Some(inv) if m.determinant().abs() > 1e-14 => inv * nalgebra::Vector2::new(b[0], b[1]),
            _ => {
                let svd = m.svd(true, true);
                svd.solve(&nalgebra::Vector2::new(b[0], b[1]), 1e-12).ok()?
            }
        };
        z = [z[0] - step[0], z[1] - step[1]];
        if !z[0].is_finite() || !z[1].is_finite() {
            return None;
        }
    }
    let b = pb.eval(z[0], z[1]);
    (b[0].hypot(b[1]) < ZERO_RESIDUAL).then_some(z)
}

/// Locates and classifies the zeros of a pulled-back form on a disk.
///
/// Candidate cells come from a sign-change scan of both components on a
/// `grid_n x grid_n` grid; zeros are refined by Newton's method. Two distinct
/// zeros closer than `newton_tol` are a resolution failure. The sign of a zero
/// is `sign_datum` there (the `u`-function of a vertically invariant form), or
/// the sign of the divergence of the dual field when no datum is given.
pub fn find_and_classify(
    pb: &PulledBack,
    radius: f64,
    grid_n: usize,
    newton_tol: f64,
    sign_datum: Option<&dyn Fn(f64, f64) -> f64>,
) -> Result<SingularityReport> {
    let n = grid_n.max(4);
    let h = 2.0 * radius / n as f64;
    let node = |i: usize| -radius + h * i as f64;
    let vals: Vec<Vec<[f64; 2]>> = (0..=n).map(|i| (0..=n).map(|j| pb.eval(node(i), node(j))).collect()).collect();
    let mut zeros: Vec<[f64; 2]> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let c = [node(i) + 0.5 * h, node(j) + 0.5 * h];
            if c[0].hypot(c[1]) > radius + h {
                continue;
            }
            let corners = [vals[i][j], vals[i + 1][j], vals[i][j + 1], vals[i + 1][j + 1]];
            let changes = |k: usize| {
                let lo = corners.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            let bc = pb.eval(c[0], c[1]);
            let jc = pb.jacobian(c[0], c[1]);
            let jn = jc.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
            let near = bc[0].hypot(bc[1]) <= 2.0 * h * jn;
            if !(changes(0) && changes(1)) && !near {
                continue;
            }
            let Some(z) = newton(pb, c) else { continue };
            if z[0].hypot(z[1]) > radius {
                continue;
            }
            if zeros.iter().any(|w| (w[0] - z[0]).hypot(w[1] - z[1]) < 1e-7) {
                continue;
            }
            zeros.push(z);
        }
    }
    let mut sings = Vec::new();
    for (a, z) in zeros.iter().enumerate() {
        for w in &zeros[a + 1..] {
            let d = (w[0] - z[0]).hypot(w[1] - z[1]);
            if d < newton_tol {
                return Err(Error::Resolution(format!(
                    "zeros ({:.3e}, {:.3e}) and ({:.3e}, {:.3e}) are {d:.2e} apart",
                    z[0], z[1], w[0], w[1]
                )));
            }
        }
        let j = pb.jacobian(z[0], z[1]);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() <= DET_TOL {
            let m = Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
            let svd = m.svd(false, true);
            let vt = svd.v_t.unwrap();
            let k = if svd.singular_values[0] < svd.singular_values[1] { 0 } else { 1 };
            let dir = [vt[(k, 0)], vt[(k, 1)]];
            let probe = pb.eval(z[0] + 1e-3 * dir[0], z[1] + 1e-3 * dir[1]);
            if probe[0].hypot(probe[1]) < 1e-8 {
                return Err(Error::NotIsolated(z[0], z[1]));
            }
            return Err(Error::Degenerate(z[0], z[1]));
        }
        let div = j[1][0] - j[0][1];
        let s = match sign_datum {
            Some(f) => f(z[0], z[1]),
            None => div,
        };
        sings.push(Singularity {
            location: *z,
            kind: if det > 0.0 { SingularityKind::Elliptic } else { SingularityKind::Hyperbolic },
            sign: if s > 0.0 { 1 } else { -1 },
            det,
            divergence: div,
        });
    }
    Ok(SingularityReport::from_singularities(sings, 1))
}

/// Positivity of the exterior derivative of a pulled-back form at sample points.
pub fn page_positivity_check(pb: &PulledBack, pts: &[(f64, f64)], tol: &Tolerances) -> CheckReport {
    let mut rep = CheckReport::new("page_d_alpha_positive");
    for &(u, v) in pts {
        let g = pb.curl(u, v);
        let d = if g <= tol.rank { vec![format!("d alpha = {g:.3e} on the page")] } else { vec![] };
        rep.record(&[u, v], g, d);
    }
    rep
}

/// Twisting of the boundary field along the boundary loop against the relative
/// Euler number of the singularity report.
pub fn boundary_winding_vs_index(
    x_boundary: &VectorField,
    frame: (&VectorField, &VectorField),
    boundary: &Loop,
    report: &SingularityReport,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let tw = twisting_number(x_boundary, frame, boundary, crate::invariants::DEFAULT_SAMPLES, tol.residual)?;
    Ok(CheckReport::symbolic(
        "boundary_winding_vs_index",
        tw.value == report.relative_euler,
        format!("boundary twisting {} differs from relative Euler number {}", tw.value, report.relative_euler),
    )
    .note(format!("boundary twisting {} (residual {:.2e}), relative Euler number {}", tw.value, tw.residual, report.relative_euler)))
}

/// Unit direction of the kernel of `pb` at `(u, v)`.
pub fn kernel_direction(pb: &PulledBack, u: f64, v: f64) -> Option<[f64; 2]> {
    let b = pb.eval(u, v);
    let n = b[0].hypot(b[1]);
    (n > 1e-12).then(|| [b[1] / n, -b[0] / n])
}

struct Trace {
    end: [f64; 2],
    reached: bool,
    length: f64,
}

/// Follows the kernel line field from `start` until the crossing parameter
/// reaches `target`, with step-doubling error control.
fn trace_leaf(pb: &PulledBack, start: [f64; 2], cross: usize, target: f64, max_len: f64) -> Trace {
    let forward = if target > start[cross] { 1.0 } else { -1.0 };
    let mut prev = match kernel_direction(pb, start[0], start[1]) {
        Some(d) => d,
        None => return Trace { end: start, reached: false, length: 0.0 },
    };
    if prev[cross] * forward < 0.0 {
        prev = [-prev[0], -prev[1]];
    }
    let dir = |p: [f64; 2], r: [f64; 2]| -> Option<[f64; 2]> {
        let d = kernel_direction(pb, p[0], p[1])?;
        Some(if d[0] * r[0] + d[1] * r[1] < 0.0 { [-d[0], -d[1]] } else { d })
    };
    let rk4 = |p: [f64; 2], r: [f64; 2], h: f64| -> Option<([f64; 2], [f64; 2])> {
        let k1 = dir(p, r)?;
        let k2 = dir([p[0] + 0.5 * h * k1[0], p[1] + 0.5 * h * k1[1]], k1)?;
        let k3 = dir([p[0] + 0.5 * h * k2[0], p[1] + 0.5 * h * k2[1]], k2)?;
        let k4 = dir([p[0] + h * k3[0], p[1] + h * k3[1]], k3)?;
        let q = [
            p[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            p[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        Some((q, k4))
    };
    let mut p = start;
    let mut h = 1e-3;
    let mut len = 0.0;
    while len < max_len {
        let Some((full, _)) = rk4(p, prev, h) else { break };
        let Some((half, r)) = rk4(p, prev, 0.5 * h) else { break };
        let Some((two, r2)) = rk4(half, r, 0.5 * h) else { break };
        let err = (full[0] - two[0]).hypot(full[1] - two[1]);
        if err > 1e-9 && h > 1e-6 {
            h *= 0.5;
            continue;
        }
        let q = two;
        if (q[cross] - target) * forward >= 0.0 {
            // land on the boundary by linear interpolation
            let t = (target - p[cross]) / (q[cross] - p[cross]);
            let mut end = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            end[cross] = target;
            return Trace { end, reached: true, length: len + t * h };
        }
        p = q;
        prev = r2;
        len += h;
        if err < 1e-11 {
            h = (h * 2.0).min(1e-2);
        }
    }
    Trace { end: p, reached: false, length: len }
}

/// Annulus conditions: (i) declared, (ii) nonsingular pullback whose leaves run
/// from one boundary circle to the other, (iii) linear foliations on the tori.
pub fn annulus_conditions_check(
    annulus: &SurfaceEmbedding,
    xi: &AmbientForm,
    tori: &[(SurfaceEmbedding, AmbientForm)],
    noncontractible: bool,
    n_leaves: usize,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let ParamDomain::Annulus { circle, lo, hi } = annulus.domain else {
        return Err(Error::Precondition(format!("`{}` is not an annulus", annulus.label)));
    };
    let cross = 1 - circle;
    let pb = characteristic_foliation(xi, annulus)?;
    let mut rep = CheckReport::new("annulus_conditions");
    if !noncontractible {
        rep.fail("(i) boundary circles not declared non-contractible".into());
    }
    // (ii) nonsingularity on a grid
    let m = 24;
    for a in 0..m {
        for b in 0..=m {
            let mut p = [0.0; 2];
            p[circle] = TAU * a as f64 / m as f64;
            p[cross] = lo + (hi - lo) * b as f64 / m as f64;
            let v = pb.eval(p[0], p[1]);
            let g = v[0].hypot(v[1]);
            let d = if g <= tol.rank { vec!["(ii) singular pullback".to_string()] } else { vec![] };
            rep.record(&p, g, d);
        }
    }
    let max_len = 50.0 * (hi - lo);
    for a in 0..n_leaves {
        let mut start = [0.0; 2];
        start[circle] = TAU * (a as f64 + 0.5) / n_leaves as f64;
        start[cross] = lo;
        let fwd = trace_leaf(&pb, start, cross, hi, max_len);
        if !fwd.reached {
            rep.failures.push(crate::verify::Failure {
                point: start.to_vec(),
                diagnostic: format!("(ii) leaf does not reach the far boundary within length {:.3}", fwd.length),
            });
            continue;
        }
        let back = trace_leaf(&pb, fwd.end, cross, lo, max_len);
        let dc = (back.end[circle] - start[circle] + TAU / 2.0).rem_euclid(TAU) - TAU / 2.0;
        if !back.reached || dc.abs() > 1e-4 {
            rep.failures.push(crate::verify::Failure {
                point: start.to_vec(),
                diagnostic: format!("(ii) backward trace misses the start by {:.3e}", dc.abs()),
            });
        }
    }
    for (t, form) in tori {
        let pts: Vec<(f64, f64)> = (0..16).map(|i| (0.37 * i as f64, 1.13 * i as f64 + 0.2)).collect();
        match torus_slope(form, t, &pts, tol) {
            Ok(s) if s.linear => rep.notes.push(format!("(iii) torus `{}` linear, slope {}", t.label, s.slope)),
            Ok(_) => rep.fail(format!("(iii) torus `{}` has non-linear characteristic foliation", t.label)),
            Err(e) => rep.fail(format!("(iii) torus `{}`: {e}", t.label)),
        }
    }
    rep.pass = rep.failures.is_empty();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn binding_polar() -> Arc<Chart> {
        Arc::new(
            Chart::new(
                "binding",
                vec![
                    Coordinate::angular("x"),
                    Coordinate::angular("y"),
                    Coordinate::radial("r", 0.0, 1.0),
                    Coordinate::angular("phi"),
                ],
            )
            .unwrap(),
        )
    }

    fn torus_at(c: &Arc<Chart>, r0: f64, phi0: f64) -> SurfaceEmbedding {
        SurfaceEmbedding::affine(
            "torus",
            ParamDomain::Torus,
            c,
            vec![AffineImage::var(0), AffineImage::var(1), AffineImage::constant(r0), AffineImage::constant(phi0)],
        )
        .unwrap()
    }

    #[test]
    fn binding_torus_slope() {
        let c = binding_polar();
        let eb = OneForm::parse(&c, &["1", "-r^2", "0", "r^2"]).unwrap();
        let pts: Vec<(f64, f64)> = (0..8).map(|i| (i as f64, 2.0 * i as f64)).collect();
        for r0 in [0.3, 0.5, 0.8, 1.0] {
            let t = torus_slope(&AmbientForm::Symbolic(eb.clone()), &torus_at(&c, r0, 0.4), &pts, &Tolerances::default()).unwrap();
            assert!(t.linear);
            assert!((t.slope * r0 * r0 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_with_line_of_zeros() {
        let c = Arc::new(Chart::builder("p").linear("x", -1.0, 1.0).linear("y", -1.0, 1.0).build().unwrap());
        let f = OneForm::new(&c, vec![parse_expr("-y", &c).unwrap(), crate::expr::Expr::zero()]).unwrap();
        let r = find_and_classify(&PulledBack::Exact(f), 1.0, 20, 1e-4, None);
        assert!(matches!(r, Err(Error::NotIsolated(..))));
    }

    #[test]
    fn radial_and_saddle_zeros() {
        let c = Arc::new(Chart::builder("p").linear("x", -1.0, 1.0).linear("y", -1.0, 1.0).build().unwrap());
        // beta = x dy - y dx: dual field (x, y), a source
        let f = OneForm::parse(&c, &["-y", "x"]).unwrap();
        let r = find_and_classify(&PulledBack::Exact(f), 1.0, 21, 1e-4, None).unwrap();
        assert_eq!((r.e_plus, r.h_minus, r.relative_euler), (1, 0, 1));
        // beta = -y dx - x dy: dual field (-x, y), a saddle with negative divergence zero
        let f = OneForm::parse(&c, &["-y", "-x"]).unwrap();
        let r = find_and_classify(&PulledBack::Exact(f), 1.0, 21, 1e-4, Some(&|_, _| -1.0)).unwrap();
        assert_eq!((r.h_minus, r.euler_identity), (1, false));
    }
}
