use super::catalog::{binding_locus, binding_page, binding_tori, collar_tori};
use super::{verify_piece, BoundaryFrame, ModelPiece, Params, Role, SampleConfig, Structure};
use crate::chart::{Chart, Coordinate, SampleMode};
use crate::error::{Error, Result};
use crate::expr::{AffineImage, Expr};
use crate::fields::{rank_at, AffineMap, Distribution, OneForm, VectorField};
use crate::foliation::{boundary_winding_vs_index, construct_xi_prime, torus_slope, SingularityReport, XiPrimeConstruction};
use crate::invariants::{delta_homomorphism, rotation_number, twisting_number, Loop, DEFAULT_SAMPLES};
use crate::verify::{engel_check, CheckReport, Tolerances};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_4;
use std::sync::{Arc, Mutex, OnceLock};

/// Radius at which collar invariants are sampled.
const COLLAR_PROBE_R: f64 = 0.1;

fn check_k(k: i64) -> Result<()> {
    if k < 1 || k % 2 == 0 {
        return Err(Error::Precondition("k must be odd and positive".into()));
    }
    Ok(())
}

fn collar_chart() -> Result<Arc<Chart>> {
    Ok(Arc::new(Chart::new(
        "collar",
        vec![
            Coordinate::angular("x"),
            Coordinate::angular("y"),
            Coordinate::radial("r", 0.0, 0.2).trig_capable().closed(),
            Coordinate::angular("phi"),
        ],
    )?))
}

struct CollarFields {
    chart: Arc<Chart>,
    e_r: VectorField,
    s: VectorField,
    c1: VectorField,
    c2: VectorField,
    x: VectorField,
    w: VectorField,
}

fn rotate(e1: &VectorField, e2: &VectorField, freq: &[(usize, i64)]) -> Result<(VectorField, VectorField)> {
    let (c, s) = (Expr::cos(freq, 0.0), Expr::sin(freq, 0.0));
    Ok((e1.times(&c).add(&e2.times(&s))?, e2.times(&c).sub(&e1.times(&s))?))
}

fn collar_fields(lambda: i64, k: i64, a: f64) -> Result<CollarFields> {
    let chart = collar_chart()?;
    let e_r = VectorField::coordinate(&chart, 2);
    let s = VectorField::new(&chart, vec![Expr::sin(&[(2, 1)], a), Expr::cos(&[(2, 1)], a), Expr::zero(), Expr::zero()])?;
    let (c1, c2) = rotate(&e_r, &s, &[(1, lambda)])?;
    let (x, _) = rotate(&c1, &c2, &[(3, k)])?;
    let w = VectorField::coordinate(&chart, 3).add(&VectorField::coordinate(&chart, 1))?;
    Ok(CollarFields { chart, e_r, s, c1, c2, x, w })
}

/// Collar piece `T^2 x [0, 2eps) x S^1` with `D = span{d_phi + d_y, X_k}`.
pub fn build_collar_engel(lambda: i64, k: i64, a: f64) -> Result<ModelPiece> {
    check_k(k)?;
    if a.sin() * a.cos() <= 0.0 {
        return Err(Error::Precondition(format!("collar slope cot(a) = {:.6} must be positive", a.cos() / a.sin())));
    }
    let f = collar_fields(lambda, k, a)?;
    let c = &f.chart;
    let (sa, ca) = (Expr::sin(&[(2, 1)], a), Expr::cos(&[(2, 1)], a));
    let g1 = f.x.comps[2].clone();
    let g2 = f.x.comps[0].mul(&sa).add(&f.x.comps[1].mul(&ca));
    if !f.e_r.times(&g1).add(&f.s.times(&g2))?.canonical_equal(&f.x) {
        return Err(Error::Construction("X_k does not lie in span{d_r, S}".into()));
    }
    let d = Distribution::new(vec![f.w.clone(), f.x.clone()], 2)?;
    let mut p = ModelPiece::new("collar", c, Role::Collar, Structure::Engel(d));
    p.even_form = Some(OneForm::new(c, vec![ca.clone(), sa.neg(), Expr::zero(), sa.clone()])?);
    p.even_span = Some(vec![f.w.clone(), f.e_r.clone(), f.s.clone()]);
    p.w = Some(f.w.clone());
    p.fibration = Some(OneForm::coordinate(c, 3));
    let page_chart = Arc::new(Chart::new("collar-page", c.coords[..3].to_vec())?);
    let page = OneForm::new(
        &page_chart,
        vec![Expr::cos(&[(2, 1)], a), Expr::sin(&[(2, 1)], a).neg(), Expr::zero()],
    )?;
    p.tori = collar_tori(&page_chart, &page, a)?;
    p.contact_field = Some(VectorField::coordinate(&page_chart, 1));
    p.page = Some(page);
    p.boundary = Some(BoundaryFrame { x: f.x, e_r: f.e_r, s: f.s, g: [g1, g2], r_index: 2, r_boundary: 0.0 });
    p.params = Params { lambda: Some(lambda), k: Some(k), a: Some(a), ..Params::default() };
    Ok(p)
}

fn xi_prime_cached(k: i64) -> Result<Arc<XiPrimeConstruction>> {
    static CACHE: OnceLock<Mutex<HashMap<i64, Arc<XiPrimeConstruction>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(x) = cache.lock().expect("cache poisoned").get(&k) {
        return Ok(x.clone());
    }
    let x = Arc::new(construct_xi_prime(k)?);
    cache.lock().expect("cache poisoned").insert(k, x.clone());
    Ok(x)
}

fn shear() -> AffineMap {
    let mut m = AffineMap::identity(4);
    m.matrix[3][1] = 1;
    m
}

/// Near-boundary part `r in [r0/2, r0]` of the binding piece: `span{d_y,
/// cos(ly) C1' + sin(ly) C2'}` pushed forward by `(x, y, r, phi) -> (x, y, r, phi + y)`.
pub fn build_binding_engel(l: i64, k: i64, r0: f64) -> Result<ModelPiece> {
    if l < 1 {
        return Err(Error::Precondition(format!("l must be a positive integer, got {l}")));
    }
    check_k(k)?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Precondition(format!("r0 must be positive, got {r0}")));
    }
    let xi = xi_prime_cached(k)?;
    let c = Arc::new(Chart::new(
        "binding-polar",
        vec![
            Coordinate::angular("x"),
            Coordinate::angular("y"),
            Coordinate::radial("r", 0.5 * r0, r0).closed(),
            Coordinate::angular("phi"),
        ],
    )?);
    let r2 = Expr::monomial(1.0, &[(2, 2)]);
    let e_r = VectorField::coordinate(&c, 2);
    let s_pre = VectorField::new(&c, vec![r2.clone(), Expr::constant(1.0), Expr::zero(), Expr::constant(-1.0)])?;
    let (c1p, c2p) = rotate(&e_r, &s_pre, &[(3, k)])?;
    let (x_pre, _) = rotate(&c1p, &c2p, &[(1, l)])?;
    let f = shear();
    let x = f.pushforward(&x_pre)?;
    let w = f.pushforward(&VectorField::coordinate(&c, 1))?;
    let s = VectorField::new(&c, vec![r2.clone(), Expr::constant(1.0), Expr::zero(), Expr::zero()])?;
    let g1 = x.comps[2].clone();
    let g2 = x.comps[1].clone();
    if !e_r.times(&g1).add(&s.times(&g2))?.canonical_equal(&x) {
        return Err(Error::Construction("X' does not lie in span{d_r, S}".into()));
    }
    let d = Distribution::new(vec![w.clone(), x.clone()], 2)?;
    let mut p = ModelPiece::new("binding", &c, Role::Binding, Structure::Engel(d));
    p.even_form = Some(OneForm::new(&c, vec![Expr::constant(1.0), r2.neg(), Expr::zero(), r2.clone()])?);
    p.even_span = Some(vec![e_r.clone(), w.clone(), s.clone()]);
    p.w = Some(w);
    p.fibration = Some(OneForm::coordinate(&c, 3));
    p.binding = Some(binding_locus()?);
    let (page_chart, page) = binding_page(0.5 * r0, r0)?;
    p.tori = binding_tori(&page_chart, &page, &[r0])?;
    p.page = Some(page);
    p.boundary = Some(BoundaryFrame { x, e_r, s, g: [g1, g2], r_index: 2, r_boundary: r0 });
    p.params = Params { l: Some(l), k: Some(k), r0: Some(r0), ..Params::default() };
    p.notes.push(format!("interior extension: xi' for k = {k}, parameter set {}", xi.attempt));
    if !(xi.contact.pass && xi.normal_form.pass && xi.report.euler_identity) {
        return Err(Error::Construction(format!("interior extension for k = {k} failed verification")));
    }
    Ok(p)
}

fn restrict(e: &Expr, fr: &BoundaryFrame) -> Result<Expr> {
    // interface chart (x, y, phi)
    let images = vec![AffineImage::var(0), AffineImage::var(1), AffineImage::constant(fr.r_boundary), AffineImage::var(2)];
    e.compose_affine(&images)
}

fn torus_slope_at(piece: &ModelPiece, r: f64, tol: &Tolerances) -> Result<f64> {
    let t = piece
        .tori
        .iter()
        .find(|t| t.torus.point(0.0, 0.0)[2] == r)
        .ok_or_else(|| Error::Precondition(format!("piece `{}` declares no torus at r = {r}", piece.name)))?;
    let pts: Vec<(f64, f64)> = (0..8).map(|i| (0.7 * i as f64, 0.3 + 1.1 * i as f64)).collect();
    Ok(torus_slope(&t.form, &t.torus, &pts, tol)?.slope)
}

/// Smooth matching of a collar piece and a binding piece across `T^3`.
pub fn gluing_check(collar: &ModelPiece, binding: &ModelPiece, tol: &Tolerances) -> Result<CheckReport> {
    let (Some(bc), Some(bb)) = (&collar.boundary, &binding.boundary) else {
        return Err(Error::Precondition("missing overlap declaration".into()));
    };
    let names = vec!["x".to_string(), "y".into(), "phi".into()];
    let mut a = CheckReport::new("boundary_X_match");
    a.points_checked = 1;
    for i in 0..2 {
        let (gc, gb) = (restrict(&bc.g[i], bc)?, restrict(&bb.g[i], bb)?);
        if !gc.canonical_equal(&gb) {
            a.fail(format!("g{}: collar - binding = {}", i + 1, gc.sub(&gb).display_with(&names)));
        }
    }
    a.min_gap = Some(if a.pass { 1.0 } else { 0.0 });
    let (wc, wb) = match (&collar.w, &binding.w) {
        (Some(wc), Some(wb)) => (wc, wb),
        _ => return Err(Error::Precondition("missing overlap declaration: W".into())),
    };
    let mut b = CheckReport::new("W_match");
    b.points_checked = 1;
    for i in 0..4 {
        let (x, y) = (restrict(&wc.comps[i], bc)?, restrict(&wb.comps[i], bb)?);
        if !x.canonical_equal(&y) {
            b.fail(format!("component {i}: collar - binding = {}", x.sub(&y).display_with(&names)));
        }
    }
    b.min_gap = Some(if b.pass { 1.0 } else { 0.0 });
    let sc = torus_slope_at(collar, bc.r_boundary, tol)?;
    let sb = torus_slope_at(binding, bb.r_boundary, tol)?;
    let diff = (sc - sb).abs();
    let c = CheckReport::symbolic("slope_match", diff <= tol.slope, format!("collar slope {sc} vs binding slope {sb}"))
        .note(format!("slopes {sc} and {sb}"));
    Ok(CheckReport::combine("gluing", vec![a, b, c]))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariants {
    pub tw_gamma_x: i64,
    pub tw_gamma_y: i64,
    pub tw_gamma_phi: i64,
    pub rotation_k: i64,
    pub delta: BTreeMap<String, i64>,
    pub boundary_twist: i64,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub lambda: i64,
    pub k: i64,
    pub l: i64,
    pub a: f64,
    pub r0: f64,
    pub checks: Vec<CheckReport>,
    pub invariants: Invariants,
    pub singularities: SingularityReport,
    pub arrangement: Vec<String>,
    pub overall_pass: bool,
}

pub fn xi_boundary_check(k: i64, report: &SingularityReport, tol: &Tolerances) -> Result<(CheckReport, i64)> {
    // collar of the disk page of xi', where xi' = ker(dx + r^2 dphi)
    let c = Arc::new(Chart::new(
        "xi-boundary",
        vec![Coordinate::angular("x"), Coordinate::radial("r", 0.9, 1.0).closed(), Coordinate::angular("phi")],
    )?);
    let e_r = VectorField::coordinate(&c, 1);
    let s = VectorField::new(&c, vec![Expr::monomial(1.0, &[(1, 2)]), Expr::zero(), Expr::constant(-1.0)])?;
    let (x, _) = rotate(&e_r, &s, &[(2, k)])?;
    let gamma = Loop::circle("boundary", vec![0.0, 1.0, 0.0], 2);
    let tw = twisting_number(&x, (&e_r, &s), &gamma, DEFAULT_SAMPLES, tol.residual)?.value;
    Ok((boundary_winding_vs_index(&x, (&e_r, &s), &gamma, report, tol)?, tw))
}

fn singularity_check(k: i64, r: &SingularityReport) -> CheckReport {
    let ok = r.e_plus == (k + 1) / 2 && r.h_minus == (k - 1) / 2 && r.e_minus == 0 && r.h_plus == 0;
    CheckReport::symbolic(
        "singularity_counts",
        ok && r.euler_identity && r.relative_euler == k,
        format!(
            "e+ = {}, e- = {}, h+ = {}, h- = {}, relative Euler number {}",
            r.e_plus, r.e_minus, r.h_plus, r.h_minus, r.relative_euler
        ),
    )
}

pub fn collar_invariants(lambda: i64, k: i64, a: f64, tol: &Tolerances) -> Result<(Invariants, CheckReport)> {
    let f = collar_fields(lambda, k, a)?;
    let base = vec![0.0, 0.0, COLLAR_PROBE_R, 0.0];
    let gx = Loop::circle("gamma_x", base.clone(), 0);
    let gy = Loop::circle("gamma_y", base.clone(), 1);
    let gphi = Loop::circle("gamma_phi", base, 3);
    let n = DEFAULT_SAMPLES;
    let tw = |v: &VectorField, fr: (&VectorField, &VectorField), g: &Loop| -> Result<i64> {
        Ok(twisting_number(v, fr, g, n, tol.residual)?.value)
    };
    let tw_x = tw(&f.c1, (&f.e_r, &f.s), &gx)?;
    let tw_y = tw(&f.c1, (&f.e_r, &f.s), &gy)?;
    let tw_phi = tw(&f.x, (&f.c1, &f.c2), &gphi)?;
    let edge = Loop::circle("x0 x S1", vec![0.0, 0.0, 0.0, 0.0], 3);
    let rot = rotation_number(&f.x, &f.s, (&f.e_r, &f.s), &edge, n, tol.residual)?.value;
    let d = Distribution::new(vec![f.w.clone(), f.x.clone()], 2)?;
    let page_base = vec![0.0, 0.0, COLLAR_PROBE_R, 0.0];
    let gens = [Loop::circle("gamma_x", page_base.clone(), 0), Loop::circle("gamma_y", page_base, 1)];
    let delta = delta_homomorphism(&d, &d, (&f.e_r, &f.s), &gens, n, tol.residual)?;
    let inv = Invariants { tw_gamma_x: tw_x, tw_gamma_y: tw_y, tw_gamma_phi: tw_phi, rotation_k: rot, delta, boundary_twist: 0 };
    let ok = tw_x == 0 && tw_y == lambda && tw_phi == k && rot == k && inv.delta.values().all(|&v| v == 0);
    let rep = CheckReport::symbolic(
        "invariants",
        ok,
        format!("tw(C1, gamma_x) = {tw_x}, tw(C1, gamma_y) = {tw_y}, tw(X_k, gamma_phi) = {tw_phi}, rotation = {rot}"),
    );
    Ok((inv, rep))
}

/// Collar and binding pieces for `(lambda, k)`, their interface, the interior
/// extension and the invariants. `l = k + lambda`; `r0` defaults to `cot(a)^(-1/2)`.
pub fn assemble(lambda: i64, k: i64, a: Option<f64>, r0: Option<f64>, cfg: &SampleConfig) -> Result<PipelineReport> {
    check_k(k)?;
    let l = k + lambda;
    if l < 1 {
        return Err(Error::Precondition(format!("l = {l} is not positive (l = k + lambda)")));
    }
    let a = a.unwrap_or(FRAC_PI_4);
    let r0 = r0.unwrap_or_else(|| a.tan().sqrt());
    let collar = build_collar_engel(lambda, k, a)?;
    let binding = build_binding_engel(l, k, r0)?;
    let tol = &cfg.tol;
    let (rc, rb) = std::thread::scope(|s| {
        let hc = s.spawn(|| verify_piece(&collar, cfg));
        let hb = s.spawn(|| verify_piece(&binding, cfg));
        (hc.join().expect("collar verification panicked"), hb.join().expect("binding verification panicked"))
    });
    let mut checks = rc?;
    checks.extend(rb?);
    checks.push(gluing_check(&collar, &binding, tol)?);
    let xi = xi_prime_cached(k)?;
    checks.push(prefix("xi_prime", xi.contact.clone()));
    checks.push(prefix("xi_prime", xi.normal_form.clone()));
    checks.push(prefix("xi_prime", singularity_check(k, &xi.report)));
    let (bw, boundary_twist) = xi_boundary_check(k, &xi.report, tol)?;
    checks.push(prefix("xi_prime", bw));
    let (mut invariants, inv_check) = collar_invariants(lambda, k, a, tol)?;
    invariants.boundary_twist = boundary_twist;
    checks.push(inv_check);
    let chain = boundary_twist == xi.report.relative_euler && boundary_twist == k;
    checks.push(CheckReport::symbolic(
        "twist_chain",
        chain,
        format!("boundary twisting {boundary_twist}, relative Euler number {}, k = {k}", xi.report.relative_euler),
    ));
    let overall_pass = checks.iter().all(|c| c.pass);
    Ok(PipelineReport {
        lambda,
        k,
        l,
        a,
        r0,
        checks,
        invariants,
        singularities: xi.report.clone(),
        arrangement: xi.form.arrangement(),
        overall_pass,
    })
}

fn prefix(p: &str, mut r: CheckReport) -> CheckReport {
    r.name = format!("{p}/{}", r.name);
    r
}

/// The collar `phi`-circle at radius `COLLAR_PROBE_R`.
pub fn collar_probe_segment() -> Loop {
    Loop::circle("phi-circle", vec![0.0, 0.0, COLLAR_PROBE_R, 0.0], 3)
}

/// The `y`-circle of the binding piece before the shear, i.e. the loop winding
/// once in `y` and once in `phi` in sheared coordinates.
pub fn binding_probe_segment(r0: f64) -> Loop {
    Loop::winding("y-circle", vec![0.0, 0.0, 0.75 * r0, 0.0], &[0, 1, 0, 1])
}

/// Rotations of `X` in the frame `(d_r, S)` per traversal of `segment`.
pub fn looseness_probe(piece: &ModelPiece, segment: &Loop, tol: &Tolerances) -> Result<i64> {
    let d = piece
        .engel_distribution()
        .ok_or_else(|| Error::Precondition(format!("piece `{}` is not an Engel piece", piece.name)))?;
    let pts = piece.chart.sample_points(64, SampleMode::Random, 11);
    if !engel_check(d, &pts, tol)?.pass {
        return Err(Error::Precondition(format!("piece `{}` fails the Engel check", piece.name)));
    }
    let fr = piece
        .boundary
        .as_ref()
        .ok_or_else(|| Error::Precondition(format!("piece `{}` declares no transverse frame", piece.name)))?;
    for i in 0..=32 {
        let t = i as f64 / 32.0;
        let (p, v) = (segment.at(t), segment.velocity(t));
        let ok = match &piece.fibration {
            Some(theta) => theta.eval(&p).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().abs() > tol.rank,
            None => rank_at(&[v.clone()], tol.rank).0 == 1,
        };
        if !ok {
            return Err(Error::Precondition(format!("segment not transverse to the pages at t = {t}")));
        }
    }
    Ok(twisting_number(&fr.x, (&fr.e_r, &fr.s), segment, DEFAULT_SAMPLES, tol.residual)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collar_boundary_formula() {
        let p = build_collar_engel(2, 3, FRAC_PI_4).unwrap();
        let g = &p.boundary.as_ref().unwrap().g;
        assert!(g[0].canonical_equal(&Expr::cos(&[(3, 3), (1, 2)], 0.0)));
        assert!(g[1].canonical_equal(&Expr::sin(&[(3, 3), (1, 2)], 0.0)));
        assert!(build_collar_engel(2, 2, FRAC_PI_4).is_err());
    }

    #[test]
    fn binding_boundary_formula() {
        let p = build_binding_engel(5, 3, 1.0).unwrap();
        let fr = p.boundary.as_ref().unwrap();
        assert!(fr.g[0].canonical_equal(&Expr::cos(&[(1, 2), (3, 3)], 0.0)));
        assert!(fr.g[1].canonical_equal(&Expr::sin(&[(1, 2), (3, 3)], 0.0)));
        let w = p.w.as_ref().unwrap();
        assert_eq!(w.eval(&[0.1, 0.2, 0.7, 0.3]), vec![0.0, 1.0, 0.0, 1.0]);
        assert!(build_binding_engel(0, 1, 1.0).is_err());
    }

    #[test]
    fn gluing_matches_only_when_l_minus_k_is_lambda() {
        let tol = Tolerances::default();
        let c = build_collar_engel(2, 3, FRAC_PI_4).unwrap();
        assert!(gluing_check(&c, &build_binding_engel(5, 3, 1.0).unwrap(), &tol).unwrap().pass);
        let bad = gluing_check(&c, &build_binding_engel(4, 3, 1.0).unwrap(), &tol).unwrap();
        assert!(!bad.pass);
        assert!(bad.failures.iter().any(|f| f.diagnostic.contains("g1")));
    }
}
