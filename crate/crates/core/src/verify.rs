//! Pointwise structure checks.
//!
//! Every check evaluates its symbolic data once, then sweeps all sample points
//! and records each violated sub-condition. Nothing aborts early.

use crate::chart::{Chart, Point};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{lie_bracket, rank_at, wedge_top_expr, Distribution, OneForm, VectorField};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Absolute threshold on singular values and on vanishing quantities.
    pub rank: f64,
    /// Coefficient threshold of the canonical form.
    pub zero: f64,
    pub slope: f64,
    /// Largest accepted distance of a winding from an integer.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank: 1e-9, zero: 1e-12, slope: 1e-9, residual: 0.25 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub point: Vec<f64>,
    pub diagnostic: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub points_checked: usize,
    /// Smallest certified margin over all points; `None` when nothing was sampled.
    pub min_gap: Option<f64>,
    pub failures: Vec<Failure>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: &str) -> Self {
        CheckReport { name: name.into(), pass: true, points_checked: 0, min_gap: None, failures: vec![], notes: vec![] }
    }

    /// Records one point: its margin and any violated sub-conditions.
    pub fn record(&mut self, p: &[f64], gap: f64, diags: Vec<String>) {
        self.points_checked += 1;
        self.min_gap = Some(self.min_gap.map_or(gap, |g| g.min(gap)));
        for d in diags {
            self.failures.push(Failure { point: p.to_vec(), diagnostic: d });
        }
        self.pass = self.failures.is_empty();
    }

    /// A purely symbolic condition (no sample points).
    pub fn symbolic(name: &str, ok: bool, diagnostic: String) -> Self {
        let mut r = CheckReport::new(name);
        r.points_checked = 1;
        r.min_gap = Some(if ok { 1.0 } else { 0.0 });
        if !ok {
            r.failures.push(Failure { point: vec![], diagnostic });
            r.pass = false;
        }
        r
    }

    pub fn fail(&mut self, diagnostic: String) {
        self.failures.push(Failure { point: vec![], diagnostic });
        self.pass = false;
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    /// Conjunction of several reports, failures prefixed by the part name.
    pub fn combine(name: &str, parts: Vec<CheckReport>) -> Self {
        let mut r = CheckReport::new(name);
        for p in parts {
            r.points_checked += p.points_checked;
            if let Some(g) = p.min_gap {
                r.min_gap = Some(r.min_gap.map_or(g, |h| h.min(g)));
            }
            for f in p.failures {
                r.failures.push(Failure { point: f.point, diagnostic: format!("{}: {}", p.name, f.diagnostic) });
            }
            r.notes.extend(p.notes);
        }
        r.pass = r.failures.is_empty();
        r
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn require_dim(chart: &Chart, n: usize) -> Result<()> {
    if chart.dim() != n {
        Err(Error::Dimension(chart.dim()))
    } else {
        Ok(())
    }
}

/// Even contact condition for `ker beta`: `beta ^ d beta` nonvanishing.
pub fn even_contact_form(beta: &OneForm, pts: &[Point], tol: &Tolerances) -> Result<CheckReport> {
    require_dim(&beta.chart, 4)?;
    let top = wedge_top_expr(beta, &beta.exterior_derivative())?;
    let mut rep = CheckReport::new("even_contact");
    for p in pts {
        let vals: Vec<f64> = top.iter().map(|e| e.eval(p)).collect();
        let g = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut d = vec![];
        if norm(&beta.eval(p)) <= tol.rank {
            d.push("defining form vanishes".to_string());
        } else if g <= tol.rank {
            d.push("beta ^ d beta vanishes".to_string());
        }
        rep.record(p, g, d);
    }
    Ok(rep)
}

/// Even contact condition for a rank-3 distribution given by spanning fields.
pub fn even_contact_span(e: &Distribution, pts: &[Point], tol: &Tolerances) -> Result<CheckReport> {
    require_dim(&e.chart, 4)?;
    if e.claimed_rank != 3 || e.spanning.len() != 3 {
        return Err(Error::WrongArity(format!(
            "even contact span needs 3 fields of claimed rank 3, got {} fields of rank {}",
            e.spanning.len(),
            e.claimed_rank
        )));
    }
    let s = &e.spanning;
    let brackets = [lie_bracket(&s[0], &s[1])?, lie_bracket(&s[0], &s[2])?, lie_bracket(&s[1], &s[2])?];
    let mut rep = CheckReport::new("even_contact_span");
    for p in pts {
        let base: Vec<Vec<f64>> = s.iter().map(|v| v.eval(p)).collect();
        let (r3, g3) = rank_at(&base, tol.rank);
        let mut all = base.clone();
        all.extend(brackets.iter().map(|b| b.eval(p)));
        let (r4, g4) = rank_at(&all, tol.rank);
        let mut d = vec![];
        if r3 != 3 {
            d.push(format!("rank E = {r3}, expected 3"));
        }
        if r4 != 4 {
            d.push(format!("rank E + [E,E] = {r4}, expected 4"));
        }
        rep.record(p, g3.min(g4), d);
    }
    Ok(rep)
}

/// `W` spans the kernel of `d beta` restricted to `E = ker beta`.
pub fn isotropic_line_check(
    w: &VectorField,
    beta: &OneForm,
    span: &[VectorField],
    pts: &[Point],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let bw = beta.apply(w)?;
    let db = beta.exterior_derivative();
    let pairings: Vec<Expr> = span.iter().map(|e| db.eval_pair(w, e)).collect::<Result<_>>()?;
    let mut rep = CheckReport::new("isotropic_line");
    for p in pts {
        let wn = norm(&w.eval(p));
        let mut d = vec![];
        if wn <= tol.rank {
            d.push("W vanishes".to_string());
        }
        if bw.eval(p).abs() > tol.rank {
            d.push("not in E".to_string());
        }
        if pairings.iter().any(|e| e.eval(p).abs() > tol.rank) {
            d.push("not isotropic".to_string());
        }
        rep.record(p, wn, d);
    }
    Ok(rep)
}

/// Engel condition via the growth vector (2, 3, 4).
pub fn engel_check(dist: &Distribution, pts: &[Point], tol: &Tolerances) -> Result<CheckReport> {
    if dist.claimed_rank != 2 || dist.spanning.len() != 2 {
        return Err(Error::WrongArity(format!(
            "Engel check needs 2 fields of claimed rank 2, got {} fields of rank {}",
            dist.spanning.len(),
            dist.claimed_rank
        )));
    }
    require_dim(&dist.chart, 4)?;
    let v1 = &dist.spanning[0];
    let v2 = &dist.spanning[1];
    let b = lie_bracket(v1, v2)?;
    let b1 = lie_bracket(v1, &b)?;
    let b2 = lie_bracket(v2, &b)?;
    let mut rep = CheckReport::new("engel");
    for p in pts {
        let mut vs = vec![v1.eval(p), v2.eval(p)];
        let (r2, g2) = rank_at(&vs, tol.rank);
        vs.push(b.eval(p));
        let (r3, g3) = rank_at(&vs, tol.rank);
        vs.push(b1.eval(p));
        vs.push(b2.eval(p));
        let (r4, g4) = rank_at(&vs, tol.rank);
        let mut d = vec![];
        if r2 != 2 {
            d.push(format!("rank D = {r2}, expected 2"));
        }
        if r3 != 3 {
            d.push(format!("rank [D,D] = {r3}, expected 3"));
        }
        if r4 != 4 {
            d.push(format!("rank [D,[D,D]] = {r4}, expected 4"));
        }
        rep.record(p, g2.min(g3).min(g4), d);
    }
    Ok(rep)
}

/// Symbolic `alpha ^ d alpha` coefficient on a 3-chart, in coordinate order.
pub fn contact_volume(alpha: &OneForm) -> Result<Expr> {
    require_dim(&alpha.chart, 3)?;
    Ok(wedge_top_expr(alpha, &alpha.exterior_derivative())?.remove(0))
}

/// Positive contact condition `alpha ^ d alpha > 0`.
pub fn contact_structure_check(alpha: &OneForm, pts: &[Point], tol: &Tolerances) -> Result<CheckReport> {
    let vol = contact_volume(alpha)?;
    let mut rep = CheckReport::new("contact_structure");
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        let v = vol.eval(p);
        lo = lo.min(v);
        hi = hi.max(v);
        let d = if v.abs() <= tol.rank {
            vec!["alpha ^ d alpha vanishes".to_string()]
        } else if v < 0.0 {
            vec![format!("alpha ^ d alpha = {v:.6e} is negative")]
        } else {
            vec![]
        };
        rep.record(p, v, d);
    }
    if !pts.is_empty() {
        rep.notes.push(format!("alpha ^ d alpha ranges over [{lo:.6e}, {hi:.6e}] in coordinate order"));
    }
    Ok(rep)
}

/// `L` is a contact vector field for `alpha`: `(L_L alpha) ^ alpha = 0`.
pub fn contact_vector_field_check(
    l: &VectorField,
    alpha: &OneForm,
    pts: &[Point],
    tol: &Tolerances,
) -> Result<CheckReport> {
    let vol = contact_volume(alpha)?;
    let lie = lie_derivative(l, alpha)?;
    let prod = lie.wedge(alpha)?;
    let comps: Vec<Expr> = (0..3).flat_map(|i| (i + 1..3).map(move |j| (i, j))).map(|(i, j)| prod.get(i, j)).collect();
    let mut rep = CheckReport::new("contact_vector_field");
    for p in pts {
        let v = vol.eval(p).abs();
        let m = comps.iter().fold(0.0f64, |a, c| a.max(c.eval(p).abs()));
        let mut d = vec![];
        if v <= tol.rank {
            d.push("alpha is not contact here".to_string());
        }
        if m > tol.rank {
            d.push(format!("(L_L alpha) ^ alpha = {m:.3e}, not proportional"));
        }
        rep.record(p, v, d);
    }
    Ok(rep)
}

/// Cartan formula `L_X alpha = d(alpha(X)) + i_X d alpha`.
pub fn lie_derivative(x: &VectorField, alpha: &OneForm) -> Result<OneForm> {
    let f = alpha.apply(x)?;
    OneForm::exact(&alpha.chart, &f).add(&alpha.exterior_derivative().contract(x)?)
}

/// `W` is transverse to the fibers of a closed form, with constant sign.
pub fn fibration_transversality_check(
    w: &VectorField,
    theta: &OneForm,
    pts: &[Point],
    tol: &Tolerances,
) -> Result<CheckReport> {
    if !theta.exterior_derivative().is_zero() {
        return Err(Error::Precondition("fibration form is not closed".into()));
    }
    let val = theta.apply(w)?;
    let mut rep = CheckReport::new("fibration_transversality");
    let mut sign = 0.0;
    for p in pts {
        let v = val.eval(p);
        let mut d = vec![];
        if v.abs() <= tol.rank {
            d.push("W tangent to the fibers".to_string());
        } else if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            d.push("coorientation flips".to_string());
        }
        rep.record(p, v.abs(), d);
    }
    Ok(rep)
}

/// Data of `xi (+) R(d_phi + L)` on the product of a 3-chart with a circle.
#[derive(Debug, Clone)]
pub struct ProductStructure {
    /// Contact form of `xi` on the 3-chart.
    pub alpha: OneForm,
    /// Two fields spanning `xi`.
    pub xi_span: [VectorField; 2],
    pub l: VectorField,
    /// 4-chart whose first three coordinates are the 3-chart, the last is `phi`.
    pub chart4: Arc<Chart>,
}

impl ProductStructure {
    /// `alpha - alpha(L) d phi`, whose kernel is the product structure.
    pub fn form(&self) -> Result<OneForm> {
        let lifted = self.alpha.lift(&self.chart4)?;
        let al = self.alpha.apply(&self.l)?;
        lifted.sub(&OneForm::coordinate(&self.chart4, 3).times(&al))
    }

    pub fn w(&self) -> Result<VectorField> {
        VectorField::coordinate(&self.chart4, 3).add(&self.l.lift(&self.chart4)?)
    }

    pub fn span(&self) -> Result<Vec<VectorField>> {
        Ok(vec![self.xi_span[0].lift(&self.chart4)?, self.xi_span[1].lift(&self.chart4)?, self.w()?])
    }
}

/// Even contact check of the product structure together with its isotropic line
/// `d_phi + L`. Only the combination distinguishes contact `L`: the span alone is
/// even contact for every `L`.
pub fn product_even_contact_check(ps: &ProductStructure, pts: &[Point], tol: &Tolerances) -> Result<CheckReport> {
    let span = ps.span()?;
    let e = Distribution::new(span.clone(), 3)?;
    let a = even_contact_span(&e, pts, tol)?;
    let b = isotropic_line_check(&ps.w()?, &ps.form()?, &span, pts, tol)?;
    Ok(CheckReport::combine("even_contact_product", vec![a, b]))
}

#[derive(Debug, Clone)]
pub enum Slice {
    EvenForm(OneForm),
    EvenSpan(Distribution),
    Product(ProductStructure),
    Engel(Distribution),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceKind {
    Even,
    Engel,
}

/// Runs the selected check on every slice of a one-parameter family.
pub fn family_slice_check(
    builder: &dyn Fn(f64) -> Result<Slice>,
    s_samples: &[f64],
    pts: &[Point],
    which: SliceKind,
    tol: &Tolerances,
) -> Result<CheckReport> {
    let mut parts = Vec::new();
    for &s in s_samples {
        let slice = builder(s)?;
        let mut r = match (&slice, which) {
            (Slice::EvenForm(b), SliceKind::Even) => even_contact_form(b, pts, tol)?,
            (Slice::EvenSpan(d), SliceKind::Even) => even_contact_span(d, pts, tol)?,
            (Slice::Product(ps), SliceKind::Even) => product_even_contact_check(ps, pts, tol)?,
            (Slice::Engel(d), SliceKind::Engel) => engel_check(d, pts, tol)?,
            _ => return Err(Error::Precondition("slice does not match the requested check".into())),
        };
        r.name = format!("s={s}");
        parts.push(r);
    }
    Ok(CheckReport::combine("family_slice", parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::SampleMode;

    fn r4() -> Arc<Chart> {
        Arc::new(
            Chart::builder("r4")
                .linear("x", -1.0, 1.0)
                .linear("y", -1.0, 1.0)
                .linear("z", -1.0, 1.0)
                .linear("w", -1.0, 1.0)
                .build()
                .unwrap(),
        )
    }

    fn r3() -> Arc<Chart> {
        Arc::new(Chart::builder("r3").linear("x", -1.0, 1.0).linear("y", -1.0, 1.0).linear("z", -1.0, 1.0).build().unwrap())
    }

    #[test]
    fn darboux_even_contact_and_isotropic() {
        let c = r4();
        let pts = c.sample_points(200, SampleMode::Random, 1);
        let t = Tolerances::default();
        let a = OneForm::parse(&c, &["-y", "0", "1", "0"]).unwrap();
        let r = even_contact_form(&a, &pts, &t).unwrap();
        assert!(r.pass && r.min_gap.unwrap() >= 1.0 - 1e-12);
        let span = vec![
            VectorField::parse(&c, &["1", "0", "y", "0"]).unwrap(),
            VectorField::parse(&c, &["0", "1", "0", "0"]).unwrap(),
            VectorField::parse(&c, &["0", "0", "0", "1"]).unwrap(),
        ];
        assert!(even_contact_span(&Distribution::new(span.clone(), 3).unwrap(), &pts, &t).unwrap().pass);
        assert!(isotropic_line_check(&VectorField::coordinate(&c, 3), &a, &span, &pts, &t).unwrap().pass);
        let bad = isotropic_line_check(&VectorField::coordinate(&c, 2), &a, &span, &pts, &t).unwrap();
        assert!(!bad.pass && bad.failures.iter().any(|f| f.diagnostic == "not in E"));
        let dz = OneForm::coordinate(&c, 2);
        let r = even_contact_form(&dz, &pts, &t).unwrap();
        assert_eq!(r.failures.len(), pts.len());
    }

    #[test]
    fn integrable_plane_is_not_engel() {
        let c = r4();
        let pts = c.sample_points(20, SampleMode::Random, 2);
        let d = Distribution::new(vec![VectorField::coordinate(&c, 0), VectorField::coordinate(&c, 1)], 2).unwrap();
        let r = engel_check(&d, &pts, &Tolerances::default()).unwrap();
        assert!(!r.pass);
        let bad = Distribution::new(vec![VectorField::coordinate(&c, 0)], 1).unwrap();
        assert!(matches!(engel_check(&bad, &pts, &Tolerances::default()), Err(Error::WrongArity(_))));
    }

    #[test]
    fn contact_vector_fields_by_cartan() {
        let c = r3();
        let pts = c.sample_points(100, SampleMode::Random, 3);
        let t = Tolerances::default();
        let a = OneForm::parse(&c, &["-y", "0", "1"]).unwrap();
        assert!(contact_structure_check(&a, &pts, &t).unwrap().pass);
        let reeb = VectorField::parse(&c, &["0", "0", "1"]).unwrap();
        assert!(lie_derivative(&reeb, &a).unwrap().is_zero());
        let dy = VectorField::parse(&c, &["0", "1", "0"]).unwrap();
        let ld = lie_derivative(&dy, &a).unwrap();
        assert!(ld.coeffs[0].canonical_equal(&Expr::constant(-1.0)));
        assert!(!contact_vector_field_check(&dy, &a, &pts, &t).unwrap().pass);
        let scal = VectorField::parse(&c, &["0", "y", "z"]).unwrap();
        let ld = lie_derivative(&scal, &a).unwrap();
        assert!(ld.sub(&a).unwrap().is_zero());
        assert!(contact_vector_field_check(&scal, &a, &pts, &t).unwrap().pass);
        assert!(!contact_structure_check(&OneForm::coordinate(&c, 2), &pts, &t).unwrap().pass);
    }

    #[test]
    fn transversality_sign_and_closedness() {
        let c = r4();
        let pts = c.sample_points(50, SampleMode::Random, 4);
        let t = Tolerances::default();
        let dw = OneForm::coordinate(&c, 3);
        let w = VectorField::parse(&c, &["0", "0", "0.1", "1"]).unwrap();
        assert!(fibration_transversality_check(&w, &dw, &pts, &t).unwrap().pass);
        let flip = VectorField::parse(&c, &["0", "0", "0", "x"]).unwrap();
        let r = fibration_transversality_check(&flip, &dw, &pts, &t).unwrap();
        assert!(r.failures.iter().any(|f| f.diagnostic == "coorientation flips"));
        let open = OneForm::parse(&c, &["0", "0", "0", "x"]).unwrap();
        assert!(fibration_transversality_check(&w, &open, &pts, &t).is_err());
    }
}
