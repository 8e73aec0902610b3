//! Model pieces, the catalog, and the collar/binding construction.

mod catalog;
mod construct;

pub use catalog::{model_catalog, model_names, Extra, Gluing, OpenBookModel};
pub use construct::{
    assemble, binding_probe_segment, build_binding_engel, build_collar_engel, collar_invariants, collar_probe_segment, gluing_check, xi_boundary_check,
    looseness_probe, Invariants, PipelineReport,
};

use crate::chart::{Chart, Point, SampleMode};
use crate::error::{Error, Result};
use crate::expr::{AffineImage, Expr};
use crate::fields::{lie_bracket, rank_at, Distribution, OneForm, VectorField};
use crate::foliation::{torus_slope, AmbientForm, SurfaceEmbedding};
use crate::verify::{self, CheckReport, Tolerances};
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Collar,
    Binding,
    PageInterior,
    Whole,
}

#[derive(Debug, Clone)]
pub enum Structure {
    Engel(Distribution),
    /// Even contact structure given by a defining form.
    EvenForm(OneForm),
    /// Contact structure on a 3-chart.
    Contact(OneForm),
}

/// The binding `K` seen in a chart where it is a coordinate subtorus.
#[derive(Debug, Clone)]
pub struct BindingLocus {
    pub chart: Arc<Chart>,
    /// Coordinates held fixed on `K`.
    pub normal: Vec<(usize, f64)>,
    /// Coordinates along `K`.
    pub tangent: Vec<usize>,
    pub even_form: OneForm,
    pub e_span: Vec<VectorField>,
    pub w: VectorField,
}

/// `X = g1 e_r + g2 S` near a boundary torus, for gluing and twist counts.
#[derive(Debug, Clone)]
pub struct BoundaryFrame {
    pub x: VectorField,
    pub e_r: VectorField,
    pub s: VectorField,
    pub g: [Expr; 2],
    pub r_index: usize,
    /// Radius of the interface in this piece's chart.
    pub r_boundary: f64,
}

#[derive(Clone)]
pub struct TorusDatum {
    pub form: AmbientForm,
    pub torus: SurfaceEmbedding,
    /// Expected slope, if the model predicts one.
    pub expected_slope: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
}

#[derive(Clone)]
pub struct ModelPiece {
    pub name: String,
    pub chart: Arc<Chart>,
    pub role: Role,
    pub structure: Structure,
    /// Defining form of the even contact structure (`[D, D]` for Engel pieces).
    pub even_form: Option<OneForm>,
    pub even_span: Option<Vec<VectorField>>,
    pub w: Option<VectorField>,
    pub fibration: Option<OneForm>,
    pub binding: Option<BindingLocus>,
    /// Contact form of the page on a 3-chart.
    pub page: Option<OneForm>,
    /// Contact vector field `L` with `E = xi (+) R(d_phi + L)`.
    pub contact_field: Option<VectorField>,
    pub tori: Vec<TorusDatum>,
    pub boundary: Option<BoundaryFrame>,
    pub params: Params,
    pub expected_pass: bool,
    pub notes: Vec<String>,
}

impl ModelPiece {
    pub fn new(name: &str, chart: &Arc<Chart>, role: Role, structure: Structure) -> Self {
        ModelPiece {
            name: name.into(),
            chart: chart.clone(),
            role,
            structure,
            even_form: None,
            even_span: None,
            w: None,
            fibration: None,
            binding: None,
            page: None,
            contact_field: None,
            tori: vec![],
            boundary: None,
            params: Params::default(),
            expected_pass: true,
            notes: vec![],
        }
    }

    pub fn engel_distribution(&self) -> Option<&Distribution> {
        match &self.structure {
            Structure::Engel(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { samples: 1000, seed: 7, tol: Tolerances::default() }
    }
}

impl SampleConfig {
    pub fn points(&self, chart: &Chart) -> Vec<Point> {
        chart.sample_points(self.samples, SampleMode::Random, self.seed)
    }
}

fn prefixed(piece: &str, mut r: CheckReport) -> CheckReport {
    r.name = format!("{piece}/{}", r.name);
    r
}

/// Points on `K`: a grid in the tangent coordinates, normal coordinates fixed.
fn binding_points(b: &BindingLocus, n: usize) -> Vec<Point> {
    let grid = b.chart.sample_points(n, SampleMode::Grid, 0);
    let mut out: Vec<Point> = Vec::new();
    for mut p in grid {
        for &(i, v) in &b.normal {
            p[i] = v;
        }
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// The adaptedness conditions that apply to the piece's declared data.
pub fn adaptedness_check(piece: &ModelPiece, cfg: &SampleConfig) -> Result<CheckReport> {
    let tol = &cfg.tol;
    let mut parts = Vec::new();
    let declared = piece.fibration.is_some() || piece.binding.is_some() || piece.page.is_some() || !piece.tori.is_empty();
    if !declared {
        return Err(Error::Precondition(format!("piece `{}` declares no adaptedness data", piece.name)));
    }
    if let Some(theta) = &piece.fibration {
        let w = piece.w.as_ref().ok_or_else(|| Error::Precondition(format!("piece `{}` declares no W", piece.name)))?;
        parts.push(verify::fibration_transversality_check(w, theta, &cfg.points(&piece.chart), tol)?);
    }
    if let Some(b) = &piece.binding {
        let mut flag = CheckReport::new("binding_tori");
        let tori_ok = b.tangent.len() == 2
            && b.tangent.iter().all(|&i| b.chart.coords[i].kind == crate::chart::CoordKind::Angular);
        flag.points_checked = 1;
        flag.min_gap = Some(1.0);
        if !tori_ok {
            flag.fail("binding locus is not a union of tori".into());
        }
        parts.push(flag);
        let kp = binding_points(b, 6);
        let mut tr = CheckReport::new("E_transverse_to_K");
        let tk: Vec<VectorField> = b.tangent.iter().map(|&i| VectorField::coordinate(&b.chart, i)).collect();
        for p in &kp {
            let mut vs: Vec<Vec<f64>> = b.e_span.iter().map(|v| v.eval(p)).collect();
            vs.extend(tk.iter().map(|v| v.eval(p)));
            let (r, g) = rank_at(&vs, tol.rank);
            let d = if r != 4 { vec![format!("rank E + TK = {r}")] } else { vec![] };
            tr.record(p, g, d);
        }
        parts.push(tr);
        // W restricted to K: tangent, with constant components
        let subs: Vec<(usize, AffineImage)> = b.normal.iter().map(|&(i, v)| (i, AffineImage::constant(v))).collect();
        let mut lin = CheckReport::new("W_linear_on_K");
        lin.points_checked = 1;
        let mut ok = true;
        for (i, c) in b.w.comps.iter().enumerate() {
            let rc = c.substitute_integer_affine(b.chart.dim(), &subs)?;
            let tangent = b.tangent.contains(&i);
            let good = if tangent { rc.as_constant().is_some() } else { rc.is_zero() };
            if !good {
                ok = false;
                lin.fail(format!(
                    "component {} of W on K is {}",
                    b.chart.coords[i].name,
                    rc.display_with(&b.chart.names())
                ));
            }
        }
        lin.min_gap = Some(if ok { 1.0 } else { 0.0 });
        parts.push(lin);
        // E is even contact across the core, not only on the polar part
        let core_pts = cfg.points(&b.chart);
        parts.push(prefixed("core", verify::even_contact_form(&b.even_form, &core_pts, tol)?));
        parts.push(prefixed("core", verify::isotropic_line_check(&b.w, &b.even_form, &b.e_span, &core_pts, tol)?));
    }
    if let Some(page) = &piece.page {
        parts.push(prefixed("page", verify::contact_structure_check(page, &cfg.points(&page.chart), tol)?));
    }
    for t in &piece.tori {
        let pts: Vec<(f64, f64)> = (0..12).map(|i| (0.53 * i as f64, 0.29 + 1.7 * i as f64)).collect();
        let s = torus_slope(&t.form, &t.torus, &pts, tol)?;
        let mut r = CheckReport::new(&format!("torus_linear[{}]", t.torus.label));
        r.points_checked = pts.len();
        r.min_gap = Some(s.coeffs[0].hypot(s.coeffs[1]));
        if !s.linear {
            r.fail("characteristic foliation not linear".into());
        }
        if let Some(e) = t.expected_slope {
            if (s.slope - e).abs() > tol.slope * e.abs().max(1.0) {
                r.fail(format!("slope {} differs from {}", s.slope, e));
            }
        }
        parts.push(r.note(format!("slope {}", s.slope)));
    }
    Ok(CheckReport::combine("adaptedness", parts))
}

/// All structure checks of one piece.
pub fn verify_piece(piece: &ModelPiece, cfg: &SampleConfig) -> Result<Vec<CheckReport>> {
    let tol = &cfg.tol;
    let pts = cfg.points(&piece.chart);
    let mut out = Vec::new();
    match &piece.structure {
        Structure::Engel(d) => {
            out.push(verify::engel_check(d, &pts, tol)?);
            let b = lie_bracket(&d.spanning[0], &d.spanning[1])?;
            let span = vec![d.spanning[0].clone(), d.spanning[1].clone(), b];
            out.push(verify::even_contact_span(&Distribution::new(span.clone(), 3)?, &pts, tol)?);
            if let (Some(w), Some(f)) = (&piece.w, &piece.even_form) {
                out.push(verify::isotropic_line_check(w, f, &span, &pts, tol)?);
            }
        }
        Structure::EvenForm(f) => {
            out.push(verify::even_contact_form(f, &pts, tol)?);
            if let Some(span) = &piece.even_span {
                out.push(verify::even_contact_span(&Distribution::new(span.clone(), 3)?, &pts, tol)?);
                if let Some(w) = &piece.w {
                    out.push(verify::isotropic_line_check(w, f, span, &pts, tol)?);
                }
            }
        }
        Structure::Contact(a) => {
            out.push(verify::contact_structure_check(a, &pts, tol)?);
            if let Some(l) = &piece.contact_field {
                out.push(verify::contact_vector_field_check(l, a, &pts, tol)?);
            }
        }
    }
    let declared = piece.fibration.is_some() || piece.binding.is_some() || piece.page.is_some() || !piece.tori.is_empty();
    if piece.role != Role::Whole && declared {
        out.push(adaptedness_check(piece, cfg)?);
    }
    Ok(out.into_iter().map(|r| prefixed(&piece.name, r)).collect())
}
