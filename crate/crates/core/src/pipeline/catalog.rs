use super::{verify_piece, BindingLocus, ModelPiece, Params, Role, SampleConfig, Structure, TorusDatum};
use crate::chart::{Chart, Coordinate};
use crate::error::{Error, Result};
use crate::expr::{AffineImage, Expr};
use crate::fields::{AffineMap, Distribution, OneForm, VectorField};
use crate::foliation::{
    annulus_conditions_check, characteristic_foliation, page_positivity_check, AmbientForm, ParamDomain,
    SurfaceEmbedding,
};
use crate::verify::CheckReport;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::sync::Arc;

const NAMES: [&str; 9] = [
    "darboux_even",
    "engel_darboux_loose",
    "s3_openbook",
    "product_openbook",
    "prolongation_Eε",
    "engel_prolongation_Dk",
    "collar_xi",
    "binding_Eb",
    "stabilization_local",
];

pub fn model_names() -> &'static [&'static str] {
    &NAMES
}

#[derive(Debug, Clone)]
pub struct Gluing {
    pub a: String,
    pub b: String,
    pub map: Option<AffineMap>,
    pub region: String,
}

/// Checks that live outside a single piece's chart.
#[derive(Clone)]
pub enum Extra {
    PagePositivity { page: SurfaceEmbedding, form: AmbientForm },
    Annulus { annulus: SurfaceEmbedding, form: AmbientForm, tori: Vec<(SurfaceEmbedding, AmbientForm)> },
}

#[derive(Clone)]
pub struct OpenBookModel {
    pub name: String,
    pub description: String,
    pub pieces: Vec<ModelPiece>,
    pub gluings: Vec<Gluing>,
    pub binding: String,
    pub extras: Vec<Extra>,
    pub params: Params,
    pub expected_pass: bool,
}

impl OpenBookModel {
    fn single(name: &str, description: &str, piece: ModelPiece) -> Self {
        OpenBookModel {
            name: name.into(),
            description: description.into(),
            params: piece.params.clone(),
            expected_pass: piece.expected_pass,
            pieces: vec![piece],
            gluings: vec![],
            binding: "none".into(),
            extras: vec![],
        }
    }

    /// Every check of every piece, then the extras. Pieces run concurrently;
    /// the output order is fixed.
    pub fn verify(&self, cfg: &SampleConfig) -> Result<Vec<CheckReport>> {
        let results: Vec<Result<Vec<CheckReport>>> = std::thread::scope(|s| {
            let handles: Vec<_> = self.pieces.iter().map(|p| s.spawn(move || verify_piece(p, cfg))).collect();
            handles.into_iter().map(|h| h.join().expect("piece verification panicked")).collect()
        });
        let mut out = Vec::new();
        for r in results {
            out.extend(r?);
        }
        for g in self.gluings.iter().filter(|g| g.map.is_some()) {
            out.push(crate::model_file::gluing_map_check(self, g, cfg)?);
        }
        for e in &self.extras {
            out.push(run_extra(e, cfg)?);
        }
        Ok(out)
    }
}

fn run_extra(e: &Extra, cfg: &SampleConfig) -> Result<CheckReport> {
    match e {
        Extra::PagePositivity { page, form } => {
            let pb = characteristic_foliation(form, page)?;
            let ParamDomain::Annulus { lo, hi, .. } = page.domain else {
                return Err(Error::Precondition("page positivity needs an annulus parameter domain".into()));
            };
            let n = 20;
            let pts: Vec<(f64, f64)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (lo + (hi - lo) * (i as f64 + 0.5) / n as f64, TAU * j as f64 / n as f64)))
                .collect();
            let mut r = page_positivity_check(&pb, &pts, &cfg.tol);
            r.name = format!("{}/{}", page.label, r.name);
            Ok(r)
        }
        Extra::Annulus { annulus, form, tori } => {
            let mut r = annulus_conditions_check(annulus, form, tori, true, 8, &cfg.tol)?;
            r.name = format!("{}/{}", annulus.label, r.name);
            Ok(r)
        }
    }
}

fn chart(c: Result<Chart>) -> Result<Arc<Chart>> {
    c.map(Arc::new)
}

fn vf(c: &Arc<Chart>, comps: &[&str]) -> Result<VectorField> {
    VectorField::parse(c, comps)
}

fn form(c: &Arc<Chart>, comps: &[&str]) -> Result<OneForm> {
    OneForm::parse(c, comps)
}

fn invalid(msg: String) -> Error {
    Error::Precondition(msg)
}

/// Builds a catalog model. Unset parameters take the model defaults.
pub fn model_catalog(name: &str, params: &Params) -> Result<OpenBookModel> {
    match name {
        "darboux_even" => darboux_even(),
        "engel_darboux_loose" => engel_darboux_loose(params.n.unwrap_or(1), params.theta0.unwrap_or(0.0)),
        "s3_openbook" => s3_openbook(),
        "product_openbook" => product_openbook(),
        "prolongation_Eε" | "prolongation_Eeps" => prolongation_e_eps(params.eps.unwrap_or(0.1)),
        "engel_prolongation_Dk" => engel_prolongation_dk(params.k.unwrap_or(3), params.eps.unwrap_or(0.1)),
        "collar_xi" => collar_xi(params.a.unwrap_or(FRAC_PI_4)),
        "binding_Eb" => binding_eb(),
        "stabilization_local" => stabilization_local(),
        _ => Err(Error::UnknownModel(name.into())),
    }
}

fn darboux_even() -> Result<OpenBookModel> {
    let c = chart(
        Chart::builder("R4").linear("x", -1.0, 1.0).linear("y", -1.0, 1.0).linear("z", -1.0, 1.0).linear("w", -1.0, 1.0).build(),
    )?;
    let beta = form(&c, &["-y", "0", "1", "0"])?;
    let mut p = ModelPiece::new("R4", &c, Role::Whole, Structure::EvenForm(beta.clone()));
    p.even_form = Some(beta);
    p.even_span = Some(vec![vf(&c, &["1", "0", "y", "0"])?, vf(&c, &["0", "1", "0", "0"])?, vf(&c, &["0", "0", "0", "1"])?]);
    p.w = Some(VectorField::coordinate(&c, 3));
    Ok(OpenBookModel::single("darboux_even", "ker(dz - y dx) on R^4", p))
}

fn engel_darboux_loose(n: i64, theta0: f64) -> Result<OpenBookModel> {
    if n < 1 {
        return Err(invalid(format!("N must be a positive integer, got {n}")));
    }
    let c = chart(Chart::new(
        "D3x(0,N)",
        vec![
            Coordinate::linear("x", -1.0, 1.0),
            Coordinate::linear("y", -1.0, 1.0),
            Coordinate::linear("z", -1.0, 1.0),
            Coordinate::angular_interval("theta", 0.0, TAU * n as f64),
        ],
    ))?;
    let cs = Expr::cos(&[(3, 1)], -theta0);
    let sn = Expr::sin(&[(3, 1)], -theta0);
    let v1 = VectorField::coordinate(&c, 3);
    let v2 = VectorField::new(&c, vec![cs.clone(), cs.mul(&Expr::var(2)), sn, Expr::zero()])?;
    let mut p = ModelPiece::new("D3xN", &c, Role::Whole, Structure::Engel(Distribution::new(vec![v1.clone(), v2], 2)?));
    p.even_form = Some(form(&c, &["-z", "1", "0", "0"])?);
    p.w = Some(v1);
    p.params = Params { n: Some(n), theta0: Some(theta0), ..Params::default() };
    p.notes.push(format!("transverse direction rotates {n} times along theta"));
    Ok(OpenBookModel::single("engel_darboux_loose", "N-Darboux chart D^3 x (0, N)", p))
}

fn s3_chart() -> Result<Arc<Chart>> {
    chart(Chart::new(
        "S3-complement",
        vec![
            Coordinate::angular("phi1"),
            Coordinate::linear("s", 0.0, FRAC_PI_2).trig_capable().open_lo().open_hi(),
            Coordinate::angular("phi2"),
        ],
    ))
}

fn s3_alpha(c: &Arc<Chart>) -> Result<OneForm> {
    form(c, &["cos(s)*cos(s)", "0", "sin(s)*sin(s)"])
}

/// The page `phi1 + phi2 = 0` in `(r1, phi1, r2, phi2)`, parametrized by `(r, phi)`.
fn s3_page() -> (SurfaceEmbedding, AmbientForm) {
    let page = SurfaceEmbedding::numeric(
        "S3-page",
        ParamDomain::Annulus { circle: 1, lo: 0.05, hi: 0.95 },
        4,
        Arc::new(|r, phi| vec![r, phi, (1.0 - r * r).sqrt(), -phi]),
    );
    let alpha = AmbientForm::Numeric(Arc::new(|x: &[f64]| vec![0.0, x[0] * x[0], 0.0, x[2] * x[2]]));
    (page, alpha)
}

fn s3_openbook() -> Result<OpenBookModel> {
    let c = s3_chart()?;
    let alpha = s3_alpha(&c)?;
    let mut p = ModelPiece::new("S3", &c, Role::PageInterior, Structure::Contact(alpha));
    p.w = Some(vf(&c, &["1", "0", "1"])?);
    p.fibration = Some(form(&c, &["1", "0", "1"])?);
    p.notes.push("r1 = cos s, r2 = sin s; binding at s = 0 and s = pi/2".into());
    let mut m = OpenBookModel::single("s3_openbook", "S^3 with pages phi1 + phi2 = const", p);
    m.binding = "two Hopf circles r1 = 0 and r2 = 0".into();
    let (page, form) = s3_page();
    m.extras.push(Extra::PagePositivity { page, form });
    Ok(m)
}

fn s1_times_s3() -> Result<Arc<Chart>> {
    let s3 = s3_chart()?;
    let mut coords = vec![Coordinate::angular("t")];
    coords.extend(s3.coords.iter().cloned());
    chart(Chart::new("S1xS3-complement", coords))
}

fn product_openbook() -> Result<OpenBookModel> {
    let c = s1_times_s3()?;
    let beta = form(&c, &["0", "cos(s)*cos(s)", "0", "sin(s)*sin(s)"])?;
    let mut p = ModelPiece::new("S1xS3", &c, Role::PageInterior, Structure::EvenForm(beta.clone()));
    p.even_form = Some(beta);
    p.even_span = Some(vec![
        VectorField::coordinate(&c, 2),
        VectorField::coordinate(&c, 0),
        vf(&c, &["0", "sin(s)*sin(s)", "0", "-cos(s)*cos(s)"])?,
    ]);
    p.w = Some(VectorField::coordinate(&c, 0));
    p.fibration = Some(form(&c, &["0", "1", "0", "1"])?);
    p.expected_pass = false;
    p.notes.push("pr^* alpha is even contact but W = d_t lies in the pages".into());
    let mut m = OpenBookModel::single("product_openbook", "S^1 x S^3 with the product open book", p);
    m.binding = "S^1 x (Hopf link)".into();
    Ok(m)
}

fn prolongation_e_eps(eps: f64) -> Result<OpenBookModel> {
    let c = s1_times_s3()?;
    let e = Expr::constant(eps);
    let cc = Expr::cos(&[(2, 1)], 0.0).powi(2);
    let ss = Expr::sin(&[(2, 1)], 0.0).powi(2);
    let beta = OneForm::new(&c, vec![e.neg(), cc.clone(), Expr::zero(), ss.clone()])?;
    let w = VectorField::new(&c, vec![Expr::constant(1.0), e.clone(), Expr::zero(), e.clone()])?;
    let mut p = ModelPiece::new("S1xS3", &c, Role::PageInterior, Structure::EvenForm(beta.clone()));
    p.even_form = Some(beta);
    p.even_span = Some(vec![
        VectorField::coordinate(&c, 2),
        w.clone(),
        VectorField::new(&c, vec![Expr::zero(), ss, Expr::zero(), cc.neg()])?,
    ]);
    p.w = Some(w);
    p.fibration = Some(form(&c, &["0", "1", "0", "1"])?);
    let s3 = s3_chart()?;
    p.page = Some(s3_alpha(&s3)?);
    p.params = Params { eps: Some(eps), ..Params::default() };
    p.expected_pass = eps != 0.0;
    let mut m = OpenBookModel::single("prolongation_Eε", "ker(pr^* alpha - eps dt) on S^1 x S^3", p);
    m.binding = "S^1 x (Hopf link)".into();
    // S^1 x a, with a a Legendrian ray of the page phi1 + phi2 = 0, in (t, r1, phi1, r2, phi2)
    let form5 = AmbientForm::Numeric(Arc::new(move |x: &[f64]| vec![-eps, 0.0, x[1] * x[1], 0.0, x[3] * x[3]]));
    let annulus = SurfaceEmbedding::numeric(
        "S1xa",
        ParamDomain::Annulus { circle: 0, lo: 0.05, hi: 0.95 },
        5,
        Arc::new(|t, r| vec![t, r, 0.0, (1.0 - r * r).sqrt(), 0.0]),
    );
    let torus = |rho: f64| {
        SurfaceEmbedding::numeric(
            &format!("torus[r={rho}]"),
            ParamDomain::Torus,
            5,
            Arc::new(move |t, phi| vec![t, rho, phi, (1.0 - rho * rho).sqrt(), -phi]),
        )
    };
    m.extras.push(Extra::Annulus {
        annulus,
        form: form5.clone(),
        tori: vec![(torus(0.05), form5.clone()), (torus(0.95), form5)],
    });
    Ok(m)
}

fn engel_prolongation_dk(k: i64, eps: f64) -> Result<OpenBookModel> {
    if k < 1 {
        return Err(invalid(format!("k must be a positive integer, got {k}")));
    }
    let c = chart(Chart::new(
        "R3xS1",
        vec![
            Coordinate::linear("x", -1.0, 1.0),
            Coordinate::linear("y", -1.0, 1.0),
            Coordinate::linear("z", -1.0, 1.0),
            Coordinate::angular("t"),
        ],
    ))?;
    let w = VectorField::new(&c, vec![Expr::zero(), Expr::zero(), Expr::constant(eps), Expr::constant(1.0)])?;
    let cs = Expr::cos(&[(3, k)], 0.0);
    let sn = Expr::sin(&[(3, k)], 0.0);
    let x = VectorField::new(&c, vec![cs.clone(), sn, cs.mul(&Expr::var(1)), Expr::zero()])?;
    let mut p = ModelPiece::new("R3xS1", &c, Role::Whole, Structure::Engel(Distribution::new(vec![w.clone(), x], 2)?));
    p.even_form = Some(OneForm::new(&c, vec![Expr::var(1).neg(), Expr::zero(), Expr::constant(1.0), Expr::constant(-eps)])?);
    p.w = Some(w);
    p.params = Params { k: Some(k), eps: Some(eps), ..Params::default() };
    Ok(OpenBookModel::single("engel_prolongation_Dk", "span{d_t + eps d_z, cos(kt) C1 + sin(kt) C2}", p))
}

fn collar_xi(a: f64) -> Result<OpenBookModel> {
    let c = chart(Chart::new(
        "collar",
        vec![Coordinate::angular("x"), Coordinate::angular("y"), Coordinate::radial("r", 0.0, 0.2).trig_capable().closed()],
    ))?;
    let alpha = OneForm::new(&c, vec![Expr::cos(&[(2, 1)], a), Expr::sin(&[(2, 1)], a).neg(), Expr::zero()])?;
    let mut p = ModelPiece::new("collar", &c, Role::Collar, Structure::Contact(alpha.clone()));
    p.contact_field = Some(VectorField::coordinate(&c, 1));
    p.tori = collar_tori(&c, &alpha, a)?;
    p.params = Params { a: Some(a), ..Params::default() };
    let mut m = OpenBookModel::single("collar_xi", "ker(cos(r+a) dx - sin(r+a) dy) near the page boundary", p);
    m.binding = "page boundary at r = 0".into();
    Ok(m)
}

pub(super) fn collar_tori(c: &Arc<Chart>, alpha: &OneForm, a: f64) -> Result<Vec<TorusDatum>> {
    [0.0, 0.1]
        .iter()
        .map(|&rho| {
            let torus = SurfaceEmbedding::affine(
                &format!("T2[r={rho}]"),
                ParamDomain::Torus,
                c,
                vec![AffineImage::var(0), AffineImage::var(1), AffineImage::constant(rho)],
            )?;
            Ok(TorusDatum {
                form: AmbientForm::Symbolic(alpha.clone()),
                torus,
                expected_slope: Some(1.0 / (rho + a).tan()),
            })
        })
        .collect()
}

pub(super) fn binding_locus() -> Result<BindingLocus> {
    let c = chart(Chart::new(
        "binding-cartesian",
        vec![
            Coordinate::angular("x"),
            Coordinate::angular("y"),
            Coordinate::linear("u", -1.0, 1.0),
            Coordinate::linear("v", -1.0, 1.0),
        ],
    ))?;
    Ok(BindingLocus {
        even_form: form(&c, &["1", "-u^2 - v^2", "-v", "u"])?,
        e_span: vec![vf(&c, &["u^2 + v^2", "1", "0", "0"])?, vf(&c, &["v", "0", "1", "0"])?, vf(&c, &["-u", "0", "0", "1"])?],
        w: vf(&c, &["0", "1", "-v", "u"])?,
        normal: vec![(2, 0.0), (3, 0.0)],
        tangent: vec![0, 1],
        chart: c,
    })
}

pub(super) fn binding_tori(page: &Arc<Chart>, alpha: &OneForm, radii: &[f64]) -> Result<Vec<TorusDatum>> {
    radii
        .iter()
        .map(|&rho| {
            let torus = SurfaceEmbedding::affine(
                &format!("T2[r={rho}]"),
                ParamDomain::Torus,
                page,
                vec![AffineImage::var(0), AffineImage::var(1), AffineImage::constant(rho)],
            )?;
            Ok(TorusDatum { form: AmbientForm::Symbolic(alpha.clone()), torus, expected_slope: Some(1.0 / (rho * rho)) })
        })
        .collect()
}

pub(super) fn binding_page(lo: f64, hi: f64) -> Result<(Arc<Chart>, OneForm)> {
    let c = chart(Chart::new(
        "binding-page",
        vec![Coordinate::angular("x"), Coordinate::angular("y"), Coordinate::radial("r", lo, hi).closed()],
    ))?;
    let alpha = form(&c, &["1", "-r^2", "0"])?;
    Ok((c, alpha))
}

fn binding_eb() -> Result<OpenBookModel> {
    let c = chart(Chart::new(
        "binding-polar",
        vec![
            Coordinate::angular("x"),
            Coordinate::angular("y"),
            Coordinate::radial("r", 0.01, 1.0).closed(),
            Coordinate::angular("phi"),
        ],
    ))?;
    let beta = form(&c, &["1", "-r^2", "0", "r^2"])?;
    let w = vf(&c, &["0", "1", "0", "1"])?;
    let mut p = ModelPiece::new("T2xD2", &c, Role::Binding, Structure::EvenForm(beta.clone()));
    p.even_form = Some(beta);
    p.even_span = Some(vec![VectorField::coordinate(&c, 2), w.clone(), vf(&c, &["r^2", "1", "0", "0"])?]);
    p.w = Some(w);
    p.fibration = Some(OneForm::coordinate(&c, 3));
    p.binding = Some(binding_locus()?);
    let (page, alpha) = binding_page(0.01, 1.0)?;
    p.tori = binding_tori(&page, &alpha, &[0.5, 1.0])?;
    p.page = Some(alpha);
    p.notes.push("polar chart for r >= 0.01; the core r = 0 is covered by the Cartesian binding chart".into());
    let mut m = OpenBookModel::single("binding_Eb", "ker(dx + r^2 dphi - r^2 dy) on T^2 x D^2", p);
    m.binding = "T^2 x {0}".into();
    Ok(m)
}

fn stabilization_local() -> Result<OpenBookModel> {
    let c = chart(Chart::new(
        "stabilization",
        vec![
            Coordinate::angular("t"),
            Coordinate::linear("x", 0.0, 1.0).open_lo().open_hi(),
            Coordinate::linear("y", -0.5, 0.5),
        ],
    ))?;
    let alpha = form(&c, &["1", "-y", "0"])?;
    let p = ModelPiece::new("stabilization", &c, Role::Whole, Structure::Contact(alpha.clone()));
    let mut m = OpenBookModel::single("stabilization_local", "ker(dt - f(y) dx) with f(y) = y", p);
    let annulus = SurfaceEmbedding::affine(
        "A[y=0]",
        ParamDomain::Annulus { circle: 0, lo: 0.0, hi: 1.0 },
        &c,
        vec![AffineImage::var(0), AffineImage::var(1), AffineImage::constant(0.0)],
    )?;
    m.extras.push(Extra::Annulus { annulus, form: AmbientForm::Symbolic(alpha), tori: vec![] });
    Ok(m)
}
