//! Declarative model files.
//!
//! ```text
//! # comments start with '#'
//! [chart polar]
//! coords = x:angular, y:angular, r:radial:0.01:1:closed, phi:angular
//!
//! [form beta]
//! chart = polar              # optional when there is one chart
//! components = 1, -r^2, 0, r^2
//!
//! [field W]
//! components = 0, 1, 0, 1
//!
//! [piece main]
//! role = binding             # collar | binding | page-interior | whole
//! form = beta                # even contact form (4-chart) or contact form (3-chart)
//! span = e1, e2, e3          # optional spanning fields of ker(form)
//! engel = V1, V2             # instead of form: an Engel distribution
//! w = W
//! fibration = dphi
//! contact_field = L
//! binding = u=0, v=0         # normal coordinates of the binding torus
//! expect = pass
//!
//! [gluing]
//! a = main
//! b = other
//! matrix = 1 0 0 0; 0 1 0 0; 0 0 1 0; 0 1 0 1
//! offset = 0, 0, 0, 0        # optional
//! ```
//!
//! Coordinate kinds: `angular`, `angular_interval:lo:hi`, `radial:lo:hi`,
//! `linear:lo:hi`, followed by optional flags `trig`, `closed`, `open`. Bounds
//! accept `pi` multiples such as `pi/2` or `2*pi`.

use crate::chart::{Chart, Coordinate};
use crate::error::{Error, Result};
use crate::fields::{AffineMap, Distribution, OneForm, VectorField};
use crate::pipeline::{BindingLocus, Gluing, ModelPiece, OpenBookModel, Params, Role, SampleConfig, Structure};
use crate::verify::CheckReport;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::ModelFile { line, msg: msg.into() }
}

#[derive(Debug, Default)]
struct Section {
    kind: String,
    name: String,
    line: usize,
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key).ok_or_else(|| err(self.line, format!("[{} {}] needs `{key}`", self.kind, self.name)))
    }
}

fn sections(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(h) = s.strip_prefix('[') {
            let h = h.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?;
            let mut it = h.split_whitespace();
            let kind = it.next().ok_or_else(|| err(line, "empty section header"))?.to_string();
            let name = it.next().unwrap_or("").to_string();
            if it.next().is_some() {
                return Err(err(line, "section header has extra words"));
            }
            out.push(Section { kind, name, line, entries: BTreeMap::new() });
            continue;
        }
        let (k, v) = s.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
        let sec = out.last_mut().ok_or_else(|| err(line, "entry outside any section"))?;
        if sec.entries.insert(k.trim().to_string(), (line, v.trim().to_string())).is_some() {
            return Err(err(line, format!("duplicate key `{}`", k.trim())));
        }
    }
    Ok(out)
}

fn parse_real(s: &str, line: usize) -> Result<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || err(line, format!("bad number `{s}`"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().map_err(|_| bad())?),
        None => (s, 1.0),
    };
    let neg = num.starts_with('-');
    let num = num.trim_start_matches('-');
    let coeff = match num.strip_suffix("pi") {
        Some("") => 1.0,
        Some(c) => c.trim_end_matches('*').trim().parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(if neg { -1.0 } else { 1.0 } * coeff * PI / den)
}

fn parse_coord(item: &str, line: usize) -> Result<Coordinate> {
    let parts: Vec<&str> = item.split(':').map(str::trim).collect();
    let name = parts[0];
    if name.is_empty() || parts.len() < 2 {
        return Err(err(line, format!("bad coordinate `{item}`")));
    }
    let bounds = |i: usize| -> Result<(f64, f64)> {
        match (parts.get(i), parts.get(i + 1)) {
            (Some(a), Some(b)) => Ok((parse_real(a, line)?, parse_real(b, line)?)),
            _ => Err(err(line, format!("coordinate `{name}` needs bounds"))),
        }
    };
    let (mut c, rest) = match parts[1] {
        "angular" => (Coordinate::angular(name), 2),
        "angular_interval" => {
            let (lo, hi) = bounds(2)?;
            (Coordinate::angular_interval(name, lo, hi), 4)
        }
        "radial" => {
            let (lo, hi) = bounds(2)?;
            (Coordinate::radial(name, lo, hi), 4)
        }
        "linear" => {
            let (lo, hi) = bounds(2)?;
            (Coordinate::linear(name, lo, hi), 4)
        }
        k => return Err(err(line, format!("unknown coordinate kind `{k}`"))),
    };
    for flag in &parts[rest.min(parts.len())..] {
        c = match *flag {
            "trig" => c.trig_capable(),
            "closed" => c.closed(),
            "open" => c.open_lo().open_hi(),
            f => return Err(err(line, format!("unknown coordinate flag `{f}`"))),
        };
    }
    Ok(c)
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::ModelFile { .. } => e,
        other => err(line, format!("{}: {other}", other.code())),
    }
}

struct Defs {
    charts: BTreeMap<String, Arc<Chart>>,
    forms: BTreeMap<String, OneForm>,
    fields: BTreeMap<String, VectorField>,
}

impl Defs {
    fn chart_for(&self, s: &Section) -> Result<Arc<Chart>> {
        match s.get("chart") {
            Some((l, name)) => self.charts.get(name).cloned().ok_or_else(|| err(l, format!("unknown chart `{name}`"))),
            None if self.charts.len() == 1 => Ok(self.charts.values().next().unwrap().clone()),
            None => Err(err(s.line, "several charts declared; name one with `chart =`")),
        }
    }

    fn form(&self, line: usize, name: &str) -> Result<OneForm> {
        self.forms.get(name).cloned().ok_or_else(|| err(line, format!("unknown form `{name}`")))
    }

    fn field(&self, line: usize, name: &str) -> Result<VectorField> {
        self.fields.get(name).cloned().ok_or_else(|| err(line, format!("unknown field `{name}`")))
    }

    fn fields(&self, line: usize, names: &str) -> Result<Vec<VectorField>> {
        list(names).iter().map(|n| self.field(line, n)).collect()
    }
}

fn same_chart(line: usize, chart: &Arc<Chart>, other: &Arc<Chart>, what: &str) -> Result<()> {
    if chart.label != other.label {
        return Err(err(line, format!("{what} lives on chart `{}`, piece on `{}`", other.label, chart.label)));
    }
    Ok(())
}

fn parse_role(line: usize, v: &str) -> Result<Role> {
    Ok(match v {
        "collar" => Role::Collar,
        "binding" => Role::Binding,
        "page-interior" | "page_interior" => Role::PageInterior,
        "whole" => Role::Whole,
        _ => return Err(err(line, format!("unknown role `{v}`"))),
    })
}

fn build_piece(s: &Section, d: &Defs) -> Result<ModelPiece> {
    let role = match s.get("role") {
        Some((l, v)) => parse_role(l, v)?,
        None => Role::Whole,
    };
    let (structure, chart, even_form) = match (s.get("form"), s.get("engel")) {
        (Some(_), Some((l, _))) => return Err(err(l, "declare either `form` or `engel`, not both")),
        (Some((l, name)), None) => {
            let f = d.form(l, name)?;
            let st = match f.dim() {
                3 => Structure::Contact(f.clone()),
                4 => Structure::EvenForm(f.clone()),
                n => return Err(err(l, format!("form `{name}` has dimension {n}; expected 3 or 4"))),
            };
            (st, f.chart.clone(), Some(f))
        }
        (None, Some((l, names))) => {
            let fs = d.fields(l, names)?;
            if fs.len() != 2 {
                return Err(err(l, "`engel` takes exactly two fields"));
            }
            let chart = fs[0].chart.clone();
            (Structure::Engel(Distribution::new(fs, 2).map_err(|e| at_line(l, e))?), chart, None)
        }
        (None, None) => return Err(err(s.line, "piece needs `form` or `engel`")),
    };
    let mut p = ModelPiece::new(&s.name, &chart, role, structure);
    p.even_form = even_form.filter(|f| f.dim() == 4);
    if let Some((l, names)) = s.get("span") {
        let span = d.fields(l, names)?;
        for f in &span {
            same_chart(l, &chart, &f.chart, "span field")?;
        }
        p.even_span = Some(span);
    }
    if let Some((l, n)) = s.get("w") {
        let w = d.field(l, n)?;
        same_chart(l, &chart, &w.chart, "W")?;
        p.w = Some(w);
    }
    if let Some((l, n)) = s.get("fibration") {
        let f = d.form(l, n)?;
        same_chart(l, &chart, &f.chart, "fibration form")?;
        p.fibration = Some(f);
    }
    if let Some((l, n)) = s.get("contact_field") {
        let f = d.field(l, n)?;
        same_chart(l, &chart, &f.chart, "contact field")?;
        p.contact_field = Some(f);
    }
    if let Some((l, n)) = s.get("even_form") {
        let f = d.form(l, n)?;
        same_chart(l, &chart, &f.chart, "even form")?;
        p.even_form = Some(f);
    }
    if let Some((l, v)) = s.get("binding") {
        let mut normal = Vec::new();
        for item in list(v) {
            let (c, val) = item.split_once('=').ok_or_else(|| err(l, format!("expected `coord=value`, got `{item}`")))?;
            let i = chart.index_of(c.trim()).ok_or_else(|| err(l, format!("unknown coordinate `{}`", c.trim())))?;
            normal.push((i, parse_real(val, l)?));
        }
        let tangent = (0..chart.dim()).filter(|i| normal.iter().all(|(j, _)| j != i)).collect();
        let (Some(form), Some(span), Some(w)) = (p.even_form.clone(), p.even_span.clone(), p.w.clone()) else {
            return Err(err(l, "a binding needs `form`, `span` and `w`"));
        };
        p.binding = Some(BindingLocus { chart: chart.clone(), normal, tangent, even_form: form, e_span: span, w });
    }
    if let Some((l, v)) = s.get("expect") {
        p.expected_pass = match v {
            "pass" => true,
            "fail" => false,
            _ => return Err(err(l, "`expect` is `pass` or `fail`")),
        };
    }
    for key in s.entries.keys() {
        let known = ["role", "form", "engel", "span", "w", "fibration", "contact_field", "even_form", "binding", "expect"];
        if !known.contains(&key.as_str()) {
            let (l, _) = s.get(key).unwrap();
            return Err(err(l, format!("unknown piece key `{key}`")));
        }
    }
    Ok(p)
}

fn parse_matrix(line: usize, v: &str) -> Result<Vec<Vec<i64>>> {
    v.split(';')
        .map(|row| {
            row.split_whitespace()
                .map(|x| x.parse::<i64>().map_err(|_| err(line, format!("matrix entries are integers, got `{x}`"))))
                .collect()
        })
        .collect()
}

pub fn parse_model_file(text: &str, name: &str) -> Result<OpenBookModel> {
    let secs = sections(text)?;
    let mut d = Defs { charts: BTreeMap::new(), forms: BTreeMap::new(), fields: BTreeMap::new() };
    for s in secs.iter().filter(|s| s.kind == "chart") {
        let (l, coords) = s.require("coords")?;
        let label = if s.name.is_empty() { s.get("label").map(|x| x.1).unwrap_or("chart").to_string() } else { s.name.clone() };
        let cs = coords.split(',').map(|c| parse_coord(c, l)).collect::<Result<Vec<_>>>()?;
        let chart = Chart::new(&label, cs).map_err(|e| at_line(l, e))?;
        if d.charts.insert(label.clone(), Arc::new(chart)).is_some() {
            return Err(err(s.line, format!("duplicate chart `{label}`")));
        }
    }
    if d.charts.is_empty() {
        return Err(err(1, "no [chart] section"));
    }
    for s in &secs {
        match s.kind.as_str() {
            "form" | "field" => {
                if s.name.is_empty() {
                    return Err(err(s.line, format!("[{}] needs a name", s.kind)));
                }
                let chart = d.chart_for(s)?;
                let (l, comps) = s.require("components")?;
                let items = list(comps);
                let refs: Vec<&str> = items.iter().map(String::as_str).collect();
                if s.kind == "form" {
                    let f = OneForm::parse(&chart, &refs).map_err(|e| at_line(l, e))?;
                    d.forms.insert(s.name.clone(), f);
                } else {
                    let f = VectorField::parse(&chart, &refs).map_err(|e| at_line(l, e))?;
                    d.fields.insert(s.name.clone(), f);
                }
            }
            "chart" | "piece" | "gluing" => {}
            k => return Err(err(s.line, format!("unknown section `{k}`"))),
        }
    }
    let mut pieces = Vec::new();
    for s in secs.iter().filter(|s| s.kind == "piece") {
        pieces.push(build_piece(s, &d)?);
    }
    if pieces.is_empty() {
        return Err(err(1, "no [piece] section"));
    }
    let mut gluings = Vec::new();
    for s in secs.iter().filter(|s| s.kind == "gluing") {
        let (la, a) = s.require("a")?;
        let (lb, b) = s.require("b")?;
        for (l, n) in [(la, a), (lb, b)] {
            if !pieces.iter().any(|p| p.name == n) {
                return Err(err(l, format!("unknown piece `{n}`")));
            }
        }
        let (lm, m) = s.require("matrix")?;
        let matrix = parse_matrix(lm, m)?;
        let offset = match s.get("offset") {
            Some((l, v)) => list(v).iter().map(|x| parse_real(x, l)).collect::<Result<Vec<_>>>()?,
            None => vec![0.0; matrix.len()],
        };
        gluings.push(Gluing { a: a.into(), b: b.into(), map: Some(AffineMap { matrix, offset }), region: "declared".into() });
    }
    let expected_pass = pieces.iter().all(|p| p.expected_pass);
    Ok(OpenBookModel {
        name: name.into(),
        description: "model file".into(),
        pieces,
        gluings,
        binding: "declared per piece".into(),
        extras: vec![],
        params: Params::default(),
        expected_pass,
    })
}

pub fn load_model_file(path: &std::path::Path) -> Result<OpenBookModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    parse_model_file(&text, name)
}

/// A declared gluing: `f_* W_a = W_b` and `f_*` maps `ker beta_a` into `ker beta_b`.
pub fn gluing_map_check(model: &OpenBookModel, g: &Gluing, cfg: &SampleConfig) -> Result<CheckReport> {
    let find = |n: &str| model.pieces.iter().find(|p| p.name == n).expect("gluing pieces resolved at parse time");
    let (a, b) = (find(&g.a), find(&g.b));
    let map = g.map.as_ref().ok_or_else(|| Error::Precondition("gluing has no map".into()))?;
    let name = format!("gluing[{}->{}]", g.a, g.b);
    let mut r = CheckReport::new(&name);
    r.points_checked = 1;
    if let (Some(wa), Some(wb)) = (&a.w, &b.w) {
        let pushed = map.pushforward(wa)?;
        let moved = VectorField { chart: wb.chart.clone(), comps: pushed.comps };
        if !moved.canonical_equal(wb) {
            r.fail("f_* W_a differs from W_b".into());
        }
    }
    if let (Some(span), Some(beta)) = (&a.even_span, &b.even_form) {
        let pts = cfg.points(&b.chart);
        for v in span {
            let pushed = map.pushforward(v)?;
            let moved = VectorField { chart: beta.chart.clone(), comps: pushed.comps };
            let e = beta.apply(&moved)?;
            if let Some(p) = pts.iter().find(|p| e.eval(p).abs() > cfg.tol.rank) {
                r.fail(format!("pushed span field leaves ker beta_b at {p:?}"));
                break;
            }
        }
    }
    r.min_gap = Some(if r.pass { 1.0 } else { 0.0 });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EB: &str = "
[chart polar]
coords = x:angular, y:angular, r:radial:0.01:1:closed, phi:angular
[form beta]
components = 1, -r^2, 0, r^2
[form dphi]
components = 0, 0, 0, 1
[field W]
components = 0, 1, 0, 1
[field e1]
components = 0, 0, 1, 0
[field e3]
components = r^2, 1, 0, 0
[piece eb]
role = binding
form = beta
span = e1, W, e3
w = W
fibration = dphi
";

    #[test]
    fn binding_model_file_verifies() {
        let m = parse_model_file(EB, "eb").unwrap();
        assert_eq!(m.pieces.len(), 1);
        let cfg = SampleConfig { samples: 100, ..SampleConfig::default() };
        assert!(m.verify(&cfg).unwrap().iter().all(|c| c.pass));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = EB.replace("components = 0, 1, 0, 1", "components = 0, 1, 0, q");
        match parse_model_file(&bad, "x") {
            Err(Error::ModelFile { line, .. }) => assert_eq!(line, 9),
            other => panic!("unexpected {:?}", other.map(|m| m.name)),
        }
        assert!(matches!(parse_model_file("[piece a]\nform = b\n", "x"), Err(Error::ModelFile { .. })));
    }

    #[test]
    fn pi_bounds() {
        assert_eq!(parse_real("pi/2", 1).unwrap(), PI / 2.0);
        assert_eq!(parse_real("2*pi", 1).unwrap(), 2.0 * PI);
        assert_eq!(parse_real("-0.5", 1).unwrap(), -0.5);
        assert!(parse_real("tau", 1).is_err());
    }
}
