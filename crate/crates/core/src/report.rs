//! JSON and text rendering of verification results.
//!
//! Keys are emitted in sorted order, so the same inputs give the same bytes.

use crate::foliation::SingularityReport;
use crate::pipeline::{Invariants, Params, PipelineReport, SampleConfig};
use crate::verify::CheckReport;
use serde_json::{json, Value};

/// Failures listed per check; the total is always reported.
pub const MAX_LISTED_FAILURES: usize = 25;

pub fn conventions() -> Value {
    json!({
        "orientation": "coordinate order of each chart; the S^3 chart is (phi1, s, phi2) with r1 = cos s, r2 = sin s",
        "twist_sign": "tw(X) counts counterclockwise turns of X in the frame (C1, C2); tw(C1) is measured in (d_r, S_xi)",
        "angle_period": "2pi",
    })
}

pub fn check_json(c: &CheckReport) -> Value {
    let failures: Vec<Value> = c
        .failures
        .iter()
        .take(MAX_LISTED_FAILURES)
        .map(|f| json!({ "point": f.point, "diagnostic": f.diagnostic }))
        .collect();
    json!({
        "name": c.name,
        "pass": c.pass,
        "points": c.points_checked,
        "min_gap": c.min_gap,
        "failures": failures,
        "failure_count": c.failures.len(),
        "notes": c.notes,
    })
}

fn config_json(source: Value, params: &Params, cfg: &SampleConfig) -> Value {
    json!({
        "source": source,
        "params": params,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "tolerances": cfg.tol,
    })
}

fn invariants_json(i: &Invariants) -> Value {
    json!({
        "tw_gamma_x": i.tw_gamma_x,
        "tw_gamma_y": i.tw_gamma_y,
        "tw_gamma_phi": i.tw_gamma_phi,
        "rotation_k": i.rotation_k,
        "delta": i.delta,
        "boundary_twist": i.boundary_twist,
    })
}

pub fn singularities_json(s: &SingularityReport) -> Value {
    serde_json::to_value(s).unwrap_or(Value::Null)
}

/// Report for `verify`: checks only, no invariants.
pub fn verify_report(source: Value, params: &Params, cfg: &SampleConfig, checks: &[CheckReport], expected_pass: bool) -> Value {
    let overall = checks.iter().all(|c| c.pass);
    json!({
        "tool_version": crate::TOOL_VERSION,
        "config": config_json(source, params, cfg),
        "conventions": conventions(),
        "checks": checks.iter().map(check_json).collect::<Vec<_>>(),
        "invariants": Value::Null,
        "singularities": Value::Null,
        "expected_pass": expected_pass,
        "overall_pass": overall,
    })
}

/// Report for `construct`.
pub fn pipeline_json(r: &PipelineReport, cfg: &SampleConfig) -> Value {
    let params = Params { lambda: Some(r.lambda), k: Some(r.k), l: Some(r.l), a: Some(r.a), r0: Some(r.r0), ..Params::default() };
    json!({
        "tool_version": crate::TOOL_VERSION,
        "config": config_json(json!("construct"), &params, cfg),
        "conventions": conventions(),
        "l": r.l,
        "checks": r.checks.iter().map(check_json).collect::<Vec<_>>(),
        "invariants": invariants_json(&r.invariants),
        "singularities": singularities_json(&r.singularities),
        "arrangement": r.arrangement,
        "overall_pass": r.overall_pass,
    })
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// One line per check, then the overall verdict.
pub fn to_text(v: &Value) -> String {
    let mut out = String::new();
    if let Some(checks) = v["checks"].as_array() {
        for c in checks {
            let verdict = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
            let gap = c["min_gap"].as_f64().map(|g| format!("{g:.3e}")).unwrap_or_else(|| "-".into());
            out.push_str(&format!("{verdict} {} points={} min_gap={gap}\n", c["name"].as_str().unwrap_or("?"), c["points"]));
            if let Some(fs) = c["failures"].as_array() {
                for f in fs.iter().take(3) {
                    out.push_str(&format!("    {} at {}\n", f["diagnostic"].as_str().unwrap_or(""), f["point"]));
                }
            }
        }
    }
    if !v["invariants"].is_null() {
        out.push_str(&format!("invariants {}\n", v["invariants"]));
    }
    if !v["singularities"].is_null() {
        let s = &v["singularities"];
        out.push_str(&format!(
            "singularities e+={} e-={} h+={} h-={} relative_euler={}\n",
            s["e_plus"], s["e_minus"], s["h_plus"], s["h_minus"], s["relative_euler"]
        ));
    }
    let overall = if v["overall_pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
    out.push_str(&format!("overall {overall}\n"));
    out
}
