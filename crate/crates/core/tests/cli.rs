use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engelbook")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn list_models_names_the_catalog() {
    let out = run(&["list-models"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["darboux_even", "binding_Eb", "collar_xi", "stabilization_local"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(&["verify", "--model", "binding_Eb", "--samples", "200"]).status.code(), Some(0));
    let bad = run(&["verify", "--model", "product_openbook", "--samples", "200"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(json(&bad)["overall_pass"], false);
    let unknown = run(&["verify", "--model", "no_such_model"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).starts_with("error["));
}

#[test]
fn construct_reports_l_and_is_reproducible() {
    let args = ["construct", "--lambda", "2", "--k", "3", "--samples", "200"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(json(&a)["l"], 5);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn construct_rejects_bad_parameters() {
    assert_eq!(run(&["construct", "--lambda", "2", "--k", "2"]).status.code(), Some(2));
    assert_eq!(run(&["construct", "--lambda", "-4", "--k", "3"]).status.code(), Some(2));
}

#[test]
fn invariants_and_probe() {
    let inv = run(&["invariants", "--lambda", "-1", "--k", "3"]);
    assert_eq!(inv.status.code(), Some(0));
    let v = json(&inv);
    assert_eq!(v["invariants"]["tw_gamma_y"], -1);
    assert_eq!(v["invariants"]["tw_gamma_phi"], 3);
    let probe = run(&["probe-looseness", "--piece", "binding", "--lambda", "2", "--k", "3"]);
    assert_eq!(probe.status.code(), Some(0));
    assert_eq!(json(&probe)["rotations"], 5);
}

#[test]
fn foliation_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xi.svg");
    let out = run(&["foliation", "--k", "3", "--format", "svg", "--grid", "11", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&path).unwrap().contains("<svg"));
}

const MODEL: &str = "\
[chart r4]
coords = x:linear:-1:1, y:linear:-1:1, z:linear:-1:1, w:linear:-1:1

[form alpha]
components = -y, 0, 1, 0

[piece main]
role = whole
form = alpha
expect = pass
";

#[test]
fn verify_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.model");
    std::fs::write(&good, MODEL).unwrap();
    let out = run(&["verify", "--file", good.to_str().unwrap(), "--samples", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let flat = dir.path().join("flat.model");
    std::fs::write(&flat, MODEL.replace("-y, 0, 1, 0", "0, 0, 1, 0")).unwrap();
    assert_eq!(run(&["verify", "--file", flat.to_str().unwrap(), "--samples", "100"]).status.code(), Some(1));
    let broken = dir.path().join("broken.model");
    std::fs::write(&broken, "[piece main]\nform = nothing\n").unwrap();
    assert_eq!(run(&["verify", "--file", broken.to_str().unwrap()]).status.code(), Some(2));
}
