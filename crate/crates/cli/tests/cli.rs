use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_entrocap"))
}

fn spec(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn cea_on_noiseless_qubit() {
    let out = run(&["--json", "cea", spec("identity-qubit.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    // 2 h(1/4) with h the binary entropy
    let exact = -2.0 * (0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
    let value = r["result"]["value"].as_f64().unwrap();
    let upper = r["result"]["certificate"]["upper"].as_f64().unwrap();
    assert!(value <= exact + 1e-9 && upper >= exact - 1e-9, "{value} {upper} vs {exact}");
    assert!(upper - value < 1e-6);
    assert_eq!(r["converged"], Value::Bool(true));
    assert_eq!(r["command"], "cea");
    assert!(r.get("wall_time_seconds").is_none());
}

#[test]
fn reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let path = spec("discrete-cq.json");
    let mut bodies = Vec::new();
    for name in ["a.json", "b.json"] {
        let target = dir.path().join(name);
        let out = run(&["--report", target.to_str().unwrap(), "chi", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        bodies.push(std::fs::read(&target).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let serial = dir.path().join("serial.json");
    run(&["--serial", "--report", serial.to_str().unwrap(), "chi", path.to_str().unwrap()]);
    let a: Value = serde_json::from_slice(&bodies[0]).unwrap();
    let b: Value = serde_json::from_slice(&std::fs::read(&serial).unwrap()).unwrap();
    assert_eq!(a["result"]["value"], b["result"]["value"]);
}

#[test]
fn timing_is_opt_in() {
    let out = run(&["--json", "--timing", "mi", spec("identity-qubit.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(report(&out)["wall_time_seconds"].as_f64().is_some());
}

#[test]
fn parse_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let broken = write(&dir, "broken.json", "{\"schema_version\": 1, \"kind\": ");
    let ragged = write(&dir, "ragged.json", r#"{"schema_version":1,"kind":"kraus","payload":[[[1,0],[0]]]}"#);
    let unknown = write(&dir, "unknown.json", r#"{"schema_version":1,"kind":"teleporter","payload":[]}"#);
    for path in [&broken, &ragged, &unknown] {
        let out = run(&["validate", path]);
        assert_eq!(out.status.code(), Some(2), "{path}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains(path.as_str()));
    }
    assert_eq!(run(&["validate", "/nonexistent/spec.json"]).status.code(), Some(2));
}

#[test]
fn invalid_channels_exit_3() {
    let dir = TempDir::new().unwrap();
    let not_tp = write(&dir, "not_tp.json", r#"{"schema_version":1,"kind":"kraus","payload":[[[1,0],[0,0.5]]]}"#);
    assert_eq!(run(&["validate", &not_tp]).status.code(), Some(3));
    let infeasible = write(
        &dir,
        "infeasible.json",
        r#"{"schema_version":1,"kind":"named","payload":{"name":"identity","params":{"d":2}},
           "constraint":{"F":[[1,0],[0,2]],"E":0.5}}"#,
    );
    assert_eq!(run(&["cea", &infeasible]).status.code(), Some(3));
}

#[test]
fn gaussian_classification() {
    let dir = TempDir::new().unwrap();
    let zero = write(
        &dir,
        "zero.json",
        r#"{"schema_version":1,"kind":"gaussian",
           "payload":{"K":[[0,0],[0,0]],"alpha":[[0.5,0],[0,0.5]],"modes":[1,1]}}"#,
    );
    let out = run(&["--json", "gaussian-classify", &zero]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["class"]["cq"], Value::Bool(true));
    assert_eq!(r["result"]["class"]["discrete_type"], Value::Bool(true));
    assert_eq!(r["result"]["validity"]["valid"], Value::Bool(true));
    // only vacuum attenuators have a Fock realization
    assert_eq!(run(&["cea", &zero]).status.code(), Some(3));
}

#[test]
fn attenuator_information_matches_closed_form() {
    let out = run(&["--json", "--cutoff", "25", "mi", spec("gaussian-attenuator.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let g = |x: f64| if x <= 0.0 { 0.0 } else { (x + 1.0) * (x + 1.0).log2() - x * x.log2() };
    let (eta, n) = (0.6, 1.0);
    let exact = g(n) + g(eta * n) - g((1.0 - eta) * n);
    let mi = r["result"]["mutual_information"].as_f64().unwrap();
    assert!((mi - exact).abs() < 1e-3, "{mi} vs {exact}");
}

#[test]
fn cq_channel_coincidence() {
    let out = run(&["--json", "coincidence", spec("discrete-cq.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let text = r["result"].to_string();
    assert!(text.contains("1.3002"), "{text}");
}

#[test]
fn suite_passes() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("suite.json");
    let out = run(&["--report", target.to_str().unwrap(), "suite"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r: Value = serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert!(r["result"].to_string().contains("passed"));
}
