use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperrcm"))
}

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    bin()
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const FIGURE: &str = r#"{"spec": {"d": 2, "family": "boolean", "L": 0.5642998351362776}, "lambda": 2.0, "R": 4.0}"#;

#[test]
fn simulate_writes_configuration_and_svg() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["simulate", "--seed", "11"], FIGURE);
    ok(&out);
    let doc = read_json(&dir.path().join("out/simulate.json"));
    assert_eq!(doc["command"], "simulate");
    assert_eq!(doc["config"]["seed"], 11);
    let conf: hyperrcm::rcm::Configuration = serde_json::from_value(doc["result"].clone()).unwrap();
    let n = conf.cloud.len();
    assert!(n > 100, "{n} points");
    // Boolean edges join exactly the pairs closer than L
    let l = 0.5642998351362776;
    for &(i, j) in &conf.edges {
        assert!(conf.cloud.dist(i, j) < l);
    }
    let svg = fs::read_to_string(dir.path().join("out/simulate.svg")).unwrap();
    assert!(svg.contains("viewBox=\"0 0 1000 1000\""));
    assert_eq!(svg.matches("<circle").count(), n + 1);
    assert_eq!(svg.matches("<line").count(), conf.edges.len());
    assert!(svg.contains("\"seed\":11"));
}

#[test]
fn fixed_seed_gives_identical_bytes_across_threads() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(&run(a.path(), &["simulate", "--seed", "5", "--threads", "1"], FIGURE));
    ok(&run(b.path(), &["simulate", "--seed", "5", "--threads", "4"], FIGURE));
    for f in ["simulate.svg", "simulate.json"] {
        assert_eq!(fs::read(a.path().join("out").join(f)).unwrap(), fs::read(b.path().join("out").join(f)).unwrap());
    }
    let c = TempDir::new().unwrap();
    ok(&run(c.path(), &["simulate", "--seed", "6"], FIGURE));
    assert_ne!(fs::read(a.path().join("out/simulate.svg")).unwrap(), fs::read(c.path().join("out/simulate.svg")).unwrap());
}

#[test]
fn zero_intensity_draws_an_empty_disc() {
    let dir = TempDir::new().unwrap();
    ok(&run(dir.path(), &["simulate"], r#"{"spec": {"d": 2, "family": "boolean", "L": 1}, "lambda": 0, "R": 3}"#));
    let svg = fs::read_to_string(dir.path().join("out/simulate.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 1);
    assert_eq!(svg.matches("<line").count(), 0);
}

#[test]
fn render_reproduces_the_simulate_drawing() {
    let dir = TempDir::new().unwrap();
    ok(&run(dir.path(), &["simulate", "--seed", "3"], FIGURE));
    let cfg = dir.path().join("render.json");
    fs::write(&cfg, r#"{"input": "out/simulate.json"}"#).unwrap();
    let out = bin().args(["render", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("out")).output().unwrap();
    ok(&out);
    let strip = |s: String| s.lines().filter(|l| !l.starts_with("<metadata>")).collect::<Vec<_>>().join("\n");
    let a = strip(fs::read_to_string(dir.path().join("out/simulate.svg")).unwrap());
    let b = strip(fs::read_to_string(dir.path().join("out/render.svg")).unwrap());
    assert_eq!(a, b);
}

#[test]
fn csv_format_writes_tables_and_config() {
    let dir = TempDir::new().unwrap();
    ok(&run(dir.path(), &["simulate", "--format", "csv", "--seed", "2"], FIGURE));
    let points = fs::read_to_string(dir.path().join("out/points.csv")).unwrap();
    assert!(points.starts_with("index,r,x0,x1\n"));
    let edges = fs::read_to_string(dir.path().join("out/edges.csv")).unwrap();
    assert!(edges.starts_with("i,j\n"));
    let meta = read_json(&dir.path().join("out/simulate.config.json"));
    assert_eq!(meta["config"]["seed"], 2);
}

#[test]
fn expansion_reports_the_boolean_degree_term() {
    let dir = TempDir::new().unwrap();
    ok(&run(dir.path(), &["expansion"], r#"{"model":"boolean","d":2,"L":8}"#));
    let doc = read_json(&dir.path().join("out/expansion.json"));
    let want = 16.0 / std::f64::consts::PI * (-4.0f64).exp();
    let terms = doc["result"]["correction_terms"].as_array().unwrap();
    assert!(terms.iter().any(|t| (t["value"].as_f64().unwrap() - want).abs() < 1e-15 * want.max(1.0)));
    assert_eq!(doc["config"]["model"], "boolean");
}

#[test]
fn diagrams_match_heat_closed_forms() {
    let dir = TempDir::new().unwrap();
    ok(&run(dir.path(), &["diagrams"], r#"{"spec": {"d": 3, "family": "heat3", "L": 4}}"#));
    let doc = read_json(&dir.path().join("out/diagrams.json"));
    let l = 4.0f64;
    let a = hyperrcm::models::default_heat_amplitude(l);
    for n in 2..=4 {
        let got = doc["result"]["loops"][n.to_string()].as_f64().unwrap();
        let want = hyperrcm::diagrams::heat_loop_closed_form(l, a, n);
        assert!(((got - want) / want).abs() < 1e-3, "n={n}: {got} vs {want}");
    }
}

#[test]
fn estimate_is_thread_independent_and_compares_with_expansion() {
    let cfg = r#"{"spec": {"d": 2, "family": "boolean", "L": 2.0}, "R_list": [5, 6], "replicas": 60, "bracket": [0.3, 6], "seed": 9}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(&run(a.path(), &["estimate", "--threads", "1"], cfg));
    ok(&run(b.path(), &["estimate", "--threads", "3"], cfg));
    let fa = fs::read(a.path().join("out/estimate.json")).unwrap();
    assert_eq!(fa, fs::read(b.path().join("out/estimate.json")).unwrap());
    let doc = read_json(&a.path().join("out/estimate.json"));
    assert!(doc["result"]["comparison"]["predicted_expected_degree"].as_f64().unwrap() > 1.0);
    assert!(doc["result"]["estimate"]["expected_degree"].as_f64().unwrap() > 0.0);
}

#[test]
fn transform_round_trip_recovers_the_profile() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"op": "round_trip", "spec": {"d": 3, "family": "heat3", "L": 1}, "s_max": 9, "points": 1601, "r_max": 3, "r_points": 7}"#;
    ok(&run(dir.path(), &["transform"], cfg));
    let doc = read_json(&dir.path().join("out/transform.json"));
    for row in doc["result"].as_array().unwrap() {
        let (p, q) = (row["phi"].as_f64().unwrap(), row["recovered"].as_f64().unwrap());
        assert!(((p - q) / p).abs() < 1e-6, "{row}");
    }
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    let cfg = "{\n  \"spec\": {\"d\": 2, \"family\": \"boolean\", \"L\": 1},\n  \"lamda\": 2,\n  \"R\": 3\n}";
    let out = run(dir.path(), &["simulate"], cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("lamda"), "{err}");

    let out = run(dir.path(), &["simulate"], r#"{"spec": {"d": 2, "family": "boolean", "L": -1}, "lambda": 1, "R": 3}"#);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spec"));

    let out = run(dir.path(), &["simulate"], r#"{"spec": {"d": 2, "family": "boolean", "L": 1}, "R": 3}"#);
    assert_eq!(out.status.code(), Some(2));

    let out = bin().arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3() {
    // the crossing lies far above the bracket, so bracketing fails
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"spec": {"d": 2, "family": "boolean", "L": 1.0}, "R_list": [4], "replicas": 30, "bracket": [0.01, 0.05]}"#;
    let out = run(dir.path(), &["estimate"], cfg);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
