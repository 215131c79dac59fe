use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn conecap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conecap")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = conecap(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value) -> f64 {
    v.as_str().expect("numbers are strings").parse().expect("decimal")
}

fn nums(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(num).collect()
}

#[test]
fn spectrum_group_one_in_window() {
    let doc = json(&["spectrum", "--n", "2", "--k", "1", "--a", "1", "--b", "1", "--C", "3", "--top", "10"]);
    let g = nums(&doc["result"]["spectrum"]["group_i"]);
    assert_eq!(g.len(), 3);
    for (j, v) in g.iter().enumerate() {
        assert!((v - (j + 1) as f64 * PI).abs() < 1e-9);
    }
    assert_eq!(doc["status"], "ok");
    assert_eq!(doc["run_config"]["seed"], 0);
}

#[test]
fn spectrum_window_edges() {
    let doc = json(&["spectrum", "--top", "1", "--labels", "0"]);
    assert!(doc["result"]["spectrum"]["group_i"].as_array().unwrap().is_empty());
    let doc = json(&["spectrum", "--a", "2", "--top", "15", "--labels", "0"]);
    let g = nums(&doc["result"]["spectrum"]["group_i"]);
    assert_eq!(g.len(), 1);
    assert!((g[0] - 4.0 * PI).abs() < 1e-12);
}

#[test]
fn spectrum_budget_overflow_exits_3() {
    let out = conecap(&["spectrum", "--labels", "100", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["spectrum"]["scan"]["partial"], true);
    assert_eq!(doc["result"]["spectrum"]["scan"]["labels"], 10);
}

#[test]
fn invalid_spectrum_parameters_exit_2() {
    for args in [["spectrum", "--k", "2"], ["spectrum", "--a", "-1"]] {
        assert_eq!(conecap(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn hyperboloid_capacity_is_pi_a_squared() {
    for b in ["0.1", "1", "10"] {
        let doc = json(&["capacity", "--hyperboloid", "--a", "1", "--b", b]);
        let w = &doc["result"]["capacity"];
        assert_eq!(num(&w["lo"]), PI);
        assert_eq!(num(&w["hi"]), PI);
        assert_eq!(w["exact"], true);
    }
    let doc = json(&["capacity", "--hyperboloid", "--a", "3"]);
    assert_eq!(num(&doc["result"]["capacity"]["lo"]), 9.0 * PI);
}

#[test]
fn capacity_needs_a_domain() {
    assert_eq!(conecap(&["capacity"]).status.code(), Some(2));
    assert_eq!(conecap(&["capacity", "--hyperboloid", "--k", "2"]).status.code(), Some(2));
}

#[test]
fn worked_sandwich() {
    let doc = json(&["sandwich", "--max", "1", "--rho1", "3", "--min-inner", "0.5", "--rho0", "0.1"]);
    let r = &doc["result"];
    // T = 1/(M(1 + rho1)), a^2 = T/2, b^2 = 4 rho1 a^2, a'^2 = 2/m, b'^2 = a'^2 rho0/2.
    let t: f64 = 1.0 / 4.0;
    let c = &r["certificate"];
    assert!((num(&c["t"]) - t).abs() < 1e-15);
    assert!((num(&c["inner"]["a"]).powi(2) - t / 2.0).abs() < 1e-15);
    assert!((num(&c["inner"]["b"]).powi(2) - 1.5).abs() < 1e-14);
    assert!((num(&c["outer"]["a"]).powi(2) - 4.0).abs() < 1e-14);
    assert!((num(&c["outer"]["b"]).powi(2) - 0.2).abs() < 1e-14);
    assert!(nums(&r["margins"]).iter().all(|m| *m > 0.0));
    assert_eq!(r["audit"]["samples"], 100_000);
    assert_eq!(r["audit"]["inner_violations"], 0);
    assert_eq!(r["audit"]["outer_violations"], 0);
    assert_eq!(r["meta_audit"]["ok"], true);
}

#[test]
fn sandwich_rejects_zero_minimum() {
    let out = conecap(&["sandwich", "--min-inner", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not in g+"));
}

#[test]
fn sandwich_parse_error_exits_2() {
    let out = conecap(&["sandwich", "--hamiltonian", "bump(rho; 1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sandwich_false_support_data_fails_audit() {
    // Declared maximum far below the true one.
    let out = conecap(&["sandwich", "--hamiltonian", "5*bump(rho; 1, 3)", "--max", "1", "--min-inner", "0.5"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn scaling_metric_distances() {
    let doc = json(&["metric", "--family", "scaling", "--s", "2", "--flows", "1", "--grid", "2000"]);
    let q = &doc["result"]["quotient"];
    assert_eq!(q["classes"].as_array().unwrap().len(), 3);
    let l2 = 2f64.ln();
    let expect = [((0, 1), l2), ((0, 2), 2.0 * l2), ((1, 2), l2)];
    for (d, ((i, j), v)) in q["distances"].as_array().unwrap().iter().zip(expect) {
        assert_eq!((d["i"].as_u64().unwrap(), d["j"].as_u64().unwrap()), (i, j));
        assert!((num(&d["lo"]) - v).abs() < 1e-9);
        assert!((num(&d["hi"]) - v).abs() < 1e-9);
    }
    assert_eq!(q["antisymmetric"], true);
}

#[test]
fn squeeze_sweep_is_impossible() {
    let doc = json(&["squeeze", "--a", "1", "--b", "1", "--s", "1.5", "--candidates", "5"]);
    let rep = &doc["result"]["report"];
    assert_eq!(rep["verdict"], "IMPOSSIBLE");
    let cands = rep["candidates"].as_array().unwrap();
    assert_eq!(cands.len(), 5);
    for c in cands {
        let z = nums(&c["witness_point"]);
        let w = nums(&c["image"]);
        // V_1^{1,1} in R^4 with coordinates (x1, x2, y1, y2): x1^2 + x2^2 + y1^2 - y2^2 < 1.
        let level = |p: &[f64]| p[0] * p[0] + p[1] * p[1] + p[2] * p[2] - p[3] * p[3];
        assert!(level(&z) < 1.5 * 1.5);
        assert!(level(&w) >= 1.0);
    }
    let t = &rep["theoretical"];
    assert!(num(&t["s2w_lo"]) > num(&t["w_hi"]));
}

#[test]
fn smoothing_audit_passes() {
    let doc = json(&["smoothing-audit", "--samples", "200", "--points", "12"]);
    assert_eq!(doc["result"]["passed"], true);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        vec!["spectrum", "--labels", "200"],
        vec!["sandwich", "--samples", "20000"],
        vec!["squeeze", "--candidates", "2"],
        vec!["--seed", "7", "smoothing-audit", "--samples", "50", "--points", "3"],
    ]
    .into_iter()
    .enumerate()
    {
        // The output path is part of the run configuration, so both runs use one.
        let path = dir.path().join(format!("{i}.json"));
        let mut full = args.clone();
        full.extend(["--out", path.to_str().unwrap()]);
        let mut bytes = Vec::new();
        for _ in 0..2 {
            assert!(conecap(&full).status.success());
            bytes.push(std::fs::read(&path).unwrap());
        }
        assert_eq!(bytes[0], bytes[1], "{args:?}");
    }
}

#[test]
fn spectrum_writes_csv_and_json_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spec.csv");
    let out = conecap(&["spectrum", "--labels", "50", "--format", "csv", "--out", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# conecap "));
    let cfg_line = lines.next().unwrap();
    let cfg: Value = serde_json::from_str(cfg_line.strip_prefix("# run_config ").unwrap()).unwrap();
    assert_eq!(cfg["params"]["labels"], 50);
    assert!(text.contains("group,index_or_label,action,bound_flag\n"));
    assert!(text.contains("i,1,3.1415926535897931e0,false\n"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("spec.json")).unwrap()).unwrap();
    assert_eq!(summary["run_config"], cfg);
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("run.toml"),
        "command = \"spectrum\"\n[params]\nC = 3\ntop = 10\nlabels = 0\n",
    );
    let from_file = conecap(&["--config", &cfg]);
    let from_flags = conecap(&["spectrum", "--C", "3", "--top", "10", "--labels", "0"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn config_overrides_and_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("run.toml"),
        "command = \"smoothing-audit\"\nseed = 3\n[tolerances]\nflow_step = 2e-3\n[params]\nsamples = 20\npoints = 3\n",
    );
    let doc = json(&["--config", &cfg, "--seed", "4"]);
    assert_eq!(doc["run_config"]["seed"], 4);
    assert_eq!(doc["run_config"]["tolerances"]["flow_step"], 2e-3);
    assert_eq!(doc["run_config"]["tolerances"]["abs"], 1e-10);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        "command = \"capacity\"\ncolour = 1\n",
        "command = \"capacity\"\n[params]\nhyperboloid = true\nradius = 2\n",
        "command = \"capacity\"\n[tolerances]\nslack = 1\n",
        "command = \"volume\"\n",
    ] {
        let cfg = write(&dir.path().join("bad.toml"), text);
        let out = conecap(&["--config", &cfg]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
}

#[test]
fn config_and_subcommand_are_exclusive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir.path().join("run.toml"), "command = \"capacity\"\n[params]\nhyperboloid = true\n");
    assert!(conecap(&["--config", &cfg]).status.success());
    assert_eq!(conecap(&["--config", &cfg, "capacity", "--hyperboloid"]).status.code(), Some(2));
    assert_eq!(conecap(&[]).status.code(), Some(2));
}
