use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pagexplain::MixedGraph;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pagexplain")).current_dir(dir).args(args).output().unwrap()
}

fn run_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pagexplain"));
    c.current_dir(dir).args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn manifest(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn simulate_writes_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run(p, &["simulate", "--n", "5000", "--seed", "1", "--out", "d.csv"]));
    let text = fs::read_to_string(p.join("d.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("H,V,R,Yhat"));
    assert_eq!(lines.count(), 5000);
    assert!(text.lines().skip(1).all(|l| l.split(',').all(|v| v == "0" || v == "1")));

    ok(&run(p, &["simulate", "--n", "300", "--include-c", "--out", "c.csv"]));
    assert!(fs::read_to_string(p.join("c.csv")).unwrap().starts_with("H,V,C,R,Yhat\n"));
}

#[test]
fn malformed_csv_is_an_input_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.csv"), "a,b\n0,1\n1\n").unwrap();
    fs::write(p.join("bad.csv.schema"), "a:cat:2\nb:cat:2\n").unwrap();
    let out = run(p, &["discover", "--data", "bad.csv", "--out", "g.dot"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!p.join("g.dot").exists());
    assert!(!p.join("g.dot.manifest.json").exists());

    let missing = run(p, &["discover", "--data", "nope.csv", "--out", "g.dot"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn contradictory_knowledge_exits_with_knowledge_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run(p, &["simulate", "--n", "500", "--out", "d.csv"]));
    fs::write(p.join("k.txt"), "forbid H V\nrequire V H\n").unwrap();
    let out = run(p, &["discover", "--data", "d.csv", "--knowledge", "k.txt", "--out", "g.dot"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!p.join("g.dot").exists());
}

#[test]
fn protocol_parameters_are_echoed_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run(p, &["simulate", "--n", "2000", "--seed", "3", "--out", "d.csv"]));
    ok(&run(p, &["discover", "--data", "d.csv", "--target", "Yhat", "--alpha", "0.05", "--max-cond-size", "4", "--out", "g.dot"]));
    let m = manifest(p, "g.dot.manifest.json");
    assert_eq!(m["command"]["name"], "discover");
    assert_eq!(m["command"]["fci"]["alpha"], 0.05);
    assert_eq!(m["command"]["fci"]["max_cond_size"], 4);
    assert!(m["inputs"]["d.csv"].as_str().unwrap().len() == 64);
    let dot = fs::read_to_string(p.join("g.dot")).unwrap();
    assert!(MixedGraph::from_dot(&dot).is_ok());
    let diag: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("g.dot.diagnostics.json")).unwrap()).unwrap();
    assert!(diag["diagnostics"]["tests"].as_u64().unwrap() > 0);
    assert_eq!(diag["diagnostics"]["edges_initial"], 6);
}

#[test]
fn environment_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run_env(p, &["simulate", "--n", "300", "--out", "d.csv"], &[("PAGEXPLAIN_SEED", "9")]));
    assert_eq!(manifest(p, "d.csv.manifest.json")["seeds"]["seed"], 9);
    ok(&run_env(p, &["discover", "--data", "d.csv", "--out", "g.dot"], &[("PAGEXPLAIN_ALPHA", "0.01")]));
    assert_eq!(manifest(p, "g.dot.manifest.json")["command"]["fci"]["alpha"], 0.01);
}

#[test]
fn single_replicate_frequencies_are_zero_or_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run(p, &["simulate", "--n", "1000", "--out", "d.csv"]));
    ok(&run(p, &["stability", "--data", "d.csv", "--target", "Yhat", "--replicates", "1", "--out-prefix", "s"]));
    let csv = fs::read_to_string(p.join("s.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("feature,def_cause,poss_cause,confounded,none,cause_frequency"));
    let mut rows = 0;
    for line in lines {
        rows += 1;
        for v in line.split(',').skip(1) {
            assert!(v == "0.000000" || v == "1.000000", "{line}");
        }
    }
    assert_eq!(rows, 3);
}

#[test]
fn oracle_without_latents_has_no_bidirected_edges() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for (name, edges) in [("chain", vec!["A --> B", "B --> C"]), ("collider", vec!["A --> B", "C --> B"])] {
        let g = MixedGraph::from_edge_specs(&["A", "B", "C"], pagexplain::GraphKind::Dag, &edges).unwrap();
        fs::write(p.join(format!("{name}.json")), g.to_json()).unwrap();
        let out_name = format!("{name}.out.json");
        ok(&run(p, &["oracle", "--truth", &format!("{name}.json"), "--format", "json", "--out", &out_name]));
        let pag = MixedGraph::from_json(&fs::read_to_string(p.join(&out_name)).unwrap()).unwrap();
        let mut got = pag.edge_strings();
        got.sort();
        let want = if name == "chain" { vec!["A o-o B", "B o-o C"] } else { vec!["A o-> B", "B <-o C"] };
        assert_eq!(got, want);
        assert!(!got.iter().any(|e| e.contains("<->")));
    }
}

#[test]
fn unknown_observed_node_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["oracle", "--truth", "fig4a", "--observe", "H,Q", "--out", "o.dot"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o.dot").exists());
}

#[test]
fn replay_reproduces_and_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(&run(p, &["simulate", "--n", "800", "--seed", "4", "--out", "d.csv"]));
    ok(&run(p, &["discover", "--data", "d.csv", "--target", "Yhat", "--out", "g.dot"]));
    let before = fs::read(p.join("g.dot")).unwrap();
    ok(&run(p, &["replay", "g.dot.manifest.json"]));
    assert_eq!(fs::read(p.join("g.dot")).unwrap(), before);
    ok(&run(p, &["replay", "d.csv.manifest.json"]));

    ok(&run(p, &["simulate", "--n", "800", "--seed", "5", "--out", "d.csv"]));
    let out = run(p, &["replay", "g.dot.manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["--threads", "0", "oracle", "--truth", "fig4a", "--out", "o.dot"]);
    assert_eq!(out.status.code(), Some(2));
}
