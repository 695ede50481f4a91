use std::path::Path;
use std::process::{Command, Output};

fn qrl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrl")).args(args).current_dir(dir).output().expect("spawn qrl")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn help_and_usage_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qrl(&["--help"], dir.path()).status.code(), Some(0));
    for sub in
        ["gen", "assign", "classify", "optimize", "envelope", "adversarial", "montecarlo", "experiment", "summarize"]
    {
        let out = qrl(&[sub, "--help"], dir.path());
        assert_eq!(out.status.code(), Some(0), "{sub} --help");
    }
    let out = qrl(&["adversarial", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(qrl(&["nope"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrl(&["assign", "--graph", "missing.json", "--out", "x.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn adversarial_bound_check_reports_21() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrl(&["adversarial", "--k", "2", "--n", "2", "--mode", "bound-check"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["bound"], 21.0);
    assert_eq!(v["achieved"], 21.0);
}

#[test]
fn gen_assign_classify_optimize_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out =
        qrl(&["gen", "--family", "grid", "--rows", "5", "--cols", "5", "--out", "g.json", "--pairs-out", "p.csv"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["nodes"], 25);

    assert!(qrl(&["assign", "--graph", "g.json", "--seed", "4", "--out", "gc.json"], d).status.success());

    let out = qrl(
        &["classify", "--graph", "gc.json", "--pairs", "p.csv", "--p", "0.5", "--alpha", "0.8", "--out", "v.csv"],
        d,
    );
    assert!(out.status.success());
    let counts = &json(&out)["counts"];
    assert_eq!(counts["N_tot"], 625);
    let verdicts = std::fs::read_to_string(d.join("v.csv")).unwrap();
    assert!(verdicts.starts_with("src,dst,verdict\n"));
    assert_eq!(verdicts.lines().count(), 626);

    let args = [
        "optimize",
        "--graph",
        "gc.json",
        "--pairs",
        "p.csv",
        "--strategy",
        "dichotomy-endpoints",
        "--max-probes",
        "10",
        "--alpha",
        "0.8",
        "--out",
        "trace.csv",
    ];
    let out = qrl(&args, d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(d.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("probe_idx,p,N_y,N_n,N_u,pruned_1,pruned_2"));
    let probes = lines.count();
    assert!((2..=10).contains(&probes));
    let v = json(&out);
    assert!(v["multiple"]["N_y"].as_u64() >= v["single"]["N_y"].as_u64());
}

#[test]
fn bad_strategy_budget_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    qrl(&["gen", "--family", "three-path", "--out", "g.json", "--pairs-out", "p.csv"], d);
    // 101 grid points do not fit in 10 probes
    let out = qrl(
        &[
            "optimize",
            "--graph",
            "g.json",
            "--pairs",
            "p.csv",
            "--strategy",
            "grid",
            "--tolerance",
            "0.01",
            "--constraints",
            "1;1",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn experiment_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{
        "topology": { "kind": "grid", "rows": 4, "cols": 4 },
        "k": 2,
        "cost_model": { "dims": [
            { "dist": "normal", "mean": 7.5, "variance": 1.25 },
            { "dist": "discrete-uniform", "values": [0.01, 0.02, 0.03, 0.04, 0.05] } ], "seed": 0 },
        "alphas": [0.6, 0.8],
        "seeds": [1, 2],
        "strategy": { "kind": "dichotomy-endpoints" },
        "modes": ["single-p-all-to-all", "multiple-p-all-to-all"]
    }"#;
    std::fs::write(d.join("cfg.json"), config).unwrap();
    assert!(qrl(&["experiment", "--config", "cfg.json", "--out", "a.csv"], d).status.success());
    assert!(qrl(&["experiment", "--config", "cfg.json", "--out", "b.csv"], d).status.success());
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("topology,pair_policy,k,alpha,seed,mode,p_opt,N_tot,N_y,N_n,N_u,R,probes,wall_ms\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 2);

    let out = qrl(&["summarize", "--results", "a.csv"], d);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);
}

#[test]
fn experiment_rejects_bad_config_fields() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{
        "topology": { "kind": "grid", "rows": 4, "cols": 4 },
        "k": 2,
        "cost_model": { "dims": [ { "dist": "uniform", "lo": 0, "hi": 1 }, { "dist": "uniform", "lo": 0, "hi": 1 } ], "seed": 0 },
        "alphas": [3.0],
        "seeds": [1],
        "strategy": { "kind": "dichotomy" },
        "modes": ["multiple-p-all-to-all"]
    }"#;
    std::fs::write(d.join("cfg.json"), config).unwrap();
    let out = qrl(&["experiment", "--config", "cfg.json", "--out", "a.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alphas"));
}

#[test]
fn large_topologies_need_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let config = r#"{
        "topology": { "kind": "grid", "rows": 45, "cols": 45 },
        "k": 2,
        "cost_model": { "dims": [ { "dist": "uniform", "lo": 0, "hi": 1 }, { "dist": "uniform", "lo": 0, "hi": 1 } ], "seed": 0 },
        "alphas": [0.5],
        "seeds": [1],
        "strategy": { "kind": "dichotomy" },
        "modes": ["multiple-p-all-to-all"]
    }"#;
    std::fs::write(d.join("cfg.json"), config).unwrap();
    let out = qrl(&["experiment", "--config", "cfg.json", "--out", "a.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--large"));
}

#[test]
fn montecarlo_symmetric_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrl(&["montecarlo", "--c1", "0.3", "--c2", "0.3", "--samples", "20000", "--grid", "11"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["formula_p"], 0.5);
    assert!((v["argmax_p"].as_f64().unwrap() - 0.5).abs() <= 0.1 + 1e-9);
}

#[test]
fn adversarial_routing_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qrl(&["adversarial", "--k", "2", "--n", "3", "--mode", "theorem2"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&out)["fraction"], 1.0);
    let out = qrl(
        &["adversarial", "--k", "2", "--n", "3", "--mode", "randomized", "--trials", "200", "--seed", "1"],
        dir.path(),
    );
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["fraction"].as_f64().unwrap() >= 0.5);
    assert!(v["stderr"].as_f64().is_some());
}
