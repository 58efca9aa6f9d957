use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = r#"
name = "tiny"
replicates = 3
base_seed = 5
estimators = ["equal_gibbs", "double_gibbs", "double_map"]
balance_replicates = 10

[population]
units_per_cluster = 10
mu0 = 1.0
sigma_a0 = 2.0
sigma_eps0 = 3.0

[grid]
sizes = [[40, 10]]
n_k = [4]
cluster_designs = ["quadratic_symmetric"]
unit_designs = ["quadratic", "srs"]

[chain]
n_iterations = 300
n_burnin = 100
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svyanova")).args(args).output().unwrap()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), SCENARIO);
    let outputs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let o = run(&["simulate", "--scenario", &scenario, "--out", out.to_str().unwrap(), "--workers", "2"]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            out
        })
        .collect();
    let estimates = std::fs::read_to_string(outputs[0].join("estimates.csv")).unwrap();
    // 2 scenarios x 3 estimators x 3 parameters x 3 replicates
    assert_eq!(estimates.lines().count(), 1 + 54);
    for file in ["estimates.csv", "quantiles.csv", "reference.csv", "replicates.csv"] {
        assert_eq!(
            std::fs::read(outputs[0].join(file)).unwrap(),
            std::fs::read(outputs[1].join(file)).unwrap(),
            "{file}"
        );
    }
    assert!(outputs[0].join("reports.json").exists());
}

#[test]
fn invalid_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    // more sampled clusters than exist
    let scenario = write_scenario(dir.path(), &SCENARIO.replace("[[40, 10]]", "[[40, 50]]"));
    let o = run(&["simulate", "--scenario", &scenario, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!String::from_utf8_lossy(&o.stderr).is_empty());

    let o = run(&["simulate", "--scenario", "/nonexistent.cfg"]);
    assert!(!o.status.success());
    let o = run(&["simulate", "--scenario", &write_scenario(dir.path(), SCENARIO), "--desk"]);
    assert!(!o.status.success(), "no [desk] section");
}

#[test]
fn diagnose_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), SCENARIO);
    let out = dir.path().join("diag");
    let o = run(&["diagnose", "--scenario", &scenario, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let info = std::fs::read_to_string(out.join("informativeness.csv")).unwrap();
    assert_eq!(info.lines().next().unwrap(), "design,source,variable,q05,q50,q95");
    assert_eq!(info.lines().count(), 1 + 2 * 4);
    let balance = std::fs::read_to_string(out.join("balance.csv")).unwrap();
    assert_eq!(balance.lines().count(), 1 + 2 * 40);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
}

#[test]
fn estimate_on_exported_sample() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("sample.csv");
    let mut csv = String::from("cluster_id,unit_id,y,pi_h,pi_l_given_h\n");
    for k in 0..8 {
        for j in 0..5 {
            let y = 1.0 + (k as f64 - 3.5) * 0.8 + ((j * 7 + k * 3) % 5) as f64 - 2.0;
            csv.push_str(&format!("{k},{j},{y},0.2,0.5\n"));
        }
    }
    std::fs::write(&data, csv).unwrap();
    let data = data.to_str().unwrap();

    let draws = dir.path().join("draws.csv");
    let o = run(&[
        "estimate",
        "--data",
        data,
        "--weights-mode",
        "double",
        "--method",
        "gibbs",
        "--iterations",
        "600",
        "--draws-out",
        draws.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["mode"], "double");
    assert!(summary["point_estimates"]["sigma_eps"].as_f64().unwrap() > 0.0);
    let header = std::fs::read_to_string(&draws).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with("iteration,mu,sigma_a,sigma_eps,a_1"));

    for method in ["integrated", "map"] {
        let o = run(&["estimate", "--data", data, "--weights-mode", "single", "--method", method, "--iterations", "600"]);
        assert!(o.status.success(), "{method}: {}", String::from_utf8_lossy(&o.stderr));
        let s: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(s["method"], method);
    }

    let o = run(&["estimate", "--data", data, "--weights-mode", "triple", "--method", "map"]);
    assert!(!o.status.success());
}
