use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stablegw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stablegw")).args(args).env_remove("STABLEGW_THREADS").output().expect("spawn")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn solve_pool(dir: &Path, name: &str) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let out = stablegw(&["gamma", "--alpha", "2.0", "--pool-size", "20000", "--seed", "7", "--out", &p]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn gamma_writes_pool_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let p = solve_pool(dir.path(), "pool.bin");
    assert_eq!(std::fs::metadata(&p).unwrap().len(), 8 * 20000);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(format!("{p}.json")).unwrap()).unwrap();
    assert_eq!(meta["pool_size"], 20000);
    assert_eq!(meta["stop_rule"], "converged");
}

#[test]
fn gamma_report_is_versioned_and_seeded() {
    let out = stablegw(&["gamma", "--alpha", "1.5", "--pool-size", "5000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["seed"], 3);
    assert_eq!(v["command"], "gamma");
    assert!(v["result"]["min"].as_f64().unwrap() >= 1.0);
}

#[test]
fn beta_on_saved_pool_reports_three_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let p = solve_pool(dir.path(), "pool.bin");
    let out = stablegw(&["beta", "--pool", &p, "--method", "all", "--samples", "50000", "--kappa-table", "20000"]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let names: Vec<&str> = v["result"]["reports"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["beta_value", "beta_formula1", "beta_formula2"]);
    assert!(v["result"]["agreement"].is_boolean());
}

#[test]
fn csv_pool_round_trips_through_beta() {
    let dir = tempfile::tempdir().unwrap();
    let p = solve_pool(dir.path(), "pool.csv");
    assert!(std::fs::read_to_string(&p).unwrap().starts_with("conductance\n"));
    let out = stablegw(&["beta", "--pool", &p, "--method", "value", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("name,alpha,point,ci_low,ci_high,std_error,n_samples,seed\nbeta_value,2,"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(stablegw(&["gamma", "--bogus"]).status.code(), Some(2));
    assert_eq!(stablegw(&["gamma", "--alpha", "2.5", "--pool-size", "5000"]).status.code(), Some(2));
    assert_eq!(stablegw(&["gamma", "--alpha", "1.0", "--pool-size", "5000"]).status.code(), Some(2));
    assert_eq!(stablegw(&["beta", "--pool", "/nonexistent/pool.bin"]).status.code(), Some(2));
    assert_eq!(stablegw(&["ode"]).status.code(), Some(2));
    assert_eq!(stablegw(&["frobnicate"]).status.code(), Some(2));
    let out = stablegw(&["verify", "--alpha", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_env_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_stablegw")).args(["gamma", "--alpha", "2", "--pool-size", "5000"]).env("STABLEGW_THREADS", "many").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "seed = 11\nalpha = 1.8\npool_size = 4000\n").unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&stablegw(&["gamma", "--config", c]));
    assert_eq!(v["seed"], 11);
    assert_eq!(v["result"]["alpha"], 1.8);
    assert_eq!(v["result"]["pool_size"], 4000);
    let v = json(&stablegw(&["gamma", "--config", c, "--seed", "12", "--alpha", "2"]));
    assert_eq!(v["seed"], 12);
    assert_eq!(v["result"]["alpha"], 2.0);
    std::fs::write(&cfg, "sede = 1\n").unwrap();
    assert_eq!(stablegw(&["gamma", "--config", c]).status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical_across_thread_counts() {
    let args = ["speed", "--alpha-grid", "1.5,2.0", "--pool-size", "8000", "--seed", "5"];
    let a = stablegw(&args).stdout;
    let b = stablegw(&args).stdout;
    let mut more = args.to_vec();
    more.extend(["--threads", "3"]);
    let c = stablegw(&more).stdout;
    let d = Command::new(env!("CARGO_BIN_EXE_stablegw")).args(args).env("STABLEGW_THREADS", "2").output().unwrap().stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a, d);
}

#[test]
fn discrete_scan_csv_has_documented_columns() {
    let out = stablegw(&["discrete", "--alpha", "2", "--n-list", "8,16", "--replicas", "200", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,estimate,stderr,replicas,seed,attempts,ratio,ratio_se");
    assert!(lines.next().unwrap().starts_with("8,"));
    let out = stablegw(&["discrete", "--alpha", "2", "--n-list", "8,16", "--replicas", "200", "--scan", "moments", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,estimate,stderr,replicas,seed,m_1,m_1.5,se_1,se_1.5\n"), "{text}");
}

#[test]
fn tree_dumps_are_csv() {
    let out = stablegw(&["ctgw", "--alpha", "1.5", "--r", "2", "--dump"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("id,parent,birth,death\n0,,0,"));
    let out = stablegw(&["discrete", "--alpha", "2", "--n-list", "5", "--scan", "dump"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("id,parent,generation,resistance\n0,,0,"));
}

#[test]
fn ctgw_statistics_and_table_output() {
    let out = stablegw(&["ctgw", "--alpha", "2", "--r", "1", "--replicas", "500", "--format", "table"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ctgw (seed 1)\n"));
    assert!(text.contains("level_mean.normalized_mean"));
}

#[test]
fn ode_identities_and_couple_run() {
    let v = json(&stablegw(&["ode", "--alpha", "2", "--pool-size", "5000", "--control"]));
    assert_eq!(v["result"]["residuals"].as_array().unwrap().len(), 3);
    // the all-ones control has zero spread, so z is infinite and serialises as null
    for c in v["result"]["control"].as_array().unwrap() {
        assert!(c["z"].as_f64().map_or(c["z"].is_null(), |z| z.abs() > 10.0), "{c}");
        assert!(c["residual"].as_f64().unwrap().abs() > 0.05);
    }
    let out = stablegw(&["identities", "--alpha", "2", "--pool-size", "5000", "--samples", "20000", "--kappa-table", "10000", "--r-list", "1,2"]);
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let v = json(&out);
    assert_eq!(v["result"]["kappa_consistency"].as_array().unwrap().len(), 2);
    assert!((v["result"]["c0"].as_f64().unwrap() - 8.632497659788045).abs() < 1e-12);
    let v = json(&stablegw(&["couple", "--alpha-grid", "1.3,2.0", "--pool-size", "5000", "--grid-points", "1000"]));
    assert_eq!(v["result"]["coupling"]["violations"], 0);
}

#[test]
fn output_file_receives_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ode.json");
    let out = stablegw(&["ode", "--alpha", "2", "--pool-size", "5000", "--out", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    assert_eq!(v["command"], "ode");
}
