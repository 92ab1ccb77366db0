use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn coevolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coevolve"))
        .args(args)
        .output()
        .unwrap()
}

fn run_with(dir: &Path, cmd: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut args = cmd.to_vec();
    args.extend([
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    coevolve(&args)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_epsilon_exits_2_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["simulate"],
        "preset = \"opinion-line-16\"\n[regime]\nkind = \"fast-graph\"\n",
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("epsilon"), "{err}");
}

#[test]
fn single_rung_graph_limit_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["study", "graph-limit"],
        "preset = \"graph-limit-line\"\n[study]\nladder = [16]\n",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out/study.json").exists());
}

#[test]
fn worked_example_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["constants"],
        "preset = \"window-worked-example\"\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("out/constants.json"));
    let t_star = doc["T_star"].as_f64().unwrap();
    assert!((t_star - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(doc["verdict"], "contraction_not_guaranteed");
    assert_eq!(doc["config"]["scenario"]["horizon"], 1.0);
}

#[test]
fn zero_constants_give_unit_window() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), &["constants"], "preset = \"zero-constants\"\n");
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("out/constants.json"));
    assert!((doc["T_star"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn zero_velocity_keeps_mass_columns_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), &["simulate"], "preset = \"zero-velocity\"\n");
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("out/trajectory.csv"))
        .unwrap();
    let n = rdr
        .headers()
        .unwrap()
        .iter()
        .filter(|h| h.starts_with("rho_"))
        .count();
    let rows: Vec<Vec<String>> = rdr
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect();
    assert!(rows.len() > 2);
    for row in &rows {
        assert_eq!(row[1..=n], rows[0][1..=n]);
    }
}

#[test]
fn opinion_line_audit_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(dir.path(), &["simulate"], "preset = \"opinion-line-16\"\n");
    assert_eq!(out.status.code(), Some(0));
    let audit = read_json(&dir.path().join("out/audit.json"));
    assert!(audit["max_mass_drift"].as_f64().unwrap() <= 1e-10);
    assert_eq!(audit["tv_within_envelope"], true);
    assert_eq!(audit["eta_sup_within_envelope"], true);
    let summary = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["config"]["scenario"]["integrator"]["dt"], 1e-3);
}

#[test]
fn slow_study_with_static_rung() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["study", "slow", "--jobs", "2"],
        "preset = \"slow-line-20\"\n[study]\nepsilons = [0.1, 0.01, 0.0]\n",
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = read_json(&dir.path().join("out/study.json"));
    let rungs = doc["study"]["rungs"].as_array().unwrap();
    assert_eq!(rungs.len(), 3);
    assert_eq!(rungs[2]["error"].as_f64().unwrap(), 0.0);
    assert!(dir.path().join("out/rung_02.csv").exists());
}

#[test]
fn fast_study_slope_in_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["study", "fast"],
        "preset = \"fast-line-20\"\n",
    );
    assert_eq!(out.status.code(), Some(0));
    let doc = read_json(&dir.path().join("out/study.json"));
    let slope = doc["gates"]["slope"]["value"].as_f64().unwrap();
    assert!((0.85..=1.15).contains(&slope), "{slope}");
}

#[test]
fn failed_required_gate_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["study", "slow"],
        "preset = \"slow-line-20\"\n[study]\nepsilons = [0.1, 0.03, 0.01, 0.003]\nslope_gate = { min = 2.0, max = 3.0, required = true }\n",
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        read_json(&dir.path().join("out/study.json"))["gates"]["slope"]["passed"],
        false
    );
}

#[test]
fn divergence_keeps_truncated_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(
        dir.path(),
        &["simulate"],
        "preset = \"opinion-line-16\"\nmass_bound = 1e300\n[initial]\nrho0_values = [1e300, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]\neta0 = \"constant(1e10)\"\n",
    );
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert!(text.lines().last().unwrap().starts_with("# truncated"));
    assert_eq!(
        read_json(&dir.path().join("out/summary.json"))["status"],
        "diverged"
    );
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "preset = \"picard-10\"\n").unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("o{k}"));
        let o = coevolve(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
        ]);
        assert!(o.status.success());
        texts.push((
            fs::read(out.join("trajectory.csv")).unwrap(),
            fs::read(out.join("summary.json")).unwrap(),
        ));
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn presets_list_names_every_preset() {
    let out = coevolve(&["presets", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for (name, _) in coevolve::preset_names() {
        assert!(text.contains(name));
    }
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(coevolve(&["simulate", "--bogus"]).status.code(), Some(2));
}
