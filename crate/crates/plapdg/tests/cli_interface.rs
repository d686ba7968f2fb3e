//! External-interface tests driven through the compiled binary: config
//! files, JSON check reports, mesh-file input and exit codes.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_plapdg")
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("plapdg_cli_{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn verify_emits_json_reports_and_clean_exit() {
    let dir = work_dir("verify");
    let out = dir.join("reports.json");
    let status = Command::new(bin())
        .args(["verify", "--lemma", "markov", "--r", "3", "--samples", "50", "--seed", "9"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "verify must exit 0 when nothing is violated");
    let text = std::fs::read_to_string(&out).unwrap();
    let reports: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4, "one report per degree 0..=3");
    for report in reports {
        assert_eq!(report["lemma"], "markov");
        assert_eq!(report["samples"], 50);
        assert_eq!(report["violations"], 0);
        assert!(report["max_ratio"].as_f64().unwrap() <= 1.0);
        assert_eq!(report["seed"], 9);
    }
}

#[test]
fn solve_accepts_a_mesh_file() {
    let dir = work_dir("meshfile");
    let mesh =
        plapdg::mesh::build_structured_mesh(plapdg::mesh::Rect::UNIT, 0.5).unwrap();
    let mesh_path = dir.join("mesh.json");
    plapdg::mesh::write_json(&mesh, &mesh_path).unwrap();
    let output = Command::new(bin())
        .args(["solve", "--p", "2.5", "--r", "1", "--newton-tol", "1e-9"])
        .arg("--mesh")
        .arg(&mesh_path)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["n_dofs"].as_u64().unwrap(), 3 * mesh.n_elements() as u64);
    assert!(summary["quasi_norm_error"].as_f64().unwrap() > 0.0);
    let stages = summary["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 2, "continuation 2 -> 2.5");
}

#[test]
fn study_runs_from_a_toml_config() {
    let dir = work_dir("toml");
    let config_path = dir.join("study.toml");
    std::fs::write(
        &config_path,
        r#"
study = "h-version"
example = 1
p_values = ["2.5"]
r_values = [1]
levels = [0, 1]
theta = -1.0
penalty_mode = "practical"
penalty_scale = 10.0
timing = false
"#,
    )
    .unwrap();
    let out_dir = dir.join("out");
    let status = Command::new(bin())
        .arg("study-h")
        .arg("--config")
        .arg(&config_path)
        .arg("--out-dir")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let errors = std::fs::read_to_string(out_dir.join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 3, "header plus two levels");
    assert!(out_dir.join("slopes.csv").exists());
    assert!(out_dir.join("config.json").exists());
    assert!(out_dir.join("study_h_quasi_norm.svg").exists());
    assert!(out_dir.join("study_h_broken_norm.svg").exists());
    // The config echo must reflect the file, not the defaults.
    let echoed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("config.json")).unwrap())
            .unwrap();
    assert_eq!(echoed["p_values"], serde_json::json!(["2.5"]));
    assert_eq!(echoed["timing"], serde_json::json!(false));
}

#[test]
fn invalid_inputs_exit_nonzero() {
    let out = Command::new(bin())
        .args(["solve", "--p", "1.5"])
        .output()
        .unwrap();
    assert!(!out.status.success(), "p < 2 must be rejected");
    let out = Command::new(bin())
        .args(["verify", "--lemma", "nonsense"])
        .output()
        .unwrap();
    assert!(!out.status.success());
}
