//! End-to-end runs of the `deaorient` binary.

use std::fs;
use std::process::Command;

const TABLE1: &str = "dmu,i:x1,i:x2,o:y1,o:y2
A,1,1,4,4
B,1,2,1,2
C,1,2,2,1
D,2,1,1,2
E,2,1,2,1
";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deaorient"))
}

fn write_dataset(dir: &tempfile::TempDir, content: &str) -> std::path::PathBuf {
    let path = dir.path().join("data.csv");
    fs::write(&path, content).unwrap();
    path
}

#[test]
fn eval_reproduces_the_benchmark_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);
    let json_path = dir.path().join("report.json");
    let out = bin()
        .args(["eval", "--data"])
        .arg(&data)
        .args(["--model", "both", "--out-json"])
        .arg(&json_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    let lo_rows = runs[0]["rows"].as_array().unwrap();
    let b = &lo_rows[1];
    assert_eq!(b["dmu"], "B");
    let beta = b["evaluation"]["beta"].as_f64().unwrap();
    assert!((beta - 1.0 / 3.0).abs() < 1e-9);
    let rho = b["evaluation"]["rho"].as_f64().unwrap();
    assert!((rho - 0.5).abs() < 1e-9);
    let qo_rows = runs[1]["rows"].as_array().unwrap();
    let beta_q = qo_rows[1]["evaluation"]["beta"].as_f64().unwrap();
    assert!((beta_q - (1.0 - 0.5f64.sqrt())).abs() < 1e-7);

    // Table to stdout carries the same numbers at 6 decimals.
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("lo,B,0.333333,0.500000")));
    assert!(table.lines().any(|l| l.starts_with("qo,B,0.292893,0.500000")));
}

#[test]
fn mixed_orientation_table_and_rounding() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);
    let out = bin()
        .args(["eval", "--data"])
        .arg(&data)
        .args(["--model", "qo", "--orient", "1,0.5:1,0.5", "--round", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("qo,C,0.293,0.604")), "{table}");
    assert!(table.lines().any(|l| l.starts_with("qo,D,0.586,0.293")), "{table}");
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);
    let cfg_path = dir.path().join("run.json");
    fs::write(&cfg_path, r#"{"model":"lo","orient":"1,1:0.5,0.5","round":3}"#).unwrap();
    let out = bin()
        .args(["eval", "--data"])
        .arg(&data)
        .arg("--config")
        .arg(&cfg_path)
        .args(["--model", "qo"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    // Flag wins on the model, config still supplies orientation and rounding.
    assert!(!table.contains("\nlo,"));
    assert!(table.lines().any(|l| l.starts_with("qo,B,0.382,0.500")), "{table}");
}

#[test]
fn invalid_inputs_exit_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);

    // All-zero orientation.
    let out = bin()
        .args(["eval", "--data"])
        .arg(&data)
        .args(["--orient", "0,0:0,0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Negative data entry.
    let bad = write_dataset(&dir, "dmu,i:x,o:y\nA,-1,2\n");
    let out = bin().args(["eval", "--data"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Malformed header.
    let bad = write_dataset(&dir, "dmu,x,o:y\nA,1,2\n");
    let out = bin().args(["eval", "--data"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Missing file.
    let out = bin()
        .args(["eval", "--data", "/nonexistent/nope.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn self_check_passes_and_detects_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);
    let out = bin()
        .args(["self-check", "--data"])
        .arg(&data)
        .args(["--samples", "20"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("oracle agreement"));
    assert!(!text.contains("VIOLATION"));

    // The inverted comparator must make the monotonicity scan fail; a clean
    // pass in that mode would mean the checker cannot detect anything.
    let out = bin()
        .args(["self-check", "--data"])
        .arg(&data)
        .args(["--samples", "20", "--corrupt-comparator"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bars_emit_factor_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);
    let out = bin()
        .args(["bars", "--data"])
        .arg(&data)
        .args(["--model", "qo", "--orient", "1,0.5:1,0.5", "--dmu", "B", "--round", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5); // header + 2 inputs + 2 outputs
    assert!(lines[1].starts_with("qo,B,input 1,input,1.000,0.618,0.382"));
    // Dilation rows carry the inverse factor; for the first output it equals
    // the first input contraction.
    assert!(lines[3].ends_with(",0.618"), "{}", lines[3]);
}

#[test]
fn thread_cap_env_var_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(&dir, TABLE1);
    for threads in ["0", "1", "4"] {
        let out = bin()
            .env("DEAORIENT_THREADS", threads)
            .args(["eval", "--data"])
            .arg(&data)
            .args(["--model", "lo"])
            .output()
            .unwrap();
        assert!(out.status.success());
        let table = String::from_utf8(out.stdout).unwrap();
        assert!(table.lines().any(|l| l.starts_with("lo,B,0.333333")));
    }
}
