//! End-to-end tests of the command-line interface and its file formats.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nilpiece"))
}

fn write_temp(name: &str, content: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("nilpiece-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn labels_lists_partitions() {
    let out = bin().args(["labels", "Sp", "4"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), vec!["[4]", "[2,2]", "[2,1,1]", "[1,1,1,1]"]);
}

#[test]
fn classify_nilpotent_from_files() {
    let space = write_temp("gl3.space", "GL 3 2 1\n");
    let elem = write_temp("j3.mat", "3 3 2 1\n0 1 0\n0 0 1\n0 0 0\n");
    let out = bin()
        .args(["classify", "--space"])
        .arg(&space)
        .arg("--elem")
        .arg(&elem)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["label"]["parts"], serde_json::json!([3]));
    assert_eq!(value["steps"].as_array().unwrap().len(), 6);
}

#[test]
fn classify_unipotent_flag() {
    let space = write_temp("sp4.space", "Sp 4 2 1\n");
    // 1 + nilpotent in Sp_4(F_2): a transvection-like element.
    let elem = write_temp(
        "u.mat",
        "4 4 2 1\n1 1 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n",
    );
    let out = bin()
        .args(["classify", "--unipotent", "--space"])
        .arg(&space)
        .arg("--elem")
        .arg(&elem)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["label"]["parts"], serde_json::json!([2, 1, 1]));
}

#[test]
fn witness_reports_membership_and_certificate() {
    let space = write_temp("gl2.space", "GL 2 2 1\n");
    let grading = write_temp("gl2.grading", "GL 2 2 1\n1:1 -1:1\n");
    let zero = write_temp("zero.mat", "2 2 2 1\n0 0\n0 0\n");
    let out = bin()
        .args(["witness", "--space"])
        .arg(&space)
        .arg("--grading")
        .arg(&grading)
        .arg("--elem")
        .arg(&zero)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["in_bang_set"], serde_json::json!(false));
    assert!(value["witness"]["case"].as_str().unwrap().starts_with("GL.case"));

    let nonzero = write_temp("nonzero.mat", "2 2 2 1\n0 1\n0 0\n");
    let out = bin()
        .args(["witness", "--space"])
        .arg(&space)
        .arg("--grading")
        .arg(&grading)
        .arg("--elem")
        .arg(&nonzero)
        .output()
        .unwrap();
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["in_bang_set"], serde_json::json!(true));
}

#[test]
fn census_writes_report_and_csv() {
    let json_path = std::env::temp_dir().join("nilpiece-cli-tests").join("gl2.json");
    let csv_path = std::env::temp_dir().join("nilpiece-cli-tests").join("gl2.csv");
    std::fs::create_dir_all(json_path.parent().unwrap()).unwrap();
    let out = bin()
        .args(["census", "GL", "2", "2", "--out"])
        .arg(&json_path)
        .arg("--csv")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report["nilpotent_total"], 4);
    assert_eq!(report["verdicts"]["all_ok"], true);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("partition;"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn poly_and_orbits_run() {
    let out = bin().args(["poly", "GL", "2", "--q", "2,3,4,5"]).output().unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["all_ok"], true);

    let out = bin()
        .args(["orbits", "O", "--partition", "3,1,1", "--q", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["f_class_count"], 2);
}

#[test]
fn errors_exit_nonzero() {
    let out = bin().args(["labels", "E8", "8"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["census", "GL", "2", "6"]).output().unwrap();
    assert!(!out.status.success());
}
