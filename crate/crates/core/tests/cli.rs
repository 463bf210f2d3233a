use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const EXP_ORDER: &str = r#""order": {"kind": "exp_transition", "alpha1": 0.7, "alpha2": 0.9, "c": 1.0}, "lambda": 1.0"#;

fn vofrac(args: &[&str], dir: &Path, threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vofrac"));
    cmd.args(args).current_dir(dir);
    match threads {
        Some(n) => cmd.env("VOFRAC_THREADS", n),
        None => cmd.env_remove("VOFRAC_THREADS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    match fs::read_dir(dir) {
        Ok(entries) => {
            let mut names: Vec<String> =
                entries.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
            names.sort();
            names
        }
        Err(_) => Vec::new(),
    }
}

#[test]
fn kernel_run_writes_tables_with_provenance() {
    let tmp = TempDir::new().unwrap();
    let cfg =
        write_config(tmp.path(), &format!(r#"{{{EXP_ORDER}, "grid": {{"t_min": 0.1, "t_max": 2.0, "points": 5}}}}"#));
    let out = tmp.path().join("out");
    let res = vofrac(&["kernel", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path(), None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(files_in(&out), ["kernels.csv", "sonine.json"]);
    let csv = fs::read_to_string(out.join("kernels.csv")).unwrap();
    let header: Vec<&str> = csv.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(header[0].starts_with("# vofrac "));
    assert!(header.iter().any(|l| l.starts_with("# config_sha256: ")));
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "t,phi,psi");
    assert_eq!(data.len(), 6);
}

#[test]
fn json_format_wraps_provenance_and_data() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{{EXP_ORDER}, "grid": {{"t_min": 0.5, "t_max": 2.0, "points": 3}}, "moments": {{"r_max": 2}}}}"#),
    );
    let res =
        vofrac(&["moments", "--config", &cfg, "--out", "o", "--format", "json", "--seed", "17"], tmp.path(), None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let files = files_in(&tmp.path().join("o"));
    assert_eq!(files.len(), 1);
    assert!(files[0].ends_with(".json"));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("o").join(&files[0])).unwrap()).unwrap();
    assert!(v.get("provenance").is_some() && v.get("data").is_some());
    assert!(v["provenance"].to_string().contains("17"));
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "{\"order\": ");
    let res = vofrac(&["relax", "--config", &cfg, "--out", "o"], tmp.path(), None);
    assert_eq!(res.status.code(), Some(2));
    assert!(files_in(&tmp.path().join("o")).is_empty());
}

#[test]
fn unknown_key_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(r#"{{{EXP_ORDER}, "grid": {{"t_min": 0.1, "t_max": 2.0, "points": 5}}, "colour": "blue"}}"#),
    );
    let res = vofrac(&["relax", "--config", &cfg, "--out", "o"], tmp.path(), None);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("colour"));
}

#[test]
fn invalid_parameters_exit_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"order": {"kind": "constant", "alpha": 1.4}, "lambda": 1.0, "grid": {"t_min": 0.1, "t_max": 2.0, "points": 5}}"#,
    );
    assert_eq!(vofrac(&["relax", "--config", &cfg], tmp.path(), None).status.code(), Some(2));
    assert_eq!(vofrac(&["relax"], tmp.path(), None).status.code(), Some(2));
}

#[test]
fn unattainable_accuracy_exits_3_without_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{{EXP_ORDER}, "grid": {{"t_min": 0.01, "t_max": 5.0, "points": 5}}, "plan": {{"target_rel_err": 1e-13, "nodes": 60}}}}"#
        ),
    );
    let res = vofrac(&["relax", "--config", &cfg, "--out", "o"], tmp.path(), None);
    assert_eq!(res.status.code(), Some(3));
    assert!(files_in(&tmp.path().join("o")).is_empty());
}

#[test]
fn event_budget_exits_4() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{{EXP_ORDER}, "grid": {{"t_min": 1.0, "t_max": 1.0, "points": 1}}, "ctrw": {{"beta": 2.0, "jump": "gaussian", "ladder": [1e12], "paths": 10}}}}"#
        ),
    );
    let res = vofrac(&["ctrw-limit", "--config", &cfg, "--out", "o"], tmp.path(), None);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(files_in(&tmp.path().join("o")).is_empty());
}

#[test]
fn simulation_output_is_independent_of_threads() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{{EXP_ORDER}, "grid": {{"t_min": 0.5, "t_max": 5.0, "points": 4}}, "seed": 3, "simulate": {{"paths": 2000}}}}"#
        ),
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = format!("o{threads}");
        let res = vofrac(&["simulate", "--config", &cfg, "--out", &out], tmp.path(), Some(threads));
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(fs::read(tmp.path().join(out).join("simulate.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let bad = vofrac(&["simulate", "--config", &cfg, "--out", "x"], tmp.path(), Some("0"));
    assert_eq!(bad.status.code(), Some(2));
}
