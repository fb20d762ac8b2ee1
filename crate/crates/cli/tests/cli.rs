use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use capture_core::experiments::bundled_text;
use serde_json::{json, Value};
use tempfile::TempDir;

fn capsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("CAPSIM_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn bundled(name: &str) -> Value {
    serde_json::from_str(bundled_text(name).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn calm_static() -> Value {
    let mut v = bundled("static_ball");
    let e = v["encounter"].as_object_mut().unwrap();
    e.insert("gust".into(), json!({"sigma": 0.0}));
    e.insert("downwash".into(), json!({"enabled": false}));
    e.insert("camera".into(), json!({"noise_std": 0.0}));
    v["experiments"]["max_sway_angle"] = json!(0.0);
    v["experiments"]["chaser_offset_std"] = json!(0.0);
    v
}

#[test]
fn analyze_bundled_design_passes() {
    let tmp = TempDir::new().unwrap();
    let o = capsim(tmp.path(), &["analyze", "--out", "a"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&tmp.path().join("a/report.json"));
    let value = |name: &str| {
        report["entries"]
            .as_array()
            .unwrap()
            .iter()
            .find(|e| e["name"] == name)
            .unwrap()["value"]
            .as_f64()
            .unwrap()
    };
    assert!((value("grab_volume_approx") - 34.817e-3).abs() < 0.01e-3);
    assert!((value("capture_area") - 89.25e-3).abs() < 1e-12);
    assert!((value("required_impact_strength") - 23_750.0).abs() < 10.0);
    assert!((value("arm_deflection") - 0.0246).abs() < 0.0002);
    assert!((value("root_moment") - 15.107).abs() < 0.001);
    assert!(tmp.path().join("a/report.txt").exists());
    assert!(String::from_utf8_lossy(&o.stdout).contains("overall: PASS"));
}

#[test]
fn missing_field_is_invalid_input_with_pointer() {
    let tmp = TempDir::new().unwrap();
    let mut v = bundled("paper_design");
    v["design"].as_object_mut().unwrap().remove("arm_extension");
    let p = write_config(tmp.path(), "bad.json", &v);
    let o = capsim(
        tmp.path(),
        &["analyze", "--config", p.to_str().unwrap(), "--out", "a"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/design/arm_extension"));
}

#[test]
fn unknown_key_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let mut v = bundled("paper_design");
    v["design"]["arm_extention"] = json!(1.1);
    let p = write_config(tmp.path(), "typo.json", &v);
    let o = capsim(
        tmp.path(),
        &["analyze", "--config", p.to_str().unwrap(), "--out", "a"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn tiny_envelope_is_design_fail() {
    let tmp = TempDir::new().unwrap();
    let mut v = bundled("paper_design");
    v["requirements"] = json!({"max_envelope": [0.1, 0.1, 0.1]});
    let p = write_config(tmp.path(), "tight.json", &v);
    let o = capsim(
        tmp.path(),
        &["analyze", "--config", p.to_str().unwrap(), "--out", "a"],
    );
    assert_eq!(code(&o), 3);
    assert!(tmp.path().join("a/report.json").exists());
}

#[test]
fn calm_simulation_walks_every_phase() {
    let tmp = TempDir::new().unwrap();
    let p = write_config(tmp.path(), "calm.json", &calm_static());
    let cfg = p.to_str().unwrap();
    let o = capsim(
        tmp.path(),
        &["simulate", "--config", cfg, "--seed", "3", "--out", "s1"],
    );
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout
        .contains("phases: SEARCH -> APPROACH -> ENGAGE -> CONFIRM -> TRANSPORT -> DROP -> DONE"));
    let outcome = read_json(&tmp.path().join("s1/outcome.json"));
    assert_eq!(outcome["success"], json!(true));

    capsim(
        tmp.path(),
        &["simulate", "--config", cfg, "--seed", "3", "--out", "s2"],
    );
    let a = std::fs::read(tmp.path().join("s1/trace.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("s2/trace.csv")).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with(b"#schema=v1\nkind,time,"));
}

#[test]
fn coarse_timestep_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let mut v = bundled("static_ball");
    v["encounter"]["timestep"] = json!(0.5);
    let p = write_config(tmp.path(), "coarse.json", &v);
    let o = capsim(
        tmp.path(),
        &["simulate", "--config", p.to_str().unwrap(), "--out", "s"],
    );
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/encounter/timestep"));
}

#[test]
fn blown_up_pendulum_exits_diverged() {
    let tmp = TempDir::new().unwrap();
    let mut v = bundled("windy");
    v["encounter"]["rod_length"] = json!(0.0001);
    v["encounter"]["timestep"] = json!(0.01);
    let p = write_config(tmp.path(), "stiff.json", &v);
    let o = capsim(
        tmp.path(),
        &["simulate", "--config", p.to_str().unwrap(), "--out", "s"],
    );
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stdout));
    let outcome = read_json(&tmp.path().join("s/outcome.json"));
    assert_eq!(outcome["failure_cause"], json!("diverged"));
}

#[test]
fn zero_trials_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = capsim(
        tmp.path(),
        &["montecarlo", "--scenario", "static_ball", "--trials", "0"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn montecarlo_is_reproducible_and_rerunnable() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "montecarlo",
        "--scenario",
        "straight_6ms",
        "--trials",
        "40",
        "--seed",
        "11",
        "--quiet",
    ];
    let o = capsim(tmp.path(), &[&args[..], &["--out", "m1"]].concat());
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    capsim(tmp.path(), &[&args[..], &["--out", "m2"]].concat());
    for f in ["batch.json", "trials.csv"] {
        let a = std::fs::read(tmp.path().join("m1").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("m2").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let batch = read_json(&tmp.path().join("m1/batch.json"));
    assert_eq!(batch["trials"], json!(40));
    assert_eq!(batch["master_seed"], json!(11));

    let manifest = read_json(&tmp.path().join("m1/manifest.json"));
    assert_eq!(manifest["command"], json!("montecarlo"));
    assert_eq!(manifest["seed"], json!(11));
    assert_eq!(manifest["trials"], json!(40));
    assert_eq!(manifest["config"]["experiments"]["trials"], json!(40));

    let o = capsim(tmp.path(), &["rerun", "m1/manifest.json", "--quiet"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        std::fs::read(tmp.path().join("m1/batch.json")).unwrap(),
        std::fs::read(tmp.path().join("m1/rerun/batch.json")).unwrap()
    );
}

#[test]
fn sweep_writes_table_files() {
    let tmp = TempDir::new().unwrap();
    let spec =
        json!({"axes": [{"path": "/design/arm_extension", "values": [0.7, 1.1]}], "trials": 10});
    let p = write_config(tmp.path(), "spec.json", &spec);
    let o = capsim(
        tmp.path(),
        &[
            "sweep",
            "--scenario",
            "static_ball",
            "--spec",
            p.to_str().unwrap(),
            "--out",
            "sw",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = read_json(&tmp.path().join("sw/sweep.json"));
    assert_eq!(table["cells"].as_array().unwrap().len(), 2);
    let csv = std::fs::read_to_string(tmp.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("cell,/design/arm_extension,trials"));
    let text = std::fs::read_to_string(tmp.path().join("sw/sweep.txt")).unwrap();
    assert!(text.contains("estimate"));
}

#[test]
fn sweep_over_unknown_path_is_invalid() {
    let tmp = TempDir::new().unwrap();
    let spec = json!({"axes": [{"path": "/design/arm_lenght", "values": [0.7]}], "trials": 10});
    let p = write_config(tmp.path(), "spec.json", &spec);
    let o = capsim(
        tmp.path(),
        &["sweep", "--spec", p.to_str().unwrap(), "--out", "sw"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn output_root_from_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_capsim"))
        .args(["simulate", "--scenario", "static_ball", "--quiet"])
        .current_dir(tmp.path())
        .env("CAPSIM_OUTPUT_ROOT", "runs")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let dirs: Vec<_> = std::fs::read_dir(tmp.path().join("runs"))
        .unwrap()
        .collect();
    assert_eq!(dirs.len(), 1);
    let dir = dirs[0].as_ref().unwrap().path();
    assert!(dir
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .starts_with("simulate-"));
    let manifests = std::fs::read_dir(&dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name() == "manifest.json")
        .count();
    assert_eq!(manifests, 1);
}

#[test]
fn scenarios_listed() {
    let tmp = TempDir::new().unwrap();
    let o = capsim(tmp.path(), &["scenarios"]);
    assert_eq!(code(&o), 0);
    let s = String::from_utf8_lossy(&o.stdout);
    for name in ["static_ball", "straight_6ms", "curved_arc", "windy"] {
        assert!(s.contains(name));
    }
    let o = capsim(tmp.path(), &["scenarios", "--show", "windy"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["encounter"]["gust"]["sigma"].as_f64().unwrap() > 2.0);
}
