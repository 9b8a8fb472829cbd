use std::{
    fs,
    path::{Path, PathBuf},
    process::{Command, Output},
};

use serde_json::Value;
use tempfile::TempDir;

fn qrmsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrmsim")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run_json(experiment: &str, config: &Path, extra: &[&str]) -> Value {
    let mut args = vec![experiment, "--config", config.to_str().unwrap(), "--format", "json"];
    args.extend_from_slice(extra);
    let out = qrmsim(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn summary_f64(doc: &Value, key: &str) -> f64 {
    doc["summary"][key].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

const ION_JC: &str = r#""ion": {
    "nu_hz": 3.0e6, "eta": 0.06,
    "omega_r_hz": 68.0e3, "omega_b_hz": 68.0e3,
    "delta_r_hz": 0.0, "delta_b_hz": -102.0e3
  }"#;

#[test]
fn jc_validation_tracks_analytic_solution() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "jc.json",
        &format!(
            r#"{{
  "experiment": "jc-validate",
  {ION_JC},
  "space": {{ "fock_cutoff": 10 }},
  "evolution": {{ "t_final": 5.0e-4, "snapshot_stride": 2000 }}
}}"#
        ),
    );
    let doc = run_json("jc-validate", &cfg, &[]);
    assert!((summary_f64(&doc, "g_over_omega_R") - 0.04).abs() < 1e-9);
    assert!(summary_f64(&doc, "min_fidelity") >= 0.99);
    assert!(summary_f64(&doc, "norm_drift") < 1e-7);
    assert_eq!(doc["columns"][0], "t");
}

#[test]
fn uncoupled_ground_state_is_vacuum() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "gs.json",
        r#"{
  "experiment": "ground-state",
  "qrm": { "omega0_r_hz": 1000.0, "omega_r_hz": 500.0, "g_hz": 0.0 },
  "space": { "fock_cutoff": 8 }
}"#,
    );
    let doc = run_json("ground-state", &cfg, &[]);
    assert!(summary_f64(&doc, "phonon_number").abs() < 1e-12);
    assert!((summary_f64(&doc, "sigma_z") + 1.0).abs() < 1e-12);
    assert!((summary_f64(&doc, "parity") - 1.0).abs() < 1e-12);
}

#[test]
fn deep_strong_ground_state_has_even_parity() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "gs.json",
        r#"{
  "experiment": "ground-state",
  "qrm": { "omega0_r_hz": 5655.0, "omega_r_hz": 5655.0, "g_hz": 11310.0 },
  "space": { "fock_cutoff": 50 }
}"#,
    );
    let doc = run_json("ground-state", &cfg, &[]);
    assert!((summary_f64(&doc, "parity") - 1.0).abs() < 1e-8);
    assert!(summary_f64(&doc, "odd_chain_population") < 1e-8);
    assert!(summary_f64(&doc, "phonon_number") > 3.5);
}

#[test]
fn zero_duration_sweep_is_a_quench() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "ad.json",
        r#"{
  "experiment": "adiabatic",
  "ion": {
    "nu_hz": 3.0e6, "eta": 0.06,
    "omega_r_hz": 68.0e3, "omega_b_hz": 68.0e3,
    "delta_r_hz": 0.0, "delta_b_hz": -1800.0
  },
  "space": { "fock_cutoff": 30 },
  "schedule": { "ramp": "coupling", "durations": [0.0, 5.0e-3] }
}"#,
    );
    let doc = run_json("adiabatic", &cfg, &[]);
    let finals = doc["summary"]["final_fidelities"].as_array().unwrap();
    let quench = summary_f64(&doc, "quench_overlap");
    assert!((finals[0].as_f64().unwrap() - quench).abs() < 1e-10);
    assert!(finals[1].as_f64().unwrap() > 0.95);
}

#[test]
fn regime_map_labels_and_thread_independence() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "map.json",
        r#"{
  "experiment": "regime-map",
  "qrm": { "omega0_r_hz": 0.0, "omega_r_hz": 0.0, "g_hz": 1.0 },
  "grid": {
    "omega0_over_g": { "min": -40.0, "max": 40.0, "steps": 9 },
    "omega_over_g": { "min": -40.0, "max": 40.0, "steps": 9 }
  }
}"#,
    );
    let c = cfg.to_str().unwrap();
    let one = qrmsim(&["regime-map", "--config", c, "--jobs", "1"]);
    let many = qrmsim(&["regime-map", "--config", c, "--jobs", "4"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, many.stdout);

    let text = String::from_utf8(one.stdout).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "omega0_R,omega_R,g,label");
    assert_eq!(data.len(), 1 + 81);
    let label = |w0: f64, w: f64| {
        data[1..]
            .iter()
            .map(|l| l.split(',').collect::<Vec<_>>())
            .find(|f| {
                let g = f[2].parse::<f64>().unwrap();
                (f[0].parse::<f64>().unwrap() / g - w0).abs() < 1e-9 && (f[1].parse::<f64>().unwrap() / g - w).abs() < 1e-9
            })
            .map(|f| f[3].to_string())
            .unwrap()
    };
    assert_eq!(label(40.0, 40.0), "JC");
    assert_eq!(label(-40.0, 40.0), "AJC");
    assert_eq!(label(0.0, 40.0), "decoupling");
    assert_eq!(label(0.0, 0.0), "dirac_line");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "ev.json",
        r#"{
  "experiment": "evolve",
  "qrm": { "omega0_r_hz": 1000.0, "omega_r_hz": 1000.0, "g_hz": 500.0 },
  "space": { "fock_cutoff": 12 },
  "hamiltonian": "qrm",
  "initial_state": [ { "qubit": "e", "n": 0 } ],
  "observables": ["sigma_z", "number"],
  "evolution": { "t_final": 1.0e-3, "snapshot_stride": 10 }
}"#,
    );
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = qrmsim(&["evolve", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (fs::read(a).unwrap(), fs::read(b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("# generator: qrmsim "));
    assert!(text.contains("# result.norm_drift: "));
    assert!(text.lines().any(|l| l == "t,sigma_z,number"));
}

#[test]
fn malformed_config_reports_position_and_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", "{\n  \"experiment\": \"ground-state\",\n  \"qrm\": { \"g_hz\" 1 }\n}\n");
    let out = qrmsim(&["ground-state", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn invalid_values_point_at_the_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "neg.json",
        "{\n  \"experiment\": \"ground-state\",\n  \"qrm\": { \"omega0_r_hz\": 1.0, \"omega_r_hz\": 1.0, \"g_hz\": 1.0 },\n  \"space\": { \"fock_cutoff\": 0 }\n}\n",
    );
    let out = qrmsim(&["ground-state", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("neg.json:4:"));

    let wrong = qrmsim(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(wrong.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(qrmsim(&["not-an-experiment", "--config", "x.json"]).status.code(), Some(1));
    assert_eq!(qrmsim(&["ground-state", "--config", "/nonexistent/x.json"]).status.code(), Some(1));
    assert_eq!(qrmsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn unconverged_cutoff_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "gs.json",
        r#"{
  "experiment": "ground-state",
  "qrm": { "omega0_r_hz": 5655.0, "omega_r_hz": 5655.0, "g_hz": 11310.0 },
  "space": { "fock_cutoff": 60 }
}"#,
    );
    let out = qrmsim(&["ground-state", "--config", cfg.to_str().unwrap(), "--fock-cutoff", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("raise the Fock cutoff"));
    assert!(out.stdout.is_empty());
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (experiment, file) in [
        ("jc-validate", "jc_validate.json"),
        ("ground-state", "ground_state.json"),
        ("adiabatic", "adiabatic.json"),
        ("regime-map", "regime_map.json"),
        ("evolve", "evolve_usc.json"),
    ] {
        let text = fs::read_to_string(root.join(file)).unwrap();
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["experiment"], experiment, "{file}");
    }
    let out = qrmsim(&["regime-map", "--config", root.join("regime_map.json").to_str().unwrap()]);
    assert!(out.status.success());
}
