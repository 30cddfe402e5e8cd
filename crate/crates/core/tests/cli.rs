use std::fs;
use std::path::{Path, PathBuf};

use apdsync::io::cli::run;
use apdsync::io::csv::{read_numeric_csv, GRID_HEADER, REGIMES_HEADER, TIMESERIES_HEADER};
use serde_json::Value;

const SMALL: &str = r#"{
    "units": "GHz_over_2pi",
    "name": "cli-small",
    "controller": {
        "delta_c": -0.4, "gamma_c": 1.0, "g_c": 0.001, "mech_gamma_c": 0.001,
        "omega_c": 1.0, "eps_c": 20.0,
        "delta_1": -0.02, "delta_2": -0.02, "gamma_1": 0.01, "gamma_2": 0.01,
        "eps_1": 0.0, "eps_2": 0.0
    },
    "oscillator_1": { "omega": 0.01, "gamma": 0.1, "g": 1e-5, "temperature_k": 0.002 },
    "oscillator_2": { "omega": 0.01, "gamma": 0.1, "g": 1e-5, "temperature_k": 0.002 },
    "initial_sigma_x": [1.224744871391589, 3.24037034920393],
    "run": {
        "t_end_s": 6e-8,
        "integrator": { "scheme": "rk4", "dt_s": 2e-12, "record_every": 5 },
        "analysis": { "steady_window_s": 5e-9, "lyapunov": { "horizon_s": 4e-9, "fit_end_s": 1e-9 } },
        "output_every": 20
    }
}"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("apdsync").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(call(&[]).0, 1);
    assert_eq!(call(&["frobnicate"]).0, 1);
    let (code, _, err) = call(&["simulate", "--config", "/nonexistent/x.json", "--out", "/tmp"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/x.json"));
    assert_eq!(call(&["--help"]).0, 0);
}

#[test]
fn invalid_config_reports_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("\"gamma_c\": 1.0", "\"gamma_c\": -1.0").replace("\"g\": 1e-5, \"temperature_k\": 0.002 },\n    \"oscillator_2\"", "\"g\": 1e-5, \"temperature_k\": -1 },\n    \"oscillator_2\"");
    let cfg = write_config(dir.path(), "bad.json", &bad);
    let (code, _, err) = call(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("gamma_c"), "{err}");
    assert!(err.contains("temperature"), "{err}");
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    let (code, out, err) = call(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("e_avg ") && out.contains("t_sync_s ") && out.contains("regime "));
    assert_eq!(call(&["simulate", "--config", s(&cfg), "--out", s(&b)]).0, 0);
    for f in ["timeseries.csv", "report.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }

    let text = fs::read_to_string(a.join("timeseries.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), TIMESERIES_HEADER);
    let (_, rows) = read_numeric_csv(&text).unwrap();
    assert_eq!(rows[0][0], 0.0);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!((rows.last().unwrap()[0] - 6e-8).abs() < 1e-20);

    let m: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let hash = m["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(m["tool_version"].as_str().unwrap().starts_with("apdsync"));
    assert_eq!(m["document"]["units"], "GHz_over_2pi");
    let m2: Value = serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m2["config_sha256"].as_str().unwrap(), hash);
}

#[test]
fn output_stride_gives_requested_sample_count() {
    let dir = tempfile::tempdir().unwrap();
    // 3 samples: nodes 0, 2, 4 of a 5-node run recorded every step.
    let doc = SMALL
        .replace("\"t_end_s\": 6e-8", "\"t_end_s\": 8e-12")
        .replace("\"record_every\": 5", "\"record_every\": 1")
        .replace("\"output_every\": 20", "\"output_every\": 2")
        .replace("\"steady_window_s\": 5e-9", "\"steady_window_s\": 8e-12")
        .replace("\"run\": {", "\"run\": { \"t0_s\": 0.0,");
    let cfg = write_config(dir.path(), "tiny.json", &doc);
    let (code, _, err) = call(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn overrides_are_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let (code, _, err) = call(&[
        "simulate", "--config", s(&cfg), "--out", s(dir.path()), "--t-end", "7e-8", "--fixed-dt", "1e-12",
    ]);
    assert_eq!(code, 0, "{err}");
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["document"]["run"]["t_end_s"].as_f64().unwrap(), 7e-8);
    assert_eq!(m["document"]["run"]["integrator"]["dt_s"].as_f64().unwrap(), 1e-12);
}

#[test]
fn classify_prints_label() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let (code, out, _) = call(&["classify", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code, 0);
    let label = out.trim();
    assert!(label.parse::<apdsync::analysis::Regime>().is_ok(), "{label}");
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn embed_writes_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let out = dir.path().join("emb.csv");
    let (code, _, err) = call(&["embed", "--config", s(&cfg), "--tau", "3e-10", "--dim", "3", "--out", s(&out)]);
    assert_eq!(code, 0, "{err}");
    let (header, rows) = read_numeric_csv(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(header, ["x0", "x1", "x2"]);
    assert!(!rows.is_empty());
    assert!(dir.path().join("emb.csv.manifest.json").exists());
    assert_eq!(
        call(&["embed", "--config", s(&cfg), "--tau", "3e-10", "--dim", "1", "--out", s(&out)]).0,
        1
    );
}

fn sweep_doc(sweep: &str) -> String {
    SMALL.replace("\"name\": \"cli-small\",", &format!("\"name\": \"cli-sweep\", \"sweep\": {sweep},"))
}

#[test]
fn detuning_sweep_writes_regimes_and_portraits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scan.json", &sweep_doc(r#"{"delta_c_over_omega_c": [-0.4, -0.6]}"#));
    let (code, out, err) = call(&["sweep", "--config", s(&cfg), "--out", s(dir.path()), "--workers", "2"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("cells 2"));
    let text = fs::read_to_string(dir.path().join("regimes.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), REGIMES_HEADER);
    assert_eq!(text.lines().count(), 3);
    assert!(dir.path().join("portrait_000.csv").exists());
    assert!(dir.path().join("portrait_001.csv").exists());
}

#[test]
fn mismatch_sweep_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let doc = sweep_doc(r#"{"delta_gamma": [0.0, 0.2], "delta_g": [0.0, 0.05]}"#).replace(
        "\"oscillator_2\": { \"omega\": 0.01, \"gamma\": 0.1, \"g\": 1e-5, \"temperature_k\": 0.002 },\n",
        "",
    );
    let cfg = write_config(dir.path(), "grid.json", &doc);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    assert_eq!(call(&["sweep", "--config", s(&cfg), "--out", s(&a), "--workers", "1"]).0, 0);
    assert_eq!(call(&["sweep", "--config", s(&cfg), "--out", s(&b), "--workers", "4"]).0, 0);
    let ga = fs::read_to_string(a.join("grid.csv")).unwrap();
    assert_eq!(ga, fs::read_to_string(b.join("grid.csv")).unwrap());
    assert_eq!(ga.lines().next().unwrap(), GRID_HEADER);
    assert_eq!(ga.lines().count(), 5);
    let m: Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["extra"]["drive_sha256"].as_str().unwrap().len(), 64);

    let (code, _, _) = call(&["sweep", "--config", s(&cfg), "--out", s(&a), "--workers", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn scenario_commands_reject_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "scan.json", &sweep_doc(r#"{"delta_c_over_omega_c": [-0.4]}"#));
    assert_eq!(call(&["simulate", "--config", s(&cfg), "--out", s(dir.path())]).0, 1);
    let single = write_config(dir.path(), "one.json", SMALL);
    assert_eq!(call(&["sweep", "--config", s(&single), "--out", s(dir.path())]).0, 1);
}
