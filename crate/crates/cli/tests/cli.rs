use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rvo_cli::{load_config, read_trace, RunConfig};

fn rvo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvo")).args(args).env_remove("RVO_THREADS").output().unwrap()
}

fn default_config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("config/default.json")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn shipped_default_config_matches_builtin_defaults() {
    assert_eq!(load_config(&default_config_path()).unwrap(), RunConfig::default());
}

#[test]
fn bad_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"cavity": {"R1": 1.2}}"#).unwrap();
    let out = rvo(&["fig2b", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cavity.R1"));

    let out = rvo(&["fig2b", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solver_fault_exits_with_code_3() {
    // Without atoms there is no triple resonance to operate at.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"cell": {"chi_prefactor": 0.0},
            "grids": {"search": {"windows": [{"isotope": "Rb87", "start_hz": -1e9, "stop_hz": 1e9}]}}}"#,
    )
    .unwrap();
    let out = rvo(&["fig4", "--config", cfg.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig4"));
}

#[test]
fn unknown_scenario_is_rejected_by_the_parser() {
    assert_eq!(rvo(&["fig5"]).status.code(), Some(2));
}

#[test]
fn fig2b_writes_trace_pair_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"scenario": "fig2b", "grids": {"spectrum": {"start": -3e9, "stop": 3e9, "points": 601}}}"#)
        .unwrap();
    let out_dir = dir.path().join("out");
    let out = rvo(&["fig2b", "--config", cfg.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["fig2b_empty.csv", "fig2b_atoms.csv"] {
        let (axis, xs, vs) = read_trace(&out_dir.join(name)).unwrap();
        assert_eq!(axis, "frequency_hz");
        assert_eq!(xs.len(), 601);
        assert!(vs.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    let m = manifest(&out_dir);
    assert_eq!(m["scenario"], "fig2b");
    assert_eq!(m["software"], concat!("rvo ", env!("CARGO_PKG_VERSION")));
    assert_eq!(m["config"]["cavity"]["R1"], 0.9);
    assert!((m["derived"]["fsr_hz"].as_f64().unwrap() - 846.9e6).abs() < 0.1e6);
    assert!((m["derived"]["hwhm_hz"].as_f64().unwrap() - 21.2e6).abs() < 0.1e6);
}

#[test]
fn manifests_agree_apart_from_timing_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (d, t) in [(&a, "1"), (&b, "3")] {
        let out = rvo(&["fig4", "--out-dir", d.to_str().unwrap(), "--threads", t]);
        assert!(out.status.success());
    }
    let strip = |mut m: serde_json::Value| {
        m.as_object_mut().unwrap().remove("duration_s");
        m["config"].as_object_mut().unwrap().remove("output_dir");
        m
    };
    assert_eq!(strip(manifest(&a)), strip(manifest(&b)));
}

#[test]
fn threads_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rvo"))
        .args(["fig2a", "--out-dir", dir.path().to_str().unwrap()])
        .env("RVO_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let bad = Command::new(env!("CARGO_BIN_EXE_rvo"))
        .args(["fig2a", "--out-dir", dir.path().to_str().unwrap()])
        .env("RVO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn fig3_reports_stokes_only_point_for_rb85() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvo(&["fig3", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let m = manifest(dir.path());
    let points = m["summary"]["operating_points"].as_array().unwrap();
    assert!(points.iter().any(|p| p["isotope"] == "Rb85" && p["regime"] == "stokes-only"));
    let traces = m["summary"]["regime_traces"].as_array().unwrap();
    for t in traces {
        let (_, xs, _) = read_trace(&dir.path().join(t["file"].as_str().unwrap())).unwrap();
        assert_eq!(xs.len(), 7201);
    }
}

#[test]
fn fig4_curve_is_zero_then_rising_then_flattening() {
    let dir = tempfile::tempdir().unwrap();
    assert!(rvo(&["fig4", "--out-dir", dir.path().to_str().unwrap()]).status.success());
    let (axis, xs, vs) = read_trace(&dir.path().join("fig4_total.csv")).unwrap();
    assert_eq!(axis, "pump_power_w");
    assert_eq!(xs[0], 0.0);
    assert!((xs.last().unwrap() - 0.150).abs() < 1e-12);
    let first = vs.iter().position(|&v| v > 0.0).unwrap();
    assert!(vs[..first].iter().all(|&v| v == 0.0));
    assert!(vs[first..].windows(2).all(|w| w[1] > w[0]));
    // Slope over the last third is below the slope just above threshold.
    let slope = |i: usize, j: usize| (vs[j] - vs[i]) / (xs[j] - xs[i]);
    let n = vs.len() - 1;
    assert!(slope(2 * n / 3, n) < slope(first, first + 10));
}
