//! The `vfw` binary end to end: run directories, exit codes and the report commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use vfw_core::analysis::decay_fit;
use vfw_core::cli::config::RunConfig;
use vfw_core::cli::persist::parse_norms_csv;
use vfw_core::cli::{compare_kdvb, execute, exit_code, verify_code};
use vfw_core::model::EquationTag;
use vfw_core::Error;
use vfw_core::oracle::resolvent_check;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn vfw(args: &[&str], run_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vfw"))
        .args(args)
        .env("FW_RUN_DIR", run_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Relative path to bytes for every file under `dir`.
fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Parses a CSV with a header into named columns.
fn columns(csv: &str) -> BTreeMap<String, Vec<f64>> {
    let mut lines = csv.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols: BTreeMap<String, Vec<f64>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for line in lines {
        for (h, v) in header.iter().zip(line.split(',')) {
            cols.get_mut(h).unwrap().push(v.parse().unwrap());
        }
    }
    cols
}

const SMALL_VFW: &str = r#"
name = "small"
kind = "ViscousFW"

[model]
beta = 1.0
B = 1.0
b = 1.0
mu = 1.0

[grid]
L = 128.0
N = 1024

[solver]
dt = 0.05
t_end = 20.0
snapshot_every = 0.5
moving_frame = true

[initial_data]
family = "gaussian"
amp = 0.05

[analyses]
profiles_at = [20.0]
norms = [{ order = 1, p = 2 }, { order = 2, p = "inf", l = 1 }]
fits = [{ series = "u-chi:p=2:l=0", log_power = 1, window = [2.0, 20.0] }]
"#;

fn write_small(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    std::fs::write(&path, SMALL_VFW).unwrap();
    path
}

#[test]
fn minimal_config_writes_a_complete_manifest() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("minimal-zero.toml");
    let o = vfw(&["simulate", cfg.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let run = out.path().join("minimal-zero");
    let mut files = tree(&run);
    let manifest: serde_json::Value = serde_json::from_slice(&files.remove("manifest.json").unwrap()).unwrap();
    let listed: BTreeMap<String, String> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["path"].as_str().unwrap().to_string(), e["sha256"].as_str().unwrap().to_string()))
        .collect();
    assert_eq!(listed.keys().collect::<Vec<_>>(), files.keys().collect::<Vec<_>>());
    for (path, bytes) in &files {
        assert_eq!(listed[path], hex::encode(Sha256::digest(bytes)), "{path}");
    }
    for required in ["norms.csv", "fits.json", "snapshots/u_00000.csv", "profiles/t_0e0.csv", "profiles/t_1e0.csv"] {
        assert!(files.contains_key(required), "{required}");
    }
    let norms = parse_norms_csv(std::str::from_utf8(&files["norms.csv"]).unwrap()).unwrap();
    assert_eq!(norms.len(), 3);
    // Residual series vanish; the kernel gap does not depend on the data.
    for s in &norms {
        assert!(!s.values.is_empty());
        if s.label != "T-G0" {
            assert!(s.values.iter().all(|v| *v == 0.0), "{}", s.label);
        }
    }
    assert_eq!(manifest["run"]["theta"]["theta"], 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let work = tempfile::tempdir().unwrap();
    let cfg = write_small(work.path());
    let (a, b) = (work.path().join("a"), work.path().join("b"));
    for root in [&a, &b] {
        let o = vfw(&["simulate", cfg.to_str().unwrap()], root);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (ta, tb) = (tree(&a.join("small")), tree(&b.join("small")));
    assert!(ta.len() > 40);
    assert_eq!(ta, tb);
}

#[test]
fn jobs_run_configs_side_by_side() {
    let out = tempfile::tempdir().unwrap();
    let zero = configs().join("minimal-zero.toml");
    let hopf = configs().join("burgers-hopfcole.toml");
    let o = vfw(&["simulate", "--jobs", "2", zero.to_str().unwrap(), hopf.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(out.path().join("minimal-zero/manifest.json").is_file());
    assert!(out.path().join("burgers-hopfcole/manifest.json").is_file());
}

#[test]
fn config_errors_exit_with_two() {
    let work = tempfile::tempdir().unwrap();
    let bad = work.path().join("bad.toml");
    std::fs::write(&bad, SMALL_VFW.replace("amp = 0.05", "amp = 0.05\nwidht = 2.0")).unwrap();
    let o = vfw(&["simulate", bad.to_str().unwrap()], work.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("widht") && err.contains("line"), "{err}");

    let missing = work.path().join("missing.toml");
    assert_eq!(vfw(&["simulate", missing.to_str().unwrap()], work.path()).status.code(), Some(2));

    std::fs::write(&bad, SMALL_VFW.replace("dt = 0.05", "dt = -1.0")).unwrap();
    assert_eq!(vfw(&["simulate", bad.to_str().unwrap()], work.path()).status.code(), Some(2));
    assert!(!work.path().join("small").exists());
}

#[test]
fn error_kinds_map_to_exit_codes() {
    assert_eq!(exit_code(&Error::Tolerance("x".into())), 1);
    assert_eq!(exit_code(&Error::Config("x".into())), 2);
    assert_eq!(exit_code(&Error::Domain("x".into())), 2);
    assert_eq!(exit_code(&Error::BlowUp { time: 1.0, max_amplitude: f64::INFINITY }), 3);
}

#[test]
fn verify_passes_on_a_fresh_checkout() {
    let work = tempfile::tempdir().unwrap();
    let o = vfw(&["verify"], work.path());
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let failed: Vec<_> = reports.as_array().unwrap().iter().filter(|r| r["passed"] != true).collect();
    assert!(failed.is_empty(), "{failed:#?}");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn verify_with_an_empty_selection_prints_an_empty_list() {
    let work = tempfile::tempdir().unwrap();
    let o = vfw(&["verify", "--only"], work.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap(), serde_json::json!([]));
    assert_eq!(vfw(&["verify", "--only", "no-such-check"], work.path()).status.code(), Some(2));
}

#[test]
fn wrong_multiplier_sign_fails_the_resolvent_oracle() {
    let good = resolvent_check(1.0).unwrap();
    let bad = resolvent_check(-1.0).unwrap();
    assert!(good.passed);
    assert!(!bad.passed);
    assert_eq!(verify_code(std::slice::from_ref(&good)), 0);
    assert_eq!(verify_code(&[good, bad]), 1);
}

#[test]
fn fit_command_refits_stored_norms() {
    let work = tempfile::tempdir().unwrap();
    let cfg = write_small(work.path());
    assert_eq!(vfw(&["simulate", cfg.to_str().unwrap()], work.path()).status.code(), Some(0));
    let run = work.path().join("small");
    let stored: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(run.join("fits.json")).unwrap()).unwrap();

    let refit = |extra: &[&str]| {
        let mut args = vec!["fit", run.to_str().unwrap(), "--series", "u-chi:p=2:l=0"];
        args.extend_from_slice(extra);
        let o = vfw(&args, work.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap()
    };
    let same = refit(&["--log-power", "1", "--window", "2", "20"]);
    assert_eq!(same["exponent"], stored[0]["exponent"]);

    let narrow = refit(&["--window", "5", "20"]);
    let norms = parse_norms_csv(&std::fs::read_to_string(run.join("norms.csv")).unwrap()).unwrap();
    let direct = decay_fit(&norms[0], 0, Some((5.0, 20.0))).unwrap();
    assert_eq!(narrow["exponent"].as_f64().unwrap(), direct.exponent);
    assert_ne!(narrow["exponent"], same["exponent"]);

    let o = vfw(&["fit", run.to_str().unwrap(), "--series", "nope:p=2:l=0"], work.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hopf_cole_reference_run_tracks_the_diffusion_wave() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("burgers-hopfcole.toml");
    assert_eq!(vfw(&["simulate", cfg.to_str().unwrap()], out.path()).status.code(), Some(0));
    let norms = parse_norms_csv(&std::fs::read_to_string(out.path().join("burgers-hopfcole/norms.csv")).unwrap()).unwrap();
    assert_eq!(norms.len(), 2);
    for s in &norms {
        assert_eq!(s.times.len(), 51);
        let worst = s.values.iter().cloned().fold(0.0, f64::max);
        assert!(worst <= 1e-6, "{}: {worst:e}", s.label);
    }
}

fn profiles_csv(config: &Path, t: &str, theta: Option<&str>) -> BTreeMap<String, Vec<f64>> {
    let work = tempfile::tempdir().unwrap();
    let mut args = vec!["profiles", config.to_str().unwrap(), "--t", t];
    if let Some(th) = theta {
        args.extend_from_slice(&["--theta", th]);
    }
    let o = vfw(&args, work.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    columns(&stdout(&o))
}

#[test]
fn profiles_vanish_without_mass() {
    let cols = profiles_csv(&configs().join("minimal-zero.toml"), "1", Some("0"));
    for name in ["chi", "V", "W", "Psi", "Q"] {
        assert!(cols[name].iter().all(|v| v.abs() <= 1e-300), "{name}");
    }
    assert!(cols["eta"].iter().all(|v| *v == 1.0));
}

#[test]
fn profile_columns_are_consistent() {
    let cfg = configs().join("vfw-thirdorder.toml");
    let cols = profiles_csv(&cfg, "10", Some("0.19"));
    for ((q, w), psi) in cols["Q"].iter().zip(&cols["W"]).zip(&cols["Psi"]) {
        assert_eq!(*q, w + psi);
    }
    let x = &cols["x"];
    let dx = x[1] - x[0];
    let mass: f64 = cols["chi"].iter().sum::<f64>() * dx;
    assert!((mass - 0.1).abs() <= 1e-8, "{mass}");

    let plain = profiles_csv(&cfg, "10", None);
    assert!(!plain.contains_key("W") && !plain.contains_key("Q"));
    assert_eq!(plain["Psi"], cols["Psi"]);
}

#[test]
fn compare_kdvb_shares_theta0_and_reports_both_amplitudes() {
    let out = tempfile::tempdir().unwrap();
    let cfg = configs().join("compare-kdvb.toml");
    let o = vfw(&["compare-kdvb", cfg.to_str().unwrap()], out.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["theta", "theta_uncertainty", "theta_tilde", "theta_tilde_uncertainty"] {
        assert!(report[key].as_f64().unwrap().is_finite(), "{key}");
    }
    assert!(report["order3_fit_vfw"]["exponent"].is_number());
    assert!(report["order3_fit_kdvb"]["exponent"].is_number());
    let saved = out.path().join("compare-kdvb-compare-kdvb");
    assert!(saved.join("compare.json").is_file() && saved.join("manifest.json").is_file());

    // theta0 depends on the data alone, so both runs of the pair agree exactly.
    let mut cfg = RunConfig::load(&cfg).unwrap();
    cfg.analyses.theta = true;
    let mut twin = cfg.clone();
    twin.kind = EquationTag::KdVBurgers;
    let a = execute(&cfg, &configs()).unwrap().theta.unwrap();
    let b = execute(&twin, &configs()).unwrap().theta.unwrap();
    assert_eq!(a.theta0, b.theta0);
    assert_eq!(report["theta0"].as_f64().unwrap(), a.theta0);
}

#[test]
fn symmetric_tiny_zero_mass_data_gives_vanishing_theta() {
    let cfg = RunConfig::from_toml(
        r#"
kind = "ViscousFW"
[model]
beta = 1.0
B = 1.0
b = 1.0
mu = 1.0
[grid]
L = 256.0
N = 4096
[solver]
dt = 0.05
t_end = 50.0
snapshot_log_count = 160
moving_frame = true
[initial_data]
family = "sum-of-gaussians"
terms = [{ amp = 2e-4 }, { amp = -1e-4, center = -1.0 }, { amp = -1e-4, center = 1.0 }]
"#,
    )
    .unwrap();
    let r = compare_kdvb(&cfg, &configs()).unwrap();
    assert!(r.theta0.abs() <= 1e-12, "{:e}", r.theta0);
    assert!(r.theta.abs() <= r.theta_uncertainty.max(1e-8), "{:e} +- {:e}", r.theta, r.theta_uncertainty);
    assert!(
        r.theta_tilde.abs() <= r.theta_tilde_uncertainty.max(1e-8),
        "{:e} +- {:e}",
        r.theta_tilde,
        r.theta_tilde_uncertainty
    );
}
