use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ds-stab");

fn run(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const HEAT: &str = "[model]\nkind = \"heat\"\nmodes = 32\ninitial = \"ones\"\n\n[simulate]\nt_end = 4.0\ndt_out = 0.05\n";

#[test]
fn heat_single_mode_trajectory() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[model]\nkind = \"heat\"\nmodes = 8\nrho = 1.0\ninitial = \"mode:1\"\n[simulate]\nt_end = 1.0\ndt_out = 0.1\n");
    assert_eq!(
        run(d.path(), &["simulate", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    let text = std::fs::read_to_string(d.path().join("o/trajectory.csv")).unwrap();
    let pi = std::f64::consts::PI;
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let exact = (-(pi * pi + pi) * cols[0]).exp();
        assert!((cols[1] - exact).abs() <= 1e-12 * exact);
    }
    let manifest = json(&d.path().join("o/trajectory.manifest.json"));
    assert_eq!(manifest["model_kind"], "heat");
    assert_eq!(manifest["model_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn transport_without_feedback_empties() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[model]\nkind = \"transport\"\ngrid = 257\nepsilon = 0.0\ninitial = \"ones\"\n[simulate]\nt_end = 2.0\ndt_out = 0.25\n");
    assert_eq!(
        run(d.path(), &["simulate", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    let text = std::fs::read_to_string(d.path().join("o/trajectory.csv")).unwrap();
    let last: f64 = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(last <= 1.0 / 256.0);
    assert!(d.path().join("o/snapshots.csv").exists());
}

#[test]
fn missing_gain_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", HEAT);
    let (code, err) = run(d.path(), &["simulate", "--config", "c.toml"]);
    assert_eq!(code, 2);
    assert!(err.contains("model.rho"), "{err}");
    let (code, _) = run(d.path(), &["simulate"]);
    assert_eq!(code, 2);
}

#[test]
fn certify_verify_roundtrip() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", HEAT);
    assert_eq!(
        run(
            d.path(),
            &["certify", "--config", "c.toml", "--out", "probe"]
        )
        .0,
        0
    );
    let probe = json(&d.path().join("probe/certificate.json"));
    let rho1 = probe["pipeline"]["rho1"]["rho1"].as_f64().unwrap();
    assert!(rho1 > 0.0);
    assert!(probe["pipeline"]["delta"].as_f64().unwrap() >= 1.0);
    assert_eq!(probe["gain_source"], "half_rho1");

    let rho = 0.5 * rho1;
    write(
        d.path(),
        "r.toml",
        &HEAT.replace(
            "initial = \"ones\"",
            &format!("initial = \"ones\"\nrho = {rho}"),
        ),
    );
    assert_eq!(
        run(d.path(), &["simulate", "--config", "r.toml", "--out", "o"]).0,
        0
    );
    assert_eq!(
        run(d.path(), &["certify", "--config", "r.toml", "--out", "o"]).0,
        0
    );
    assert_eq!(
        run(d.path(), &["verify", "--config", "r.toml", "--out", "o"]).0,
        0
    );
    let report = json(&d.path().join("o/verification.json"));
    assert_eq!(report["passed"], true);

    // a trajectory at a gain outside the admissible range fails against this certificate
    let limit = probe["pipeline"]["rho1"]["limit"].as_f64().unwrap();
    write(
        d.path(),
        "big.toml",
        &HEAT.replace(
            "initial = \"ones\"",
            &format!("initial = \"ones\"\nrho = {}", 2.0 * limit),
        ),
    );
    assert_eq!(
        run(
            d.path(),
            &["simulate", "--config", "big.toml", "--out", "big"]
        )
        .0,
        0
    );
    let (code, _) = run(
        d.path(),
        &[
            "verify",
            "--config",
            "r.toml",
            "--out",
            "v",
            "--trajectory",
            "big/trajectory.csv",
            "--certificate",
            "o/certificate.json",
        ],
    );
    assert_eq!(code, 1);
}

#[test]
fn verify_errors_are_structured() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        &HEAT.replace("initial = \"ones\"", "initial = \"ones\"\nrho = 0.1"),
    );
    assert_eq!(
        run(d.path(), &["simulate", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    assert_eq!(
        run(d.path(), &["certify", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    std::fs::write(d.path().join("o/trajectory.csv"), "t,norm_X\n").unwrap();
    let (code, err) = run(d.path(), &["verify", "--config", "c.toml", "--out", "o"]);
    assert_eq!(code, 2);
    assert!(err.contains("no rows"), "{err}");

    // different potential, different hash
    write(
        d.path(),
        "g.toml",
        &HEAT.replace(
            "initial = \"ones\"",
            "initial = \"ones\"\nrho = 0.1\npotential = \"constant:1.0\"",
        ),
    );
    assert_eq!(
        run(d.path(), &["simulate", "--config", "g.toml", "--out", "g"]).0,
        0
    );
    let (code, err) = run(
        d.path(),
        &[
            "verify",
            "--config",
            "c.toml",
            "--trajectory",
            "g/trajectory.csv",
            "--certificate",
            "o/certificate.json",
        ],
    );
    assert_eq!(code, 2);
    assert!(err.contains("model-hash mismatch"), "{err}");
}

#[test]
fn zero_observability_gives_no_gain() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        &format!("{HEAT}\n[certify]\ndelta = 0.0\n"),
    );
    assert_eq!(
        run(d.path(), &["certify", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    let cert = json(&d.path().join("o/certificate.json"));
    assert!(cert["pipeline"]["rho1"]["rho1"].is_null());
    assert!(cert["certificate"].is_null());
    assert_eq!(cert["pipeline"]["delta_provenance"], "config");
}

#[test]
fn transport_above_threshold_records_failed_decomposition() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "c.toml", "[model]\nkind = \"transport\"\ngrid = 129\nalpha = 0.5\nepsilon = 2.0\n[certify]\nensemble_size = 20\n");
    assert_eq!(
        run(d.path(), &["certify", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    let cert = json(&d.path().join("o/certificate.json"));
    assert_eq!(cert["pipeline"]["decomposition"]["passed"], false);
    assert_eq!(cert["pipeline"]["decomposition"]["epsilon_max"], 1.0);
}

#[test]
fn sweep_outside_the_gain_range_reports_none() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        &format!("{HEAT}\n[sweep]\nrho = [2.0, 3.0]\n"),
    );
    assert_eq!(
        run(d.path(), &["sweep", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    let text = std::fs::read_to_string(d.path().join("o/sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "rho,C2,sigma_cert,sigma_meas,pass");
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[1], "none");
        assert_eq!(cols[2], "none");
        assert!(cols[3].parse::<f64>().unwrap() > 0.0);
        assert_eq!(cols[4], "none");
    }
}

#[test]
fn single_point_sweep_matches_verify() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        &format!("{HEAT}\n[sweep]\nrho_fractions = [0.5]\n"),
    );
    assert_eq!(
        run(d.path(), &["sweep", "--config", "c.toml", "--out", "o"]).0,
        0
    );
    let text = std::fs::read_to_string(d.path().join("o/sweep.csv")).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "PASS");
    assert!(row[3].parse::<f64>().unwrap() >= row[2].parse::<f64>().unwrap());
}

#[test]
fn thread_cap_is_validated() {
    let d = tempfile::tempdir().unwrap();
    write(
        d.path(),
        "c.toml",
        &HEAT.replace("initial = \"ones\"", "initial = \"ones\"\nrho = 0.1"),
    );
    let out = Command::new(BIN)
        .args(["simulate", "--config", "c.toml", "--out", "o"])
        .env("DS_STAB_THREADS", "zero")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = Command::new(BIN)
        .args(["simulate", "--config", "c.toml", "--out", "o"])
        .env("DS_STAB_THREADS", "2")
        .current_dir(d.path())
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}
