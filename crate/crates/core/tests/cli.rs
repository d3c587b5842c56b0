use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qevent::units::{HBAR, SPEED_OF_LIGHT};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn qevent(args: &[&str], config: &Path, out: &Path) -> (i32, String, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_qevent"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap(), String::from_utf8(o.stderr).unwrap())
}

fn value(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn self_probability_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = qevent(&["probability"], &configs().join("probability.ini"), dir.path());
    assert_eq!(code, 0);
    assert!(stdout.lines().any(|l| l == "P=1.0"), "{stdout}");
    assert!(dir.path().join("manifest.ini").exists());
    assert!(dir.path().join("probability.csv").exists());
}

#[test]
fn manifest_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (code, first, _) = qevent(&["history"], &configs().join("history_pair.ini"), a.path());
    assert_eq!(code, 0);
    let (code, second, _) = qevent(&["history"], &a.path().join("manifest.ini"), b.path());
    assert_eq!(code, 0);
    assert_eq!(first, second);
    for f in ["histories.jsonl", "history_summary.csv", "manifest.ini"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_override_changes_histories() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("history_pair.ini");
    assert_eq!(qevent(&["history", "--seed", "1"], &cfg, a.path()).0, 0);
    assert_eq!(qevent(&["history", "--seed", "2"], &cfg, b.path()).0, 0);
    assert_ne!(
        fs::read(a.path().join("histories.jsonl")).unwrap(),
        fs::read(b.path().join("histories.jsonl")).unwrap()
    );
    assert!(fs::read_to_string(a.path().join("manifest.ini")).unwrap().contains("seed = 1"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ini");
    let cases = [
        "[psi]\nx = 0 0\np = 1.25 0.75\nwidths = 0.2 0.2\ncolour = red\n",
        "[nonsense]\na = 1\n",
        "[phi]\nx = 0 0\np = 1.25\nwidths = 0.2 0.2\n",
        "[run]\nunits = cgs\n",
        "[manifest]\ncommand = orbit\n",
    ];
    for text in cases {
        fs::write(&bad, text).unwrap();
        let (code, _, stderr) = qevent(&["probability"], &bad, &dir.path().join("out"));
        assert_eq!(code, 1, "{text}: {stderr}");
    }
    let (code, _, _) = qevent(&["probability"], &dir.path().join("missing.ini"), &dir.path().join("out"));
    assert_eq!(code, 1);
    let (code, _, _) = qevent(&["no-such-command"], &configs().join("probability.ini"), dir.path());
    assert_eq!(code, 1);
}

#[test]
fn numerical_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = qevent(&["amplitude"], &configs().join("disallowed.ini"), dir.path());
    assert_eq!(code, 2);
    assert!(stderr.contains("PhysicallyDisallowed"), "{stderr}");
}

#[test]
fn si_input_gives_the_same_probability() {
    let dir = tempfile::tempdir().unwrap();
    let natural = "[phi]\nx = 0.4 0.1\np = 1.3 0.8\nwidths = 0.25 0.3\n\
                   [psi]\nx = 0 0\np = 1.25 0.7\nwidths = 0.3 0.25\n\
                   [propagator]\nmass = 1\npotential = 0.2 -0.1\n";
    // Natural time is c·t, energy E/(cħ), momentum p/ħ, mass mc/ħ and potential eA/(cħ).
    let (c, h, e) = (SPEED_OF_LIGHT, HBAR, qevent::units::ELEMENTARY_CHARGE);
    let si = format!(
        "[run]\nunits = si\n\
         [phi]\nx = {} 0.1\np = {} {}\nwidths = {} {}\n\
         [psi]\nx = 0 0\np = {} {}\nwidths = {} {}\n\
         [propagator]\nmass = {}\npotential = {} {}\n",
        0.4 / c,
        1.3 * c * h,
        0.8 * h,
        0.25 * c * h,
        0.3 * h,
        1.25 * c * h,
        0.7 * h,
        0.3 * c * h,
        0.25 * h,
        h / c,
        0.2 * c * h / e,
        -0.1 * c * h / e,
    );
    fs::write(dir.path().join("nat.ini"), natural).unwrap();
    fs::write(dir.path().join("si.ini"), si).unwrap();
    let (c1, out1, err1) = qevent(&["probability"], &dir.path().join("nat.ini"), &dir.path().join("a"));
    let (c2, out2, err2) = qevent(&["probability"], &dir.path().join("si.ini"), &dir.path().join("b"));
    assert_eq!((c1, c2), (0, 0), "{err1} {err2}");
    let (p1, p2) = (value(&out1, "P"), value(&out2, "P"));
    assert!(p1 > 1e-3 && (p1 - p2).abs() < 1e-9 * p1, "{p1} vs {p2}");
}

#[test]
fn every_shipped_config_runs() {
    let expect = [
        ("amplitude", "amplitude.ini", 0),
        ("orbit", "orbit.ini", 0),
        ("poincare-check", "poincare.ini", 0),
        ("gauge-check", "gauge.ini", 0),
        ("maxwell-check", "maxwell.ini", 0),
        ("frequency-check", "frequency.ini", 0),
        ("history", "history_free.ini", 0),
    ];
    for (cmd, file, want) in expect {
        let dir = tempfile::tempdir().unwrap();
        let (code, stdout, stderr) = qevent(&[cmd], &configs().join(file), dir.path());
        assert_eq!(code, want, "{cmd}: {stderr}");
        assert!(stdout.starts_with(&format!("command={cmd}\n")), "{stdout}");
    }
}

#[test]
fn library_entry_point_reports_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("probability.ini");
    let args = |cmd: &str| {
        vec![
            "qevent".into(),
            cmd.to_string(),
            "--config".into(),
            cfg.display().to_string(),
            "--out".into(),
            dir.path().display().to_string(),
        ]
    };
    assert_eq!(qevent::cli::run(args("probability")), qevent::cli::EXIT_OK);
    assert_eq!(qevent::cli::run(args("orbit")), qevent::cli::EXIT_CONFIG);
}
