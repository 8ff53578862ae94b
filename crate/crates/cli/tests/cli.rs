use std::path::Path;
use std::process::{Command, Output};

fn afc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afc"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .expect("afc runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(summary: &str, key: &str) -> f64 {
    summary
        .split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in `{summary}`"))
        .trim_end_matches(',')
        .parse()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn two_pass_protocol_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = afc(dir.path(), &["protocol", "--two-pass"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let eff = field(&stdout(&o), "efficiency");
    assert!((eff - 0.86).abs() <= 0.01, "{eff}");
    let csv = read(dir.path(), "protocol.csv");
    assert!(csv.starts_with("protocol,"), "{csv}");
    assert!(csv.lines().nth(1).unwrap().starts_with("two_pass,5,10,0.005,"));
}

#[test]
fn single_pass_protocol_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = afc(dir.path(), &["protocol"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!((field(&stdout(&o), "efficiency") - 0.46).abs() <= 0.01);
}

#[test]
fn reproduce_fig6b_train() {
    let dir = tempfile::tempdir().unwrap();
    let o = afc(dir.path(), &["reproduce", "fig6b"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path(), "fig6b.csv");
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| h.starts_with("intensity")).unwrap();
    let row = csv
        .lines()
        .skip(1)
        .find(|l| l.starts_with("1,"))
        .expect("k = 1 row");
    let i1: f64 = row.split(',').nth(col).unwrap().parse().unwrap();
    assert!((i1 - 0.46).abs() <= 0.01, "{i1}");
    assert!(dir.path().join("fig6b_trace.csv").exists());
}

#[test]
fn spectrum_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "finesse = 10  # delta = 0.1\n").unwrap();
    let o = afc(dir.path(), &["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path(), "spectrum.csv");
    assert_eq!(csv.lines().next(), Some("nu_over_nu0,absorption,dispersion"));
    assert_eq!(csv.lines().count(), 1202);
    assert!(!csv.contains('\r'));
}

#[test]
fn physical_units_rename_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = afc(dir.path(), &["--physical", "nu0=2", "spectrum"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = read(dir.path(), "spectrum.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("nu,absorption,dispersion"));
    assert!(lines.next().unwrap().starts_with("-6,"));
    let bad = afc(dir.path(), &["--physical", "2", "spectrum"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_errors_exit_1_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "shape = square\n\nfinesse = 0.5\n").unwrap();
    let o = afc(dir.path(), &["--config", cfg.to_str().unwrap(), "train"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("F >= 1"), "{err}");
    assert!(stdout(&o).is_empty());

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = afc(dir.path(), &["--config", cfg.to_str().unwrap(), "train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"));
}

#[test]
fn seedless_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = afc(dir.path(), &["--seedless", "train"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("deterministic"));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(afc(dir.path(), &["reproduce", "fig99"]).status.code(), Some(1));
    assert_eq!(afc(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(afc(dir.path(), &["--k-max", "0", "train"]).status.code(), Some(1));
    assert_eq!(afc(dir.path(), &["--model", "exact", "train"]).status.code(), Some(1));
    assert_eq!(afc(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn output_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for cmd in ["propagate", "sweep"] {
        assert_eq!(afc(a.path(), &[cmd]).status.code(), Some(0));
        assert_eq!(afc(b.path(), &["--sequential", cmd]).status.code(), Some(0));
    }
    for name in ["trace.csv", "train.csv", "sweep.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn k_max_and_model_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let o = afc(dir.path(), &["--k-max", "6", "train"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read(dir.path(), "train.csv").lines().count(), 1 + 7);
    let ideal = field(&stdout(&o), "I1");
    let o = afc(dir.path(), &["--model", "broadened", "train"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // gamma unset: the broadened model at gamma = 0 is the ideal comb
    assert!((field(&stdout(&o), "I1") - ideal).abs() < 1e-3);
}

#[test]
fn sweep_reports_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "finesse = 10\nsweep_min = 0\nsweep_max = 40\nsweep_steps = 81\n").unwrap();
    let o = afc(dir.path(), &["--config", cfg.to_str().unwrap(), "sweep"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!((field(&s, "d_p") - 20.0).abs() < 0.05, "{s}");
    assert!((field(&s, "efficiency") - 0.524).abs() < 0.002, "{s}");
    assert!(read(dir.path(), "sweep.csv").contains("# argmax: "));
}

#[test]
fn reproduce_numbers() {
    let dir = tempfile::tempdir().unwrap();
    for target in ["i1-f2", "i1-f10", "harmonic", "ceiling", "two-pass", "shallow", "fig7"] {
        let o = afc(dir.path(), &["reproduce", target]);
        assert_eq!(o.status.code(), Some(0), "{target}: {}", stderr(&o));
        assert!(stdout(&o).starts_with(&format!("target={target} ")));
    }
}
