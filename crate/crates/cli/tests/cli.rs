//! End-to-end runs of the `mpemba` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mpemba_cli::{parse_config, read_series_csv};
use mpemba_core::Mode;

const SMOKE: &str = "\
mode = qme
resource = coherence
n_sites = 6
n_a = 2
theta_values = 0.5, 1.4
epsilon = 0.4
depth = 4
n_realizations = 2
master_seed = 7
";

fn mpemba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpemba")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path
}

fn run_smoke(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let cfg = write_config(dir, SMOKE);
    let out = dir.join(out);
    let mut args = vec!["qme", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mpemba(&args)
}

#[test]
fn qme_smoke_writes_series_crossings_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let output = run_smoke(tmp.path(), "out", &[]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let out = tmp.path().join("out");
    for name in ["series_theta_0.5.csv", "series_theta_1.4.csv"] {
        let s = read_series_csv(&out.join(name)).unwrap();
        assert_eq!(s.depths, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.n_realizations, 2);
    }
    let crossings = fs::read_to_string(out.join("crossings.csv")).unwrap();
    assert_eq!(crossings.lines().count(), 2);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("master_seed"));
    assert!(manifest.contains("crossings.csv"));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("n_sites = 6"), "{stdout}");
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_smoke(tmp.path(), "a", &["--threads", "1"]).status.success());
    assert!(run_smoke(tmp.path(), "b", &["--threads", "3"]).status.success());
    for name in ["series_theta_0.5.csv", "series_theta_1.4.csv", "crossings.csv"] {
        let a = fs::read(tmp.path().join("a").join(name)).unwrap();
        let b = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn seed_flag_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_smoke(tmp.path(), "a", &[]).status.success());
    assert!(run_smoke(tmp.path(), "b", &["--seed", "8"]).status.success());
    let a = fs::read(tmp.path().join("a/series_theta_0.5.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/series_theta_0.5.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn invalid_configuration_exits_with_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    let output = run_smoke(tmp.path(), "out", &["--set", "epsilon=1.5"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("epsilon"));

    let output = run_smoke(tmp.path(), "out", &["--set", "colour=blue"]);
    assert_eq!(output.status.code(), Some(1));

    let output = run_smoke(tmp.path(), "out", &["--threads", "0"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn markov_run_reports_spectrum_and_notes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let output = mpemba(&["markov", "--out", out.to_str().unwrap(), "--set", "steps=5"]);
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let spectrum = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 17);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("trace_preservation_deviation"));
    assert!(manifest.contains("steady_state_deviation_from_maximally_mixed"));
    let s = read_series_csv(&out.join("series_theta_0.2.csv")).unwrap();
    assert_eq!(s.depths, (0..=5).collect::<Vec<_>>());
}

#[test]
fn markov_with_raw_gate_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let output = mpemba(&["markov", "--out", out.to_str().unwrap(), "--set", "reunitarize=false"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn enumerate_gates_lists_768_monomials() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("g");
    let output = mpemba(&["enumerate-gates", "--out", out.to_str().unwrap()]);
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("gate_count: 768"));
    let text = fs::read_to_string(out.join("gates.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 768 * 4);
    let last = rows.last().unwrap().split(',').next().unwrap();
    assert_eq!(last, "767");
}

#[test]
fn enumerate_gates_rejects_configuration() {
    let output = mpemba(&["enumerate-gates", "--set", "n_sites=4"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn shipped_coherence_config_has_reference_geometry() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig1a_coherence.cfg");
    let cfg = parse_config(&path, Mode::Qme).unwrap().experiment;
    assert_eq!(cfg.n_sites, 20);
    assert_eq!(cfg.region_size, 2);
    assert_eq!(cfg.epsilon, 0.4);
}
