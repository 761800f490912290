//! End-to-end behavior of the `kcbs` binary: golden outputs, determinism,
//! exit codes, and the option-resolution order (flags over environment over
//! config file over built-in defaults).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Environment variables the binary reads; cleared on every spawn so a
/// polluted test environment cannot leak into assertions.
const ENV_KEYS: [&str; 18] = [
    "KCBS_CONFIG",
    "KCBS_BOUND",
    "KCBS_NBAR",
    "KCBS_EVENT",
    "KCBS_ETA",
    "KCBS_OUT",
    "KCBS_STATE",
    "KCBS_SEED",
    "KCBS_SERIES",
    "KCBS_TRIGGERS",
    "KCBS_FORCE_NUMBER_BASIS",
    "KCBS_CONTEXTS",
    "KCBS_INPUT",
    "KCBS_FAIR_SAMPLING",
    "KCBS_RELABEL",
    "KCBS_PARTNER",
    "KCBS_LAMBDAS",
    "KCBS_POINTS",
];

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kcbs"));
    for key in ENV_KEYS {
        cmd.env_remove(key);
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn data_file(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn threshold_prints_nine_significant_digits() {
    let out = run(&["threshold"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "0.894427191\n");

    let out = run(&["threshold", "--bound=-3.0074"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "0.895254536\n");
}

#[test]
fn threshold_rejects_bounds_outside_the_physical_range() {
    let out = run(&["threshold", "--bound=-5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("outside [0, 1]"));
}

#[test]
fn flags_override_environment_which_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("threshold.cfg");
    std::fs::write(&cfg, "bound = -3.0074\n").unwrap();
    let cfg = cfg.to_string_lossy().into_owned();

    let out = bin()
        .args(["threshold", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "0.895254536\n");

    let out = bin()
        .args(["threshold", "--config", &cfg])
        .env("KCBS_BOUND", "-3")
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "0.894427191\n");

    let out = bin()
        .args(["threshold", "--config", &cfg, "--bound=-3"])
        .env("KCBS_BOUND", "-3.0074")
        .output()
        .unwrap();
    assert_eq!(stdout(&out), "0.894427191\n");
}

#[test]
fn config_files_reject_unknown_keys_and_missing_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = run(&["threshold", "--config", &cfg.to_string_lossy()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown key `bogus`"));

    let out = run(&["threshold", "--config", "/nonexistent.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_emits_closed_form_rows() {
    let out = run(&["sweep", "--nbar", "0", "--event", "e3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "nbar,event,beta,p_event\n0,e3,5,1\n");

    // Conditioning on a click is undefined at zero intensity.
    let out = run(&["sweep", "--nbar", "0", "--event", "e1"]);
    assert_eq!(out.status.code(), Some(2));

    let args = ["sweep", "--nbar", "0.1,1.24", "--event", "e1,e2,e3"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(out_pair(&first), out_pair(&second));
    assert_eq!(stdout(&first).lines().count(), 1 + 6);
}

fn out_pair(out: &Output) -> (Option<i32>, String) {
    (out.status.code(), stdout(out))
}

#[test]
fn sweep_reads_values_from_the_environment() {
    let by_flag = run(&["sweep", "--nbar", "0.4", "--event", "e2"]);
    let by_env = bin()
        .arg("sweep")
        .env("KCBS_NBAR", "0.4")
        .env("KCBS_EVENT", "e2")
        .output()
        .unwrap();
    assert_eq!(out_pair(&by_flag), out_pair(&by_env));
}

#[test]
fn simulate_is_deterministic_in_the_seed() {
    let args = [
        "simulate",
        "--state",
        "coherent:0.5",
        "--triggers",
        "20000",
        "--seed",
        "7",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));

    let reseeded = run(&[
        "simulate",
        "--state",
        "coherent:0.5",
        "--triggers",
        "20000",
        "--seed",
        "8",
    ]);
    assert_ne!(stdout(&first), stdout(&reseeded));

    // Same state through the number-basis route: different stream, same format.
    let forced = run(&[
        "simulate",
        "--state",
        "coherent:0.5",
        "--triggers",
        "20000",
        "--seed",
        "7",
        "--force-number-basis",
    ]);
    assert_eq!(forced.status.code(), Some(0));
    assert_ne!(stdout(&first), stdout(&forced));
    assert_eq!(
        stdout(&forced).lines().count(),
        stdout(&first).lines().count()
    );
}

#[test]
fn simulate_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let counts = dir.path().join("counts.csv");
    let counts = counts.to_string_lossy().into_owned();
    let out = run(&[
        "simulate",
        "--state",
        "fock:1",
        "--triggers",
        "20000",
        "--series",
        "2",
        "--seed",
        "11",
        "--out",
        &counts,
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "");
    assert!(stderr(&out).contains("5 contexts x 2 series x 20000 triggers"));

    let out = run(&["analyze", &counts, "--event", "e2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "single photon data should violate the bound"
    );
    let report = stdout(&out);
    let beta_line = report
        .lines()
        .find(|l| l.starts_with("all,beta,"))
        .expect("report carries a beta row");
    let beta: f64 = beta_line.split(',').nth(2).unwrap().parse().unwrap();
    assert!(beta < -3.8, "ideal single photon beta {beta}");
}

#[test]
fn analyze_reproduces_the_recorded_runs() {
    let single = data_file("single_photon.csv");
    let out = run(&["analyze", &single, "--relabel", "--event", "e2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all,beta,-3.9175472"));
    assert!(stderr(&out).contains("bound -3 violated"));

    // The recorded tables use the swapped detector numbering; analysis
    // without --relabel sees different correlations.
    let raw = run(&["analyze", &single, "--event", "e2"]);
    assert_ne!(stdout(&raw), stdout(&out));

    let coherent = data_file("coherent_nbar_1.24.csv");
    let out = run(&["analyze", &coherent, "--relabel", "--event", "e3"]);
    assert_eq!(
        out.status.code(),
        Some(4),
        "coherent light must not violate the bound"
    );
    assert!(stdout(&out).contains("all,beta,0.148833829"));
}

#[test]
fn analyze_reports_parse_errors_with_line_numbers() {
    let out = run(&["analyze", "/nonexistent.csv", "--event", "e2"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "context,series\n1,1\n").unwrap();
    let out = run(&["analyze", &bad.to_string_lossy(), "--event", "e2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 1"));

    let out = run(&["analyze", &data_file("single_photon.csv")]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "missing --event is a usage error"
    );
}

#[test]
fn mixture_golden_rows_and_crossing() {
    let out = run(&["mixture", "--lambdas", "0,0.5,1"]);
    assert_eq!(out.status.code(), Some(0));
    let body = stdout(&out);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("lambda,beta,witnessed"));
    assert_eq!(lines.next(), Some("0,-3.94427191,true"));
    assert_eq!(lines.clone().last(), Some("1,5,false"));
    assert!(stderr(&out).contains("lambda* = 0.105572809"));

    let out = run(&["mixture", "--lambdas", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_failures_use_their_own_exit_code() {
    let out = run(&["simulate", "--state", "thermal:1000000", "--triggers", "10"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("tail mass"));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["threshold", "--frobnicate"]).status.code(), Some(1));
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(stdout(&help).contains("analyze"));
}

#[test]
fn output_files_match_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let to_file = run(&[
        "sweep",
        "--nbar",
        "0.72",
        "--event",
        "e2",
        "--out",
        &path.to_string_lossy(),
    ]);
    assert_eq!(to_file.status.code(), Some(0));
    let to_stdout = run(&["sweep", "--nbar", "0.72", "--event", "e2"]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&to_stdout));
}

#[test]
fn analyze_accepts_input_via_environment() {
    let out = bin()
        .args(["analyze", "--relabel", "--event", "e2"])
        .env("KCBS_INPUT", PathBuf::from(data_file("single_photon.csv")))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("all,beta,-3.9175472"));
}
