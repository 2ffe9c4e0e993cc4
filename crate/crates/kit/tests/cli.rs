use std::fs;
use std::path::Path;
use std::process::Command;

use shoulder_kit::cli::{run, EXIT_DATA, EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE};

fn fixture() -> String {
    format!("{}/fixtures/reference_cohort.toml", env!("CARGO_MANIFEST_DIR"))
}

fn shoulder(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("shoulder").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn tables_on_fixture_prints_scapular_footer() {
    let (code, out, _) = shoulder(&["tables", "--cohort", &fixture()]);
    assert_eq!(code, EXIT_OK);
    assert!(out.lines().any(|l| l.starts_with("| Mean ± SD |") && l.contains("34.6 ± 7.7")), "{out}");
}

#[test]
fn tables_json_parses() {
    let (code, out, _) = shoulder(&["tables", "--cohort", &fixture(), "--format", "json"]);
    assert_eq!(code, EXIT_OK);
    shoulder_kit::sessionio::report::parse_cohort_report(&out, Path::new("stdout")).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    let (code, _, err) = shoulder(&[]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"), "{err}");
    assert_eq!(shoulder(&["tables", "--cohort", "x", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(shoulder(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(shoulder(&["analyze", "--session", "x"]).0, EXIT_USAGE);
    assert_eq!(shoulder(&["cohort", "--reports", "x", "--out", "y", "--require", "XX"]).0, EXIT_USAGE);
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = shoulder(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("roundtrip"));
}

#[test]
fn roundtrip_default_profile_passes() {
    let (code, out, _) = shoulder(&["roundtrip"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.ends_with("overall: PASS\n"));
}

#[test]
fn roundtrip_tolerance_failure_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "schema_version = 1\n[segment]\nsmoothing_window = 1.2\n").unwrap();
    let (code, out, _) = shoulder(&["roundtrip", "--config", p(&cfg)]);
    assert_eq!(code, EXIT_TOLERANCE, "{out}");
    assert!(out.contains("FAIL"));
}

#[test]
fn data_errors_name_the_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _, err) = shoulder(&["analyze", "--session", p(&tmp.path().join("missing")), "--out", p(&tmp.path().join("r.json"))]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("shoulder: [io] "), "{err}");
    assert_eq!(err.lines().count(), 1);

    // Streams present but a sensor that never holds still.
    let profile = tmp.path().join("p.toml");
    fs::write(&profile, "schema_version = 1\n[noise]\ngyro_bias = [0.1, 0.1, 0.1]\n").unwrap();
    let s = tmp.path().join("s");
    assert_eq!(shoulder(&["simulate", "--profile", p(&profile), "--out", p(&s)]).0, EXIT_OK);
    let (code, _, err) = shoulder(&["analyze", "--session", p(&s), "--out", p(&tmp.path().join("r.json"))]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("shoulder: [fusion] "), "{err}");
    assert!(!tmp.path().join("r.json").exists());

    let (code, _, err) = shoulder(&["cohort", "--reports", p(&tmp.path().join("*.json")), "--out", p(&tmp.path().join("c.json"))]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("shoulder: [io] "), "{err}");
}

#[test]
fn missing_required_cohort_is_a_stats_error() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s");
    let r = tmp.path().join("r.json");
    assert_eq!(shoulder(&["simulate", "--out", p(&s)]).0, EXIT_OK);
    assert_eq!(shoulder(&["analyze", "--session", p(&s), "--out", p(&r)]).0, EXIT_OK);
    let out = tmp.path().join("c.json");
    let (code, _, err) =
        shoulder(&["cohort", "--reports", p(&tmp.path().join("*.json")), "--out", p(&out), "--require", "AC-T0,HC"]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.starts_with("shoulder: [stats] "), "{err}");
    assert!(!out.exists());
}

#[test]
fn binary_matches_library_entry_point() {
    let out = Command::new(env!("CARGO_BIN_EXE_shoulder")).args(["tables", "--cohort", &fixture()]).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), shoulder(&["tables", "--cohort", &fixture()]).1);
    let out = Command::new(env!("CARGO_BIN_EXE_shoulder")).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}
