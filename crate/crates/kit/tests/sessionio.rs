use std::fs;
use std::path::Path;

use proptest::prelude::*;
use shoulder_core::stats::cohort::Cohort;
use shoulder_core::synth::{synthesize_session, MotionProfile, NoiseProfile};
use shoulder_core::session::TaskWindow;
use shoulder_core::AnalysisConfig;
use shoulder_kit::fixture::ReferenceCohort;
use shoulder_kit::sessionio::report::{
    build_cohort, parse_cohort_report, parse_session_report, to_json, SessionRef, SessionReport, REPORT_SCHEMA,
};
use shoulder_kit::sessionio::stream::{format_value, parse_stream, round_value, stream_to_string};
use shoulder_kit::sessionio::{
    config_hash, config_to_toml, manifest_to_toml, markdown, parse_config, parse_manifest, parse_profile,
    profile_to_toml, read_session, session_files, write_session, IoError,
};

fn noisy() -> MotionProfile {
    MotionProfile { noise: NoiseProfile::typical(), seed: 7, ..MotionProfile::default() }
}

#[test]
fn session_survives_write_and_read() {
    let (_, data) = synthesize_session(&noisy()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    write_session(&data, &dir).unwrap();
    let back = read_session(&dir).unwrap();
    assert_eq!(back.manifest, data.manifest);
    for (site, samples) in &data.streams {
        let got = &back.streams[site];
        assert_eq!(got.len(), samples.len());
        for (a, b) in samples.iter().zip(got) {
            assert_eq!(round_value(a.gyro.x), b.gyro.x);
            assert!((a.accel.y - b.accel.y).abs() <= 1e-8 * a.accel.y.abs().max(1.0));
        }
    }
    // Writing over an existing session replaces it.
    write_session(&back, &dir).unwrap();
    assert_eq!(session_files(&read_session(&dir).unwrap()).unwrap(), session_files(&back).unwrap());
}

#[test]
fn manifest_and_profile_toml_round_trip() {
    let (_, data) = synthesize_session(&MotionProfile::default()).unwrap();
    let text = manifest_to_toml(&data.manifest);
    assert!(text.contains("[streams]"));
    assert_eq!(parse_manifest(&text, Path::new("m.toml")).unwrap(), data.manifest);

    let p = noisy();
    let text = profile_to_toml(&p);
    assert!(text.starts_with("schema_version = 1"));
    assert_eq!(parse_profile(&text, Path::new("p.toml")).unwrap(), p);
}

#[test]
fn profile_needs_schema_version() {
    let e = parse_profile("subject = \"x\"\n", Path::new("p.toml")).unwrap_err();
    assert!(e.to_string().contains("schema_version"), "{e}");
    let e = parse_profile("schema_version = 2\n", Path::new("p.toml")).unwrap_err();
    assert!(matches!(e, IoError::Validation { .. }));
}

#[test]
fn config_hash_ignores_formatting() {
    let cfg = AnalysisConfig::default();
    let text = config_to_toml(&cfg);
    let back = parse_config(&text, Path::new("c.toml")).unwrap();
    assert_eq!(back, cfg);
    let sparse = parse_config("schema_version = 1\n\n# defaults\n", Path::new("c.toml")).unwrap();
    assert_eq!(config_hash(&sparse), config_hash(&cfg));
    let tuned = parse_config("schema_version = 1\n[segment]\nsmoothing_window = 0.5\n", Path::new("c.toml")).unwrap();
    assert_ne!(config_hash(&tuned), config_hash(&cfg));
    assert!(parse_config("schema_version = 1\nbogus = 3\n", Path::new("c.toml")).is_err());
}

#[test]
fn empty_streams_leave_nothing_behind() {
    let (_, mut data) = synthesize_session(&MotionProfile::default()).unwrap();
    for s in data.streams.values_mut() {
        s.clear();
    }
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let e = write_session(&data, &dir).unwrap_err();
    assert!(matches!(e, IoError::EmptySession), "{e}");
    assert!(!dir.exists());
    assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[test]
fn overlapping_tasks_are_rejected() {
    let (_, mut data) = synthesize_session(&MotionProfile::default()).unwrap();
    let t = data.manifest.tasks[0];
    data.manifest.tasks.push(TaskWindow { start: t.start + 1.0, end: t.end + 1.0, ..t });
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("s");
    let e = write_session(&data, &dir).unwrap_err();
    assert!(matches!(e, IoError::Validation { .. }), "{e}");
    assert!(!dir.exists());

    let text = manifest_to_toml(&data.manifest);
    assert!(matches!(parse_manifest(&text, Path::new("m.toml")), Err(IoError::Validation { .. })));
}

#[test]
fn foreign_directory_is_not_replaced() {
    let (_, data) = synthesize_session(&MotionProfile::default()).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("notes.txt"), "keep me").unwrap();
    assert!(write_session(&data, tmp.path()).is_err());
    assert_eq!(fs::read_to_string(tmp.path().join("notes.txt")).unwrap(), "keep me");
}

#[test]
fn stream_errors_carry_line_numbers() {
    let header = "t,ax,ay,az,gx,gy,gz,mx,my,mz\n";
    let good = "0,0,9.8,0,0,0,0,1,0,0\n";
    let cases = [
        (format!("{header}{good}0,0,9.8,0,0,0,0,1,0,0\n"), 3),
        (format!("{header}{good}0.01,0,nan,0,0,0,0,1,0,0\n"), 3),
        (format!("{header}{good}0.01,0,x,0,0,0,0,1,0,0\n"), 3),
        (format!("{header}{good}0.01,0,9.8,0,0,0,0,1,0\n"), 3),
    ];
    for (text, line) in cases {
        match parse_stream(&text, "s.csv").unwrap_err() {
            IoError::Parse { line: l, .. } => assert_eq!(l, line, "{text}"),
            IoError::Validation { line: Some(l), .. } => assert_eq!(l, line, "{text}"),
            other => panic!("{other}"),
        }
    }
}

#[test]
fn session_report_json_round_trip() {
    let (_, data) = synthesize_session(&MotionProfile::default()).unwrap();
    let cfg = AnalysisConfig::default();
    let analysis = shoulder_core::params::extract_session(&data, &cfg).unwrap();
    let r = SessionReport {
        schema_version: REPORT_SCHEMA,
        subject: "s1".into(),
        group: data.manifest.group,
        timepoint: data.manifest.timepoint,
        side: data.manifest.side,
        session: "s1".into(),
        config_hash: config_hash(&cfg),
        parameters: analysis.parameters,
    };
    let text = to_json(&r);
    let back = parse_session_report(&text, Path::new("r.json")).unwrap();
    assert_eq!(back, r);
    assert_eq!(to_json(&back), text);
}

#[test]
fn cohort_report_json_round_trip() {
    let cfg = AnalysisConfig::default();
    let report = ReferenceCohort::embedded().report("fixture", "x", &cfg).unwrap();
    let text = to_json(&report);
    let back = parse_cohort_report(&text, Path::new("c.json")).unwrap();
    assert_eq!(back, report);
    assert_eq!(to_json(&back), text);
}

#[test]
fn markdown_footer_uses_mean_sd_format() {
    let cfg = AnalysisConfig::default();
    let report = ReferenceCohort::embedded().report("fixture", "x", &cfg).unwrap();
    let md = markdown::render(&report, cfg.primary_sidedness);
    assert!(md.contains("| Mean ± SD | 21.0 ± 7.1 | 34.6 ± 7.7 |"), "{md}");
    assert!(md.contains("0.0312 (2/64)"));
    assert!(md.contains("SD convention: population (n)."));
}

#[test]
fn required_cohort_without_subjects_fails() {
    let cfg = AnalysisConfig::default();
    let fixture = ReferenceCohort::embedded();
    let entries = fixture
        .records
        .iter()
        .filter(|r| r.cohort() != Some(Cohort::Hc))
        .map(|r| (SessionRef { subject: r.subject.clone(), cohort: r.cohort(), source: "f".into(), sha256: String::new() }, r.clone()))
        .collect();
    let e = build_cohort(entries, &[Cohort::AcT0, Cohort::Hc], &cfg, Vec::new()).unwrap_err();
    assert!(matches!(e, IoError::EmptyGroup(ref g) if g == "HC"), "{e}");
    assert_eq!(e.stage(), shoulder_core::Stage::Stats);
}

#[test]
fn duplicate_subjects_are_rejected() {
    let cfg = AnalysisConfig::default();
    let r = ReferenceCohort::embedded().records[0].clone();
    let entry = |src: &str| {
        (SessionRef { subject: r.subject.clone(), cohort: r.cohort(), source: src.into(), sha256: String::new() }, r.clone())
    };
    assert!(build_cohort(vec![entry("a"), entry("b")], &[], &cfg, Vec::new()).is_err());
}

proptest! {
    #[test]
    fn formatted_values_parse_to_the_rounded_value(x in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let s = format_value(x);
        prop_assert!(!s.contains('e') && !s.contains('E'));
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back, round_value(x));
        prop_assert_eq!(format_value(back), s);
    }
}

#[test]
fn stream_text_is_stable() {
    let (_, data) = synthesize_session(&noisy()).unwrap();
    let s = &data.streams.values().next().unwrap();
    let text = stream_to_string(s);
    let back = parse_stream(&text, "s.csv").unwrap();
    assert_eq!(stream_to_string(&back), text);
}
