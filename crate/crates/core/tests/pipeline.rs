use std::collections::BTreeMap;

use shoulder_core::config::AnalysisConfig;
use shoulder_core::error::StageError;
use shoulder_core::params::{analyze_task, extract_session};
use shoulder_core::segment::SegmentConfig;
use shoulder_core::session::TaskKind;
use shoulder_core::synth::{
    generate_truth, round_trip_in_memory, synthesize_session, MotionProfile, MotionTask, NoiseProfile,
};
use shoulder_core::{SensorSite, Stage, Trace};

fn truth_traces(p: &MotionProfile) -> (Trace, Trace) {
    let truth = generate_truth(p).unwrap();
    let w = truth.tasks[0].window;
    (truth.humerothoracic.window(w.start, w.end), truth.scapulothoracic.window(w.start, w.end))
}

#[test]
fn pipeline_is_deterministic() {
    let p = MotionProfile { noise: NoiseProfile::biased(), ..Default::default() };
    let (_, data) = synthesize_session(&p).unwrap();
    let cfg = AnalysisConfig::default();
    let a = extract_session(&data, &cfg).unwrap();
    let b = extract_session(&data, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rom_ignores_constant_offset() {
    let (h, s) = truth_traces(&MotionProfile::default());
    let cfg = SegmentConfig::default();
    let base = analyze_task(TaskKind::Abduction, &h, Some(&s), &cfg).unwrap();
    for c in [-40.0, 7.5, 90.0] {
        let shifted = analyze_task(TaskKind::Abduction, &h.map(|x| x + c), Some(&s.map(|x| x + c)), &cfg).unwrap();
        for (a, b) in base.rom.per_repetition.iter().zip(&shifted.rom.per_repetition) {
            assert!((a - b).abs() < 1e-9);
        }
        let (a, b) = (base.rom_scapula.as_ref().unwrap(), shifted.rom_scapula.as_ref().unwrap());
        assert!((a.mean - b.mean).abs() < 1e-9);
    }
}

#[test]
fn stretching_time_scales_activation() {
    let (h, s) = truth_traces(&MotionProfile::default());
    let cfg = SegmentConfig::default();
    let k = 2.0;
    let stretch = |t: &Trace| Trace::new(t.t.iter().map(|x| x * k).collect(), t.v.clone());
    let base = analyze_task(TaskKind::Abduction, &h, Some(&s), &cfg).unwrap();
    let slow = analyze_task(TaskKind::Abduction, &stretch(&h), Some(&stretch(&s)), &cfg.time_scaled(k)).unwrap();
    let (a, b) = (base.activation.unwrap(), slow.activation.unwrap());
    assert!((b.onset_lead - k * a.onset_lead).abs() < 1e-9);
    assert!((b.act_time_humerus - k * a.act_time_humerus).abs() < 1e-9);
    assert!((b.act_time_scapula - k * a.act_time_scapula).abs() < 1e-9);
    assert!((base.rom.mean - slow.rom.mean).abs() < 1e-9);
}

#[test]
fn shr_times_rom_s_is_rom_a() {
    for noise in [NoiseProfile::none(), NoiseProfile::typical()] {
        let p = MotionProfile { noise, ..Default::default() };
        let (_, a, _) = round_trip_in_memory(&p, &AnalysisConfig::default()).unwrap();
        let m = &a.parameters;
        let product = m.shr_ratio.unwrap() * m.rom_s.as_ref().unwrap().mean;
        assert!((product - m.rom_a.as_ref().unwrap().mean).abs() < 1e-9);
    }
}

#[test]
fn missing_scapula_marks_fields_absent() {
    let (_, mut data) = synthesize_session(&MotionProfile::default()).unwrap();
    data.streams.remove(&SensorSite::Scapula);
    data.manifest.streams.remove(&SensorSite::Scapula);
    let m = extract_session(&data, &AnalysisConfig::default()).unwrap().parameters;
    assert!(m.rom_a.is_some());
    assert!(m.rom_s.is_none());
    assert!(m.shr_ratio.is_none());
    assert!(m.onset_lead_scapula.is_none());
    assert!(m.act_time_humerus.is_some());
}

#[test]
fn empty_session_fails_at_ingestion() {
    let (_, mut data) = synthesize_session(&MotionProfile::default()).unwrap();
    for s in data.streams.values_mut() {
        s.clear();
    }
    let e = extract_session(&data, &AnalysisConfig::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Io);
    assert_eq!(e.error, StageError::EmptySession);

    data.streams = BTreeMap::new();
    let e = extract_session(&data, &AnalysisConfig::default()).unwrap_err();
    assert_eq!(e.stage, Stage::Io);
}

#[test]
fn absent_task_is_absent() {
    let p = MotionProfile {
        tasks: vec![MotionTask { kind: TaskKind::Elevation, ..Default::default() }],
        ..Default::default()
    };
    let (_, a, _) = round_trip_in_memory(&p, &AnalysisConfig::default()).unwrap();
    let m = &a.parameters;
    assert!(m.rom_e.is_some());
    assert!(m.rom_a.is_none() && m.rom_s.is_none() && m.shr_ratio.is_none());
    assert!(m.act_time_humerus.is_none() && m.onset_lead_scapula.is_none());
}

#[test]
fn healthy_like_session() {
    // elevation and abduction magnitudes of the healthy group, scapula 0.12 s early
    let p = MotionProfile {
        tasks: vec![
            MotionTask { kind: TaskKind::Elevation, peak: 157.6, period: 1.0, ..Default::default() },
            MotionTask {
                kind: TaskKind::Abduction,
                peak: 153.2,
                scapula_share: 26.1 / 153.2,
                scapula_lag: -0.12,
                period: 1.0,
                ..Default::default()
            },
        ],
        ..Default::default()
    };
    let (_, a, cmp) = round_trip_in_memory(&p, &AnalysisConfig::default()).unwrap();
    let m = &a.parameters;
    assert!((m.rom_e.as_ref().unwrap().mean - 157.6).abs() < 2.0);
    assert!((m.rom_a.as_ref().unwrap().mean - 153.2).abs() < 2.0);
    assert!((m.rom_s.as_ref().unwrap().mean - 26.1).abs() < 2.0);
    assert!((m.onset_lead_scapula.unwrap() - 0.12).abs() < 0.05, "{:?}", m.onset_lead_scapula);
    assert!(cmp.pass, "{cmp:#?}");
}

#[test]
fn left_side_matches_right() {
    let cfg = AnalysisConfig::default();
    let right = round_trip_in_memory(&MotionProfile::default(), &cfg).unwrap().1.parameters;
    let left = round_trip_in_memory(
        &MotionProfile { side: shoulder_core::session::Side::Left, ..Default::default() },
        &cfg,
    )
    .unwrap()
    .1
    .parameters;
    let (r, l) = (right.rom_s.unwrap().mean, left.rom_s.unwrap().mean);
    assert!((r - l).abs() < 1e-6, "{r} vs {l}");
}
