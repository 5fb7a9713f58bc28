use std::fs;

use spinchain_harness::sweep::ThresholdStatus;
use spinchain_harness::{
    apply_overrides, parse_config, preset, replay, run_preset, run_sweep, threshold_speed_search, ExperimentPreset,
    HarnessError, Override, PresetName, SweepSpec,
};

fn small(name: PresetName, extra: &[&str]) -> ExperimentPreset {
    let mut o: Vec<Override> = [
        "chain.num_sites=11",
        "run.t_end=40",
        "run.snapshot_times=0,20,40",
        "integrator.snapshot_interval=5",
        "integrator.dt=0.005",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();
    o.extend(extra.iter().map(|s| s.parse().unwrap()));
    apply_overrides(&preset(name), &o).unwrap()
}

#[test]
fn empty_overrides_leave_presets_untouched() {
    for name in PresetName::ALL {
        assert_eq!(apply_overrides(&preset(name), &[]).unwrap(), preset(name));
    }
}

#[test]
fn config_file_matches_command_line() {
    let text = "# small chain\nnum_sites = 9\nschedule.speed = 0.2\n\nrun.t_end = 40 # inline\n";
    let from_file = apply_overrides(&preset(PresetName::Fig3), &parse_config(text).unwrap()).unwrap();
    let from_cli = apply_overrides(
        &preset(PresetName::Fig3),
        &["chain.num_sites=9", "speed=0.2", "t_end=40"].map(|s| s.parse().unwrap()),
    )
    .unwrap();
    assert_eq!(from_file, from_cli);
    assert_eq!(from_file.chain.num_sites, 9);
}

#[test]
fn bad_config_reports_line() {
    match parse_config("num_sites = 9\nno equals here\n") {
        Err(HarnessError::Config { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    let err = apply_overrides(&preset(PresetName::Fig3), &["chain.nope=1".parse().unwrap()]).unwrap_err();
    assert_eq!(err.class(), "bad_override");
    let err = apply_overrides(&preset(PresetName::Fig3), &["chain.num_sites=abc".parse().unwrap()]).unwrap_err();
    assert_eq!(err.class(), "bad_override");
}

#[test]
fn runs_replay_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let p = small(PresetName::Fig7, &[]);
    let artifacts = run_preset(&p).unwrap();
    let written = artifacts.write_to(dir.path()).unwrap();
    assert!(written.iter().any(|w| w.extension().is_some_and(|e| e == "svg")));
    let summary = dir.path().join(artifacts.summary_name());
    let r = replay(&summary).unwrap();
    assert!(r.identical);
    assert_eq!(r.compared.len(), artifacts.files.len());

    let csv = dir.path().join("fig7_profile.csv");
    let mut body = fs::read_to_string(&csv).unwrap();
    body.push('\n');
    fs::write(&csv, body).unwrap();
    assert_eq!(replay(&summary).unwrap_err().class(), "replay_mismatch");
}

#[test]
fn scan_presets_write_one_profile_per_value() {
    let p = small(PresetName::Fig2, &["scan.values=2,8"]);
    let artifacts = run_preset(&p).unwrap();
    assert_eq!(artifacts.report.points.len(), 2);
    assert!(artifacts.files.contains_key("fig2_scan.csv"));
    assert!(artifacts.report.point_for(8.0).is_some());
}

#[test]
fn sweep_order_does_not_change_rows() {
    let base = small(PresetName::Fig7, &[]);
    let a = run_sweep(
        &base,
        &SweepSpec {
            parameter: "delta".into(),
            values: vec![0.1, 0.4],
            ensemble: 2,
        },
    )
    .unwrap();
    let b = run_sweep(
        &base,
        &SweepSpec {
            parameter: "delta".into(),
            values: vec![0.4, 0.1],
            ensemble: 2,
        },
    )
    .unwrap();
    for row in &a.rows {
        let twin = b.rows.iter().find(|r| r.value == row.value && r.seed == row.seed).unwrap();
        assert_eq!(row, twin);
    }
    let seeds: Vec<u64> = a.rows.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![1, 2, 1, 2]);
}

#[test]
fn speed_sweep_keeps_distance_fixed() {
    let base = small(PresetName::Fig3, &["speed=0.25"]);
    let t = run_sweep(
        &base,
        &SweepSpec {
            parameter: "speed".into(),
            values: vec![0.25, 0.125],
            ensemble: 1,
        },
    )
    .unwrap();
    assert_eq!(t.rows[0].result.t, 40.0);
    assert_eq!(t.rows[1].result.t, 80.0);
}

#[test]
fn threshold_contract() {
    // 11 sites, 10 sites travelled at S = 0.25
    let base = small(PresetName::Fig3, &["speed=0.25"]);
    let r = threshold_speed_search(&base, 0.8, 0.01).unwrap();
    assert_eq!(r.status, ThresholdStatus::Converged);
    let (lo, hi) = r.bracket;
    assert!(lo < hi && hi - lo <= 0.01);
    assert!(r.speed == lo);
    let at = |s: f64| r.evaluations.iter().find(|e| e.0 == s).map(|e| e.1);
    assert!(at(lo).unwrap() >= 0.8);
    assert!(at(hi).unwrap() < 0.8);

    let easy = threshold_speed_search(&base, 1e-9, 0.01).unwrap();
    assert_eq!(easy.status, ThresholdStatus::AboveRange);
    assert_eq!(threshold_speed_search(&base, 1.5, 0.01).unwrap_err().class(), "invalid_parameter");

    // too weak a well to carry the excitation at any speed
    let weak = small(PresetName::Fig3, &["speed=0.25", "chain.field_amplitude_c=0.01"]);
    let r = threshold_speed_search(&weak, 0.99, 0.05).unwrap();
    assert_eq!(r.status, ThresholdStatus::Unattainable);
    assert!(r.evaluations.iter().all(|e| e.1 < 0.99));
}
