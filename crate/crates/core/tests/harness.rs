use dfrc::harness::{
    self, emit, ExperimentConfig, NmseAggregation, OutputFormat, SweepSpec, SweepVar,
};
use dfrc::receivers::{DetectorStrategy, Method};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json_str(
        r#"{
            "system": { "M_t": 1, "M_r": 2, "N_t": 1, "L": 3, "P_r_dB": 0, "sigma2": 0.05 },
            "sweep": "L=3:5:1",
            "trials": 24,
            "seed": 99,
            "schemes": ["sic", "projection", "joint_ml", "genie"],
            "detector": "exhaustive"
        }"#,
    )
    .unwrap();
    cfg.nmse_aggregation = NmseAggregation::MeanOfRatios;
    cfg
}

#[test]
fn output_bytes_do_not_depend_on_thread_count() {
    let cfg = small();
    let one = emit::to_csv_string(&harness::run_sweep_with_threads(&cfg, 1).unwrap()).unwrap();
    let four = emit::to_csv_string(&harness::run_sweep_with_threads(&cfg, 4).unwrap()).unwrap();
    assert_eq!(one, four);
    let again = emit::to_csv_string(&harness::run_sweep_with_threads(&cfg, 3).unwrap()).unwrap();
    assert_eq!(one, again);
}

#[test]
fn different_seeds_give_different_numbers() {
    let a = small();
    let mut b = small();
    b.master_seed += 1;
    let ra = harness::run_sweep_with_threads(&a, 2).unwrap();
    let rb = harness::run_sweep_with_threads(&b, 2).unwrap();
    assert_ne!(
        emit::to_csv_string(&ra).unwrap(),
        emit::to_csv_string(&rb).unwrap()
    );
}

#[test]
fn files_round_trip_in_both_formats() {
    let cfg = small();
    let records = harness::run_sweep_with_threads(&cfg, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for (name, format) in [("r.csv", OutputFormat::Csv), ("r.json", OutputFormat::Json)] {
        let path = dir.path().join(name);
        harness::emit_results(&records, &path, format).unwrap();
        assert_eq!(harness::read_results(&path).unwrap(), records);
    }
}

#[test]
fn every_point_reports_every_scheme() {
    let cfg = small();
    let records = harness::run_sweep_with_threads(&cfg, 2).unwrap();
    for l in [3.0, 4.0, 5.0] {
        for (scheme, metric) in [
            ("sic", "ber"),
            ("projection", "bler"),
            ("joint_ml", "nmse"),
            ("genie", "crb"),
            ("projection", "rate"),
        ] {
            let r = harness::find_record(&records, l, Method::parse(scheme).unwrap(), metric)
                .unwrap_or_else(|| panic!("{l} {scheme} {metric}"));
            assert_eq!(r.trials, 24);
            assert_eq!(r.master_seed, 99);
            assert_eq!(r.sweep_var, "L");
        }
    }
}

#[test]
fn joint_ml_and_projection_agree_trial_by_trial() {
    // identical symbol decisions give identical aggregates
    let records = harness::run_sweep_with_threads(&small(), 2).unwrap();
    for l in [3.0, 4.0, 5.0] {
        for metric in ["ber", "bler", "nmse"] {
            let j = harness::find_record(&records, l, Method::JointMl, metric).unwrap();
            let p = harness::find_record(&records, l, Method::Projection, metric).unwrap();
            assert!(
                (j.mean - p.mean).abs() <= 1e-9 * j.mean.abs().max(1.0),
                "{l} {metric}"
            );
        }
    }
}

#[test]
fn adding_a_scheme_leaves_the_others_alone() {
    let mut a = small();
    a.schemes = vec![Method::Projection];
    let mut b = small();
    b.schemes = vec![Method::Sic, Method::Projection];
    let ra = harness::run_sweep_with_threads(&a, 1).unwrap();
    let rb = harness::run_sweep_with_threads(&b, 1).unwrap();
    for r in &ra {
        let other = harness::find_record(
            &rb,
            r.sweep_value,
            Method::parse(&r.scheme).unwrap(),
            &r.metric,
        )
        .unwrap();
        assert_eq!(r, other);
    }
}

#[test]
fn config_accepts_nested_and_dotted_keys() {
    let nested = ExperimentConfig::from_json_str(
        r#"{"system": {"M_r": 6, "P_r_dB": -8}, "sdr": {"tol": 1e-4}}"#,
    )
    .unwrap();
    let dotted = ExperimentConfig::from_json_str(
        r#"{"system.M_r": 6, "system.P_r_dB": -8, "sdr.tol": 1e-4}"#,
    )
    .unwrap();
    assert_eq!(nested.system, dotted.system);
    assert_eq!(nested.detector.sdr.tolerance, 1e-4);
    assert_eq!(dotted.detector.sdr.tolerance, 1e-4);
    assert!((nested.system.p_r - 10f64.powf(-0.8)).abs() < 1e-15);
}

#[test]
fn config_rejects_conflicts_and_unknown_keys() {
    for bad in [
        r#"{"system": {"M_r": 6}, "system.M_r": 7}"#,
        r#"{"system": {"bogus": 1}}"#,
        r#"{"trials": -1}"#,
        r#"{"sweep": "Q=1:2:1"}"#,
        r#"{"schemes": "sic,,projection"}"#,
        r#"not json"#,
    ] {
        assert!(ExperimentConfig::from_json_str(bad).is_err(), "{bad}");
    }
}

#[test]
fn oversized_joint_ml_is_refused_before_running() {
    let mut cfg = small();
    cfg.sweep = SweepSpec::single(SweepVar::Snapshots, 20.0);
    cfg.system.n_t = 8;
    cfg.system.m_t = 4;
    cfg.schemes = vec![Method::JointMl];
    assert!(cfg.validate().is_err());
    assert!(harness::run_sweep(&cfg).is_err());
}

#[test]
fn radar_power_sweep_lands_on_the_requested_grid() {
    let mut cfg = small();
    cfg.sweep = SweepSpec::parse("P_r_dB=-10:2:6").unwrap();
    cfg.detector.strategy = DetectorStrategy::Exhaustive;
    let points = cfg.points().unwrap();
    let values: Vec<f64> = points.iter().map(|p| p.0).collect();
    assert_eq!(values, vec![-10.0, -4.0, 2.0]);
    for (db, sys) in &points {
        assert!((sys.p_r - 10f64.powf(db / 10.0)).abs() < 1e-15);
    }
}
