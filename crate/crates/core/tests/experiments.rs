use robust_mean::corruption::{AdversarySpec, Strategy};
use robust_mean::harness::{
    read_csv, run_experiment, run_trials, scenarios, sweep, trial_csv_path, verify_bounds,
    AlgorithmKind, ExperimentConfig, ExperimentSummary, GraphFamily, GraphSpec, CSV_HEADER,
    SUMMARY_FILE,
};
use robust_mean::Error;

#[test]
fn writes_one_csv_per_trial_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = scenarios::reference_network(1);
    config.trials = 3;
    config.horizon = 250;
    config.output_dir = dir.path().join("net");
    let summary = run_experiment(&config, Some(2)).unwrap();
    for trial in 0..3 {
        let rows = read_csv(&trial_csv_path(&config.output_dir, trial)).unwrap();
        assert_eq!(rows.len(), 250 * 5 * 2);
        assert!(rows
            .windows(2)
            .all(|w| (w[0].t, w[0].agent, w[0].k) < (w[1].t, w[1].agent, w[1].k)));
        // bounds only on post-consensus rows, and only from t = 2 t0
        assert!(rows
            .iter()
            .all(|r| r.bound_thm1.is_none() || (r.k == 1 && r.t >= 200)));
        assert!(rows.iter().any(|r| r.bound_thm1.is_some()));
    }
    let text = std::fs::read_to_string(config.output_dir.join(SUMMARY_FILE)).unwrap();
    let back: ExperimentSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(back.trials.len(), 3);
    assert_eq!(back.graph.m, 5);
    assert_eq!(summary.report, back.report);
    assert!(back.report.check("theorem3").is_some());
}

#[test]
fn invalid_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = scenarios::reference_single_agent(AlgorithmKind::Fixed);
    config.output_dir = dir.path().join("never");
    config.t0 = Some(5_000);
    assert!(matches!(
        run_experiment(&config, None),
        Err(Error::Config(_))
    ));
    assert!(!config.output_dir.exists());
    config.t0 = Some(100);
    config.graph = GraphSpec::file(dir.path().join("missing.txt"));
    assert!(run_experiment(&config, None).is_err());
    assert!(!config.output_dir.exists());
}

#[test]
fn unwritable_output_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let mut config = scenarios::reference_single_agent(AlgorithmKind::Adaptive);
    config.horizon = 10;
    config.output_dir = blocker.join("sub");
    let err = run_experiment(&config, None).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("file"), "{err}");
}

#[test]
fn naive_mean_loses_every_trial() {
    for algorithm in [AlgorithmKind::Fixed, AlgorithmKind::Adaptive] {
        let mut config = scenarios::reference_single_agent(algorithm);
        config.trials = 40;
        config.seed = 11;
        config.bounds = false;
        let (_, records) = run_trials(&config, None).unwrap();
        for r in &records {
            assert!(
                r.summary.naive_errors[0] > r.summary.final_errors[0],
                "{:?}",
                r.summary
            );
        }
    }
}

#[test]
fn clean_long_stream_is_accurate() {
    // With t0 = 100 the fixed thresholds alone leave a median error near 0.07.
    let mut worst = Vec::new();
    for algorithm in [AlgorithmKind::Fixed, AlgorithmKind::Adaptive] {
        let mut config = scenarios::reference_single_agent(algorithm);
        config.adversary = AdversarySpec::none();
        config.horizon = 100_000;
        if algorithm == AlgorithmKind::Fixed {
            config.t0 = Some(10_000);
        }
        config.trials = 4;
        config.seed = 5;
        config.bounds = false;
        let (_, records) = run_trials(&config, None).unwrap();
        for r in &records {
            worst.push(r.summary.final_errors[0]);
            assert!(
                r.summary.final_errors[0] <= 0.02,
                "{algorithm:?}: {:?}",
                r.summary
            );
        }
    }
    assert_eq!(worst.len(), 8);
}

#[test]
fn verify_from_stored_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = scenarios::reference_single_agent(AlgorithmKind::Adaptive);
    config.trials = 8;
    config.horizon = 600;
    config.output_dir = dir.path().to_path_buf();
    let summary = run_experiment(&config, None).unwrap();
    let stored: Vec<_> = (0..8)
        .map(|t| read_csv(&trial_csv_path(dir.path(), t)).unwrap())
        .collect();
    let report = verify_bounds(&stored, &config);
    assert_eq!(report.checks, summary.report.checks);
    let thm2 = report.check("theorem2").unwrap();
    assert_eq!(thm2.target, 1.0);
    assert!(thm2.pass, "{thm2:?}");
    assert!(report.check("corollary2").unwrap().pass);
}

#[test]
fn degenerate_delta_has_vacuous_target() {
    let mut config = scenarios::reference_single_agent(AlgorithmKind::Fixed);
    config.params = robust_mean::RobustnessParams::new(0.02, 0.9999).unwrap();
    config.trials = 20;
    config.horizon = 200;
    let (_, records) = run_trials(&config, None).unwrap();
    let rows: Vec<_> = records.into_iter().map(|r| r.rows).collect();
    let check = verify_bounds(&rows, &config)
        .check("theorem1")
        .cloned()
        .unwrap();
    assert!((check.target - 1e-4).abs() < 1e-12);
    assert!(check.pass);
}

#[test]
fn bounds_can_be_disabled() {
    let mut config = scenarios::reference_single_agent(AlgorithmKind::Fixed);
    config.bounds = false;
    config.horizon = 300;
    let (_, records) = run_trials(&config, None).unwrap();
    assert!(records[0]
        .rows
        .iter()
        .all(|r| r.bound_thm1.is_none() && r.bound_thm2.is_none()));
    let rows: Vec<_> = records.into_iter().map(|r| r.rows).collect();
    let report = verify_bounds(&rows, &config);
    assert!(report.checks.is_empty());
    assert!(!report.notes.is_empty());
}

#[test]
fn header_matches_layout() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = scenarios::reference_single_agent(AlgorithmKind::Adaptive);
    config.horizon = 2;
    config.output_dir = dir.path().to_path_buf();
    run_experiment(&config, None).unwrap();
    let text = std::fs::read_to_string(trial_csv_path(dir.path(), 0)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 2);
}

#[test]
fn sweep_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut base = scenarios::reference_network(0);
    base.horizon = 240;
    base.trials = 2;
    base.output_dir = dir.path().to_path_buf();
    let points = sweep(&base, &[0, 1], &[0.01, 0.02], &[100, 110], Some(2)).unwrap();
    assert_eq!(points.len(), 8);
    assert!(dir
        .path()
        .join("k1_eta0.01_t0110")
        .join(SUMMARY_FILE)
        .exists());
    assert!(dir.path().join("sweep.json").exists());
    assert!(sweep(&base, &[], &[0.5], &[], None).is_err());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ring.txt"), "m 4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let mut config = scenarios::reference_network(1);
    config.graph = GraphSpec::file("ring.txt");
    config.adversary = AdversarySpec::new(Strategy::ConstantValue { value: 9.0 }, 0.02).unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(&path, config.to_json()).unwrap();
    let loaded = ExperimentConfig::load(&path).unwrap();
    assert_eq!(loaded.graph.build(0).unwrap().m(), 4);
    assert_eq!(loaded.adversary, config.adversary);
    let random = GraphSpec {
        edge_prob: Some(0.5),
        ..GraphSpec::family(GraphFamily::Random, 6)
    };
    assert_eq!(random.build(1).unwrap().m(), 6);
}
