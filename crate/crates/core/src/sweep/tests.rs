use ndarray::Array2;

use super::*;
use crate::dynamics::SystemSpec;

fn quick_train() -> TrainConfig {
    TrainConfig {
        max_epochs: 400,
        patience: 50,
        ..TrainConfig::default()
    }
}

fn small_grid() -> ExperimentConfig {
    ExperimentConfig {
        train_sizes: vec![30],
        delays: vec![1, 2],
        hidden_sizes: vec![2],
        replicates: 2,
        base_seed: 7,
        ..ExperimentConfig::default()
    }
}

#[test]
fn sweep_is_deterministic_and_complete() {
    let cfg = small_grid();
    let a = run_sweep(&cfg, &quick_train()).unwrap();
    let b = run_sweep(&cfg, &quick_train()).unwrap();
    assert_eq!(a, b);
    // 1 size × 2 d × 2 arch × 2 reps × 1 h × 3 horizons
    assert_eq!(a.rows.len(), 24);
    assert!(a
        .rows
        .iter()
        .all(|r| r.nrmse >= 0.0 && r.status == RowStatus::Ok));
    assert_eq!(a.baselines.len(), 2 * 3);
    let mut x = Vec::new();
    let mut y = Vec::new();
    a.write_results_csv(&mut x).unwrap();
    b.write_results_csv(&mut y).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert_eq!(text.lines().next().unwrap(), RESULTS_CSV_HEADER);
    assert_eq!(text.lines().count(), 25);
}

#[test]
fn same_cell_and_seed_give_identical_outcomes() {
    let spec = SystemSpec::lotka_volterra();
    let a = run_cell(&spec, Arch::Rnn, 50, 2, 3, 11, &quick_train()).unwrap();
    let b = run_cell(&spec, Arch::Rnn, 50, 2, 3, 11, &quick_train()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.nrmse.len(), 3);
}

#[test]
fn test_windows_cover_the_second_half() {
    let data = ReplicateData::simulate(&SystemSpec::lotka_volterra(), 20, 100, 3).unwrap();
    for d in [1, 3] {
        for k in 1..=3 {
            let (inputs, targets) = data.test_set(d, k).unwrap();
            assert_eq!(targets.nrows(), 20);
            assert_eq!(targets, data.test_series().to_owned());
            // The newest lag of the first window is k steps before N.
            assert_eq!(inputs[[0, 0]], data.series[[20 - k, 0]]);
        }
    }
}

#[test]
fn a_single_candidate_is_selected() {
    let spec = SystemSpec::lorenz63();
    let (h, nrmse) = select_hidden(&spec, Arch::Fnn, 30, 2, 1, &[5], &quick_train()).unwrap();
    assert_eq!(h, 5);
    assert!(nrmse.is_finite());
    assert!(select_hidden(&spec, Arch::Fnn, 30, 2, 1, &[], &quick_train()).is_err());
}

#[test]
fn choice_uses_lowest_validation_loss_then_smallest_h() {
    assert_eq!(choose_by_validation([(2, 0.3), (5, 0.1), (10, 0.2)]), 5);
    assert_eq!(choose_by_validation([(10, 0.1), (2, 0.1)]), 2);
}

#[test]
fn selection_and_training_never_see_test_data() {
    let spec = SystemSpec::lorenz63();
    let data = ReplicateData::simulate(&spec, 30, 1000, 5).unwrap();
    let mut shuffled = data.clone();
    // Reverse the test half.
    let n = data.train_size;
    for t in 0..n {
        let src = data.series.row(2 * n - 1 - t).to_owned();
        shuffled.series.row_mut(n + t).assign(&src);
    }
    let cfg = quick_train();
    let split_spec = SplitSpec::default();
    let run = |d: &ReplicateData| {
        select_hidden_on(d, Arch::Rnn, 2, &[2, 4, 6], &[1], &split_spec, &cfg, 5).unwrap()
    };
    let (a, all_a) = run(&data);
    let (b, all_b) = run(&shuffled);
    assert_eq!(a.h, b.h);
    for (x, y) in all_a.iter().zip(&all_b) {
        assert_eq!(x.best_val_loss, y.best_val_loss);
        assert_eq!(x.best_epoch, y.best_epoch);
    }
}

#[test]
fn diverging_training_is_reseeded_then_missing() {
    let cfg = ExperimentConfig {
        train_sizes: vec![20],
        delays: vec![2],
        hidden_sizes: vec![2],
        replicates: 2,
        ..ExperimentConfig::default()
    };
    let blow_up = TrainConfig {
        learning_rate: 1e300,
        max_epochs: 5,
        ..TrainConfig::default()
    };
    let res = run_sweep(&cfg, &blow_up).unwrap();
    assert!(res.rows.iter().all(|r| r.status == RowStatus::Missing));
    assert!(res
        .rows
        .iter()
        .all(|r| r.seed == cfg.seed(r.replicate) + RESEED_OFFSET));
    let summary = aggregate(&res).unwrap();
    assert!(summary.iter().all(|s| s.missing == 2 && s.replicates == 0));
}

fn row(replicate: usize, nrmse: f64) -> SweepRow {
    SweepRow {
        system: "lv".into(),
        arch: Arch::Fnn,
        train_size: 50,
        d: 2,
        h: 2,
        horizon: 1,
        replicate,
        seed: replicate as u64,
        nrmse,
        best_epoch: 10,
        selected_h: None,
        status: RowStatus::Ok,
    }
}

#[test]
fn single_replicate_summary() {
    let res = SweepResult {
        rows: vec![row(0, 0.42)],
        ..SweepResult::default()
    };
    let s = aggregate(&res).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].mean_nrmse, 0.42);
    assert_eq!(s[0].stderr, 0.0);
    assert!(s[0].single_replicate);
    assert!(aggregate(&SweepResult::default()).is_err());
}

#[test]
fn aggregation_ignores_replicate_order() {
    let values = [0.31, 0.17, 0.9, 0.44, 0.05, 0.6, 0.123456789];
    let rows: Vec<SweepRow> = values.iter().enumerate().map(|(i, v)| row(i, *v)).collect();
    let mut reversed = rows.clone();
    reversed.reverse();
    let mut rotated = rows.clone();
    rotated.rotate_left(3);
    let base = aggregate(&SweepResult {
        rows,
        ..SweepResult::default()
    })
    .unwrap();
    for other in [reversed, rotated] {
        let s = aggregate(&SweepResult {
            rows: other,
            ..SweepResult::default()
        })
        .unwrap();
        assert_eq!(s, base);
    }
    let (mean, se) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(mean, 2.5);
    assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
}

#[test]
fn selection_summary_uses_chosen_models() {
    let mut rows = Vec::new();
    for (rep, chosen) in [(0, 2), (1, 5)] {
        for h in [2, 5] {
            rows.push(SweepRow {
                h,
                nrmse: if h == chosen { 0.1 } else { 0.9 },
                selected_h: Some(chosen),
                ..row(rep, 0.0)
            });
        }
    }
    let s = aggregate(&SweepResult {
        select_hidden: true,
        rows,
        ..SweepResult::default()
    })
    .unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].h, None);
    assert!((s[0].mean_nrmse - 0.1).abs() < 1e-15);
    assert_eq!(s[0].mean_selected_h, Some(3.5));
}

#[test]
fn mean_baseline_on_the_defining_series_is_one() {
    let data = ReplicateData::simulate(&SystemSpec::lorenz63(), 5000, 1000, 2).unwrap();
    let norm = NormalizationStats::from_series(data.series.view()).unwrap();
    let (mean, prev) = baselines(data.series.view(), &norm).unwrap();
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
    assert!((prev - 0.512).abs() < 0.05, "{prev}");
}

#[test]
fn duffing_previous_value_baseline() {
    let data = ReplicateData::simulate(&SystemSpec::duffing(), 10_000, 1000, 4).unwrap();
    let norm = NormalizationStats::from_series(data.series.view()).unwrap();
    let (_, prev) = baselines(data.series.view(), &norm).unwrap();
    assert!((prev - 0.816).abs() < 0.05, "{prev}");
}

#[test]
fn constant_series_baseline_is_degenerate() {
    let series = Array2::from_elem((10, 1), 3.0);
    let norm = NormalizationStats {
        mean: vec![3.0],
        std: vec![1.0],
    };
    assert!(matches!(
        baselines(series.view(), &norm),
        Err(Error::DegenerateSeries(_))
    ));
}

#[test]
fn stderr_shrinks_like_inverse_sqrt_replicates() {
    let cfg = |replicates| ExperimentConfig {
        train_sizes: vec![50],
        delays: vec![2],
        hidden_sizes: vec![2],
        replicates,
        horizons: vec![1],
        architectures: vec![Arch::Fnn],
        base_seed: 100,
        ..ExperimentConfig::default()
    };
    let se = |r| {
        let res = run_sweep(&cfg(r), &TrainConfig::default()).unwrap();
        aggregate(&res).unwrap()[0].stderr
    };
    let ratio = se(5) / se(20);
    // Expected 2; accept within a factor of 2.
    assert!((1.0..=4.0).contains(&ratio), "{ratio}");
}

#[test]
fn trained_nets_beat_the_mean_predictor() {
    let cfg = ExperimentConfig {
        system: SystemSpec::lorenz63(),
        train_sizes: vec![50],
        delays: vec![3],
        hidden_sizes: vec![5],
        replicates: 10,
        horizons: vec![1],
        base_seed: 40,
        ..ExperimentConfig::default()
    };
    let res = run_sweep(&cfg, &TrainConfig::default()).unwrap();
    for arch in [Arch::Fnn, Arch::Rnn] {
        let rows: Vec<_> = res.rows.iter().filter(|r| r.arch == arch).collect();
        let good = rows.iter().filter(|r| r.nrmse < 1.0).count();
        assert!(
            good * 10 >= rows.len() * 8,
            "{arch:?}: {good}/{}",
            rows.len()
        );
    }
}

#[test]
fn config_validation() {
    let mut cfg = small_grid();
    cfg.replicates = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = small_grid();
    cfg.delays = vec![0];
    assert!(cfg.validate().is_err());
    let mut cfg = small_grid();
    cfg.train_sizes = vec![5];
    assert!(matches!(cfg.validate(), Err(Error::TooShort { .. })));
    assert_eq!(small_grid().seed(3), 10);
}
