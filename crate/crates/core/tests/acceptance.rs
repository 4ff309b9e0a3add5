//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail. Pass criterion numbers to run a subset:
//! `cargo test --test acceptance -- 3 4`.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use ndarray::{s, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use delaynet::dynamics::{
    diagnostics, reference_diagnostics, simulate, FlowMap, StateVector, SystemSpec, PRESET_NAMES,
};
use delaynet::embedding::{make_delay_dataset, split, NormalizationStats, SplitSpec};
use delaynet::nets::{gradient_check, Arch, FnnParams, Model, RnnParams, TrainConfig};
use delaynet::oracle::{first_order_sigma_at, lv_exact_delay_map, run_oracle, OracleConfig};
use delaynet::sweep::{
    aggregate, run_sweep, train_replicate, ExperimentConfig, ReplicateData, SummaryRow,
};

type Outcome = Result<(bool, String), String>;
type Criterion = (usize, &'static str, fn() -> Outcome);

fn check(lines: &mut Vec<String>, ok: bool, msg: String) -> bool {
    lines.push(format!("    {} {msg}", if ok { "ok  " } else { "MISS" }));
    ok
}

fn criterion_1() -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    for name in PRESET_NAMES {
        let spec = SystemSpec::preset(name).unwrap();
        let report = diagnostics(&spec, 0).map_err(|e| e.to_string())?;
        let target = reference_diagnostics(name).unwrap();
        for c in target.check(&report) {
            all &= check(
                &mut lines,
                c.passed(),
                format!(
                    "{name} {}: {:.4} (target {} ± {})",
                    c.quantity, c.measured, c.target, c.tolerance
                ),
            );
        }
    }
    Ok((all, lines.join("\n")))
}

fn criterion_2() -> Outcome {
    let spec = SystemSpec::lotka_volterra();
    let traj = simulate(&spec, 0, 1002, 1000).map_err(|e| e.to_string())?;
    let x = traj.states.column(spec.observed[0]);
    let mut worst: f64 = 0.0;
    for t in 2..x.len() {
        let pred = lv_exact_delay_map(x[t - 1], x[t - 2], &spec).map_err(|e| e.to_string())?;
        worst = worst.max((pred - x[t]).abs());
    }
    let report = run_oracle(&spec, &[2], &OracleConfig::default()).map_err(|e| e.to_string())?;
    let eps2 = report[0].eps_rms;
    let mut lines = Vec::new();
    let a = check(
        &mut lines,
        worst < 1e-10,
        format!("closed-form delay map max error {worst:.2e} on 1000 points (< 1e-10)"),
    );
    let b = check(
        &mut lines,
        eps2 < 1e-3,
        format!("oracle eps_rms(2) = {eps2:.2e} (< 1e-3)"),
    );
    Ok((a && b, lines.join("\n")))
}

fn criterion_3() -> Outcome {
    let delays: Vec<usize> = (1..=8).collect();
    let mut lines = Vec::new();
    let mut all = true;
    for (name, knee) in [("lorenz63", 3), ("duffing", 4), ("lorenz96", 6)] {
        let spec = SystemSpec::preset(name).unwrap();
        let cfg = OracleConfig {
            sigma: false,
            ..OracleConfig::default()
        };
        let reports = run_oracle(&spec, &delays, &cfg).map_err(|e| e.to_string())?;
        let eps: Vec<f64> = reports.iter().map(|r| r.eps_rms).collect();
        let curve: Vec<String> = eps.iter().map(|e| format!("{e:.2e}")).collect();
        lines.push(format!("    {name} eps_rms(1..8) = [{}]", curve.join(", ")));
        all &= check(
            &mut lines,
            eps[knee - 1] < 0.2 * eps[0],
            format!(
                "{name} knee: eps({knee})/eps(1) = {:.4} (< 0.2)",
                eps[knee - 1] / eps[0]
            ),
        );
        let rises: Vec<String> = eps
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > 1.1 * w[0])
            .map(|(i, w)| format!("d={}->{}: x{:.2}", i + 1, i + 2, w[1] / w[0]))
            .collect();
        all &= check(
            &mut lines,
            rises.is_empty(),
            format!(
                "{name} non-increasing within 10%{}",
                if rises.is_empty() {
                    String::new()
                } else {
                    format!(" (violations: {})", rises.join(", "))
                }
            ),
        );
    }
    Ok((all, lines.join("\n")))
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| 0.5 * rng.sample::<f64, _>(StandardNormal))
}

fn random_model(arch: Arch, n: usize, h: usize, d: usize, rng: &mut ChaCha8Rng) -> Model {
    let mut v = |len: usize| {
        normal_matrix(rng, 1, len)
            .into_shape_with_order(len)
            .unwrap()
    };
    match arch {
        Arch::Fnn => {
            let mut p = FnnParams::zeros(n, h, d);
            p.b_f = v(h);
            p.b_x = v(n);
            p.w_f = normal_matrix(rng, h, d * n);
            p.w_x = normal_matrix(rng, n, h);
            Model::Fnn(p)
        }
        Arch::Rnn => {
            let mut p = RnnParams::zeros(n, h);
            p.b_f = v(h);
            p.b_g = v(h);
            p.b_x = v(n);
            p.g_init = v(h);
            p.w_f = normal_matrix(rng, h, n + h);
            p.w_g = normal_matrix(rng, h, n + h);
            p.w_x = normal_matrix(rng, n, h);
            Model::Rnn(p)
        }
    }
}

fn criterion_4() -> Outcome {
    let mut worst: (f64, String) = (0.0, String::new());
    let mut max_abs: f64 = 0.0;
    let mut cases = 0;
    for arch in [Arch::Fnn, Arch::Rnn] {
        for seed in 0..5u64 {
            for d in [1, 2, 4] {
                for h in [2, 5] {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed * 1000 + d as u64 * 10 + h as u64);
                    let model = random_model(arch, 1, h, d, &mut rng);
                    let inputs = normal_matrix(&mut rng, 8, d);
                    let targets = normal_matrix(&mut rng, 8, 1);
                    let c = gradient_check(&model, &inputs, &targets, 1e-6, 1e-7)
                        .map_err(|e| e.to_string())?;
                    cases += 1;
                    max_abs = max_abs.max(c.max_abs_error);
                    if c.max_rel_error >= worst.0 {
                        worst = (
                            c.max_rel_error,
                            format!("{} seed {seed} d={d} h={h}", arch.name()),
                        );
                    }
                }
            }
        }
    }
    Ok((
        worst.0 < 1e-5,
        format!(
            "    {cases} cases, worst relative error {:.2e} ({}), max absolute error {max_abs:.1e}; tolerance 1e-5 relative, 1e-7 absolute floor",
            worst.0, worst.1
        ),
    ))
}

fn cell(rows: &[SummaryRow], arch: Arch, d: usize, horizon: usize) -> &SummaryRow {
    rows.iter()
        .find(|r| r.arch == arch && r.d == d && r.horizon == horizon)
        .expect("cell present")
}

fn criterion_5() -> Outcome {
    let cfg = ExperimentConfig {
        system: SystemSpec::lotka_volterra(),
        train_sizes: vec![50],
        delays: vec![2, 3, 4],
        hidden_sizes: vec![2],
        replicates: 20,
        horizons: vec![1, 3],
        ..ExperimentConfig::default()
    };
    let result = run_sweep(&cfg, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let summary = aggregate(&result).map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    let mut all = true;
    for d in [2, 3, 4] {
        let f1 = cell(&summary, Arch::Fnn, d, 1);
        let r1 = cell(&summary, Arch::Rnn, d, 1);
        let f3 = cell(&summary, Arch::Fnn, d, 3);
        let r3 = cell(&summary, Arch::Rnn, d, 3);
        lines.push(format!(
            "    d={d}: FNN {:.3}±{:.3} / {:.3}±{:.3}, RNN {:.3}±{:.3} / {:.3}±{:.3} (horizon 1 / 3, missing {})",
            f1.mean_nrmse, f1.stderr, f3.mean_nrmse, f3.stderr,
            r1.mean_nrmse, r1.stderr, r3.mean_nrmse, r3.stderr,
            f1.missing + r1.missing
        ));
        let gap1 = f1.mean_nrmse - r1.mean_nrmse;
        let se1 = (f1.stderr.powi(2) + r1.stderr.powi(2)).sqrt();
        all &= check(
            &mut lines,
            gap1 > se1,
            format!("d={d} one-step FNN - RNN = {gap1:.4} (> pooled stderr {se1:.4})"),
        );
        let gap3 = f3.mean_nrmse - r3.mean_nrmse;
        let se = (se1.powi(2) + f3.stderr.powi(2) + r3.stderr.powi(2)).sqrt();
        all &= check(
            &mut lines,
            gap3 - gap1 > se,
            format!(
                "d={d} gap growth (horizon 3 - horizon 1) = {:.4} (> pooled stderr {se:.4})",
                gap3 - gap1
            ),
        );
    }
    Ok((all, lines.join("\n")))
}

fn selection_summary(system: SystemSpec) -> Result<Vec<SummaryRow>, String> {
    let cfg = ExperimentConfig {
        system,
        train_sizes: vec![50],
        delays: (2..=8).collect(),
        hidden_sizes: (2..=20).collect(),
        select_hidden: true,
        replicates: 20,
        horizons: vec![1],
        ..ExperimentConfig::default()
    };
    let result = run_sweep(&cfg, &TrainConfig::default()).map_err(|e| e.to_string())?;
    aggregate(&result).map_err(|e| e.to_string())
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    let l63 = selection_summary(SystemSpec::lorenz63())?;
    let mut spread = BTreeMap::new();
    for arch in [Arch::Fnn, Arch::Rnn] {
        let means: Vec<f64> = (2..=8).map(|d| cell(&l63, arch, d, 1).mean_nrmse).collect();
        let lo = means.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let curve: Vec<String> = means.iter().map(|m| format!("{m:.3}")).collect();
        lines.push(format!(
            "    lorenz63 {} mean nrmse d=2..8: [{}]",
            arch.name(),
            curve.join(", ")
        ));
        spread.insert(arch, hi - lo);
    }
    let a = check(
        &mut lines,
        spread[&Arch::Rnn] <= spread[&Arch::Fnn],
        format!(
            "lorenz63 spread RNN {:.4} <= FNN {:.4}",
            spread[&Arch::Rnn],
            spread[&Arch::Fnn]
        ),
    );

    let l96 = selection_summary(SystemSpec::lorenz96())?;
    let mean_h = |arch: Arch| {
        let hs: Vec<f64> = (2..=8)
            .filter_map(|d| cell(&l96, arch, d, 1).mean_selected_h)
            .collect();
        hs.iter().sum::<f64>() / hs.len() as f64
    };
    let (hr, hf) = (mean_h(Arch::Rnn), mean_h(Arch::Fnn));
    let b = check(
        &mut lines,
        hr <= hf,
        format!("lorenz96 mean selected h RNN {hr:.2} <= FNN {hf:.2}"),
    );
    Ok((a && b, lines.join("\n")))
}

fn rotate(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    (0..n).map(|i| z[(i + n - 1) % n]).collect()
}

fn criterion_7() -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Duffing forcing phase stays on the unit circle.
    let duffing = SystemSpec::duffing();
    let mut z = simulate(&duffing, 0, 1, 100)
        .map_err(|e| e.to_string())?
        .states
        .row(0)
        .to_vec();
    let mut drift: f64 = 0.0;
    for _ in 0..1000 {
        let before = z[2] * z[2] + z[3] * z[3];
        duffing.advance(&mut z).map_err(|e| e.to_string())?;
        drift = drift.max((z[2] * z[2] + z[3] * z[3] - before).abs());
    }
    all &= check(
        &mut lines,
        drift < 1e-8,
        format!("duffing circle drift per step {drift:.1e} (< 1e-8)"),
    );

    // Lorenz 96 commutes with a cyclic shift of the coordinates.
    let l96 = SystemSpec::lorenz96();
    let mut err: f64 = 0.0;
    for _ in 0..20 {
        let z: Vec<f64> = (0..5).map(|_| rng.random_range(-8.0..8.0)).collect();
        let a = l96
            .flow_map(&StateVector(rotate(&z)))
            .map_err(|e| e.to_string())?;
        let b = rotate(&l96.flow_map(&StateVector(z)).map_err(|e| e.to_string())?.0);
        err = err.max(
            a.0.iter()
                .zip(&b)
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max),
        );
    }
    all &= check(
        &mut lines,
        err < 1e-10,
        format!("lorenz96 rotation equivariance max error {err:.1e}"),
    );

    // Parameter counts.
    let rnn: Vec<usize> = (1..=8).map(|d| Arch::Rnn.param_count(1, 10, d)).collect();
    let fnn: Vec<usize> = (1..=8).map(|d| Arch::Fnn.param_count(1, 10, d)).collect();
    let linear = fnn.windows(2).all(|w| w[1] - w[0] == 10);
    all &= check(
        &mut lines,
        rnn.iter().all(|&c| c == rnn[0]) && linear && rnn[5] == 251 && fnn[5] == 81,
        format!("parameter counts n=1 h=10: RNN {:?}, FNN {:?}", rnn[0], fnn),
    );

    // First-order covariance is symmetric positive semidefinite.
    let mut worst_asym: f64 = 0.0;
    let mut worst_eig = f64::INFINITY;
    let l96_three = SystemSpec {
        observed: vec![0, 1, 2],
        ..SystemSpec::lorenz96()
    };
    for (spec, d) in [(SystemSpec::lorenz63(), 3), (l96_three, 2)] {
        let traj = simulate(&spec, 1, 50, 1000).map_err(|e| e.to_string())?;
        let m = spec.unobserved().len();
        for t in [d, 20, 49] {
            let a = normal_matrix(&mut rng, m, m);
            let c = a.dot(&a.t());
            let y_bar: Vec<f64> = spec
                .unobserved()
                .iter()
                .map(|&u| traj.states[[t, u]])
                .collect();
            let sigma = first_order_sigma_at(
                &spec,
                traj.states.slice(s![t - d..t, ..]),
                &y_bar,
                c.as_slice().unwrap(),
            )
            .map_err(|e| e.to_string())?;
            worst_asym = worst_asym.max(
                (&sigma - &sigma.t())
                    .iter()
                    .fold(0.0, |a, v| a.max(v.abs())),
            );
            let k = sigma.nrows();
            let mat = DMatrix::from_fn(k, k, |i, j| sigma[[i, j]]);
            let scale = mat.trace().abs().max(1e-300);
            let min = mat.symmetric_eigen().eigenvalues.min();
            worst_eig = worst_eig.min(min / scale);
        }
    }
    all &= check(
        &mut lines,
        worst_asym == 0.0 && worst_eig >= -1e-12,
        format!("sigma asymmetry {worst_asym:.1e}, min eigenvalue / trace {worst_eig:.1e}"),
    );

    // Split non-leakage: validation targets follow training targets, the
    // normalization comes from the training series, and test data cannot
    // influence the trained model.
    let spec = SystemSpec::lorenz63();
    let data = ReplicateData::simulate(&spec, 50, 1000, 3).map_err(|e| e.to_string())?;
    let ds = make_delay_dataset(data.train_series(), 3, 1).map_err(|e| e.to_string())?;
    let (tr, va) = split(&ds, &SplitSpec::default()).map_err(|e| e.to_string())?;
    let ordered = tr.target_time(tr.len() - 1) < va.target_time(0)
        && va.target_time(va.len() - 1) < data.train_size;
    let norm_ok = data.norm
        == NormalizationStats::from_series(data.train_series()).map_err(|e| e.to_string())?;
    let quick = TrainConfig {
        max_epochs: 300,
        ..TrainConfig::default()
    };
    let mut tampered = data.clone();
    tampered
        .series
        .slice_mut(s![data.train_size.., ..])
        .mapv_inplace(|v| -3.0 * v + 100.0);
    let mut same = true;
    for arch in [Arch::Fnn, Arch::Rnn] {
        let split_spec = SplitSpec::default();
        let a = train_replicate(&data, arch, 3, 4, &split_spec, &quick, 5)
            .map_err(|e| e.to_string())?;
        let b = train_replicate(&tampered, arch, 3, 4, &split_spec, &quick, 5)
            .map_err(|e| e.to_string())?;
        same &= a == b;
    }
    all &= check(
        &mut lines,
        ordered && norm_ok && same,
        format!("split non-leakage: ordered {ordered}, train-only normalization {norm_ok}, test-blind training {same}"),
    );

    // A sweep is bit-identical across reruns and thread counts.
    let cfg = ExperimentConfig {
        system: spec,
        train_sizes: vec![30],
        delays: vec![1, 3],
        hidden_sizes: vec![2, 4],
        replicates: 3,
        base_seed: 11,
        ..ExperimentConfig::default()
    };
    let csv = |threads: usize| -> Result<Vec<u8>, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let result = pool
            .install(|| run_sweep(&cfg, &quick))
            .map_err(|e| e.to_string())?;
        let mut out = Vec::new();
        result
            .write_results_csv(&mut out)
            .map_err(|e| e.to_string())?;
        Ok(out)
    };
    let runs = [csv(1)?, csv(1)?, csv(4)?];
    all &= check(
        &mut lines,
        runs[0] == runs[1] && runs[0] == runs[2],
        format!(
            "sweep determinism: {} result bytes identical over 3 runs (1, 1, 4 threads)",
            runs[0].len()
        ),
    );
    Ok((all, lines.join("\n")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        (1, "diagnostics reproduction", criterion_1),
        (2, "exact LV delay closure", criterion_2),
        (3, "recursion-error knees", criterion_3),
        (4, "gradient suite", criterion_4),
        (5, "LV RNN vs FNN ordering", criterion_5),
        (6, "robustness under hidden-size selection", criterion_6),
        (7, "structural invariants", criterion_7),
    ];
    let wanted: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("    error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id} ({name}): {} [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        println!("{detail}");
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
