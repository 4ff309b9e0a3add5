use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use delaynet::dynamics::{simulate, FlowMap, SystemSpec, PRESET_NAMES};
use delaynet::embedding::{make_delay_dataset, split, SplitSpec};
use delaynet::nets::{train, Arch, TrainConfig};
use delaynet::oracle::{fit_conditional, OracleConfig, RegressionTarget};

fn flow_map(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow_map");
    for name in PRESET_NAMES {
        let spec = SystemSpec::preset(name).unwrap();
        let z0 = simulate(&spec, 0, 1, 100).unwrap().states.row(0).to_vec();
        g.bench_function(BenchmarkId::new("advance", name), |b| {
            b.iter(|| {
                let mut z = z0.clone();
                spec.advance(black_box(&mut z)).unwrap();
                z
            })
        });
        let m = z0.len();
        g.bench_function(BenchmarkId::new("advance_with_jacobian", name), |b| {
            let mut jac = vec![0.0; m * m];
            b.iter(|| {
                let mut z = z0.clone();
                spec.advance_with_jacobian(black_box(&mut z), &mut jac)
                    .unwrap();
                z
            })
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let spec = SystemSpec::lorenz63();
    let traj = simulate(&spec, 1, 100, 1000).unwrap();
    let mut g = c.benchmark_group("loss_and_gradient");
    for arch in [Arch::Fnn, Arch::Rnn] {
        for d in [2, 8] {
            let data = make_delay_dataset(traj.observed_block().view(), d, 1).unwrap();
            let (tr, va) = split(&data, &SplitSpec::default()).unwrap();
            let cfg = TrainConfig {
                max_epochs: 1,
                ..TrainConfig::default()
            };
            let model = train(arch, 10, &tr, &va, &cfg).unwrap().model;
            g.bench_function(BenchmarkId::new(arch.name(), format!("d{d}_h10")), |b| {
                b.iter(|| {
                    model
                        .loss_and_gradient(black_box(&data.inputs), &data.targets)
                        .unwrap()
                })
            });
        }
    }
    g.finish();
}

fn training(c: &mut Criterion) {
    let spec = SystemSpec::lorenz63();
    let traj = simulate(&spec, 2, 50, 1000).unwrap();
    let data = make_delay_dataset(traj.observed_block().view(), 4, 1).unwrap();
    let (tr, va) = split(&data, &SplitSpec::default()).unwrap();
    let cfg = TrainConfig {
        max_epochs: 200,
        patience: 1000,
        ..TrainConfig::default()
    };
    let mut g = c.benchmark_group("train_200_epochs");
    g.sample_size(10);
    for arch in [Arch::Fnn, Arch::Rnn] {
        g.bench_function(arch.name(), |b| {
            b.iter(|| train(arch, 5, black_box(&tr), &va, &cfg).unwrap())
        });
    }
    g.finish();
}

fn knn(c: &mut Criterion) {
    let spec = SystemSpec::lorenz63();
    let traj = simulate(&spec, 3, 2000, 1000).unwrap();
    let cfg = OracleConfig::default();
    let mut g = c.benchmark_group("knn");
    g.sample_size(10);
    for d in [2, 6] {
        g.bench_function(BenchmarkId::new("fit_mean", d), |b| {
            b.iter(|| {
                fit_conditional(&spec, traj.states.view(), d, RegressionTarget::YMean, &cfg)
                    .unwrap()
            })
        });
        let reg =
            fit_conditional(&spec, traj.states.view(), d, RegressionTarget::YMean, &cfg).unwrap();
        let window = vec![1.0; reg.d * reg.n];
        g.bench_function(BenchmarkId::new("predict_mean", d), |b| {
            b.iter(|| reg.predict(black_box(&window)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, flow_map, gradients, training, knn);
criterion_main!(benches);
