use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::dynamics::{simulate, StateVector};

/// `z' = A z` with the first coordinate observed.
struct LinearMap {
    a: Array2<f64>,
    observed: Vec<usize>,
}

impl FlowMap for LinearMap {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn observed(&self) -> &[usize] {
        &self.observed
    }

    fn advance(&self, z: &mut [f64]) -> Result<()> {
        let v = self.a.dot(&ndarray::ArrayView1::from(&*z));
        z.copy_from_slice(v.as_slice().unwrap());
        Ok(())
    }

    fn advance_with_jacobian(&self, z: &mut [f64], jac: &mut [f64]) -> Result<()> {
        jac.copy_from_slice(self.a.as_slice().unwrap());
        self.advance(z)
    }
}

fn toy() -> LinearMap {
    LinearMap {
        a: array![[0.5, 0.8, -0.3], [0.2, 0.7, 0.4], [-0.1, 0.3, 0.6]],
        observed: vec![0],
    }
}

#[test]
fn lv_exact_delay_map_matches_simulation() {
    let spec = SystemSpec::lotka_volterra();
    let traj = simulate(&spec, 4, 1002, 500).unwrap();
    let x = traj.observed_series();
    for t in 2..1002 {
        let pred = lv_exact_delay_map(x[t - 1], x[t - 2], &spec).unwrap();
        assert!((pred - x[t]).abs() < 1e-10, "t={t}: {pred} vs {}", x[t]);
    }
}

#[test]
fn lv_exact_delay_map_singular_and_fixed_point() {
    let spec = SystemSpec::lotka_volterra();
    assert!(matches!(
        lv_exact_delay_map(0.3, 0.0, &spec),
        Err(Error::SingularDelayMap(_))
    ));
    assert!(lv_exact_delay_map(0.3, 0.2, &SystemSpec::lorenz63()).is_err());

    // r_x x - A_xy y = r_x - 1 and -A_yx x + r_y y = r_y - 1.
    let System::DiscreteLv {
        r_x,
        r_y,
        a_xy,
        a_yx,
    } = spec.system
    else {
        unreachable!()
    };
    let det = r_x * r_y - a_xy * a_yx;
    let xs = ((r_x - 1.0) * r_y + a_xy * (r_y - 1.0)) / det;
    let ys = (r_x * (r_y - 1.0) + a_yx * (r_x - 1.0)) / det;
    let next = spec.lv_step(&StateVector(vec![xs, ys])).unwrap();
    assert!((next[0] - xs).abs() < 1e-12 && (next[1] - ys).abs() < 1e-12);
    assert!((lv_exact_delay_map(xs, xs, &spec).unwrap() - xs).abs() < 1e-12);
}

#[test]
fn true_hidden_state_gives_zero_residual() {
    for spec in [
        SystemSpec::lotka_volterra(),
        SystemSpec::lorenz63(),
        SystemSpec::lorenz96(),
    ] {
        let traj = simulate(&spec, 1, 40, 200).unwrap();
        let un = spec.unobserved();
        for d in 1..=6 {
            for t in [d, 20, 39] {
                let y: Vec<f64> = un.iter().map(|&u| traj.states[[t - d, u]]).collect();
                let eps = recursion_residual(&spec, traj.states.view(), t, d, &y).unwrap();
                assert!(eps[0].abs() < 1e-9, "{} d={d}: {}", spec.name(), eps[0]);
            }
        }
    }
}

#[test]
fn nearest_neighbour_reproduces_training_response() {
    let inputs = array![[0.1, 0.2], [0.5, -0.3], [1.0, 0.0], [0.2, 0.9]];
    let responses = array![[1.0], [2.0], [3.0], [4.0]];
    let est = EstimatorConfig {
        kind: EstimatorKind::InverseDistance,
        k: Some(1),
    };
    let reg = ConditionalRegressor::new(
        inputs.view(),
        responses.view(),
        2,
        RegressionTarget::YMean,
        est,
    )
    .unwrap();
    for (row, r) in inputs.outer_iter().zip(responses.outer_iter()) {
        assert_eq!(reg.predict(row.as_slice().unwrap()).unwrap(), r.to_vec());
    }
    // Distance-zero match wins even with more neighbours.
    let est = EstimatorConfig {
        kind: EstimatorKind::InverseDistance,
        k: Some(3),
    };
    let reg = ConditionalRegressor::new(
        inputs.view(),
        responses.view(),
        2,
        RegressionTarget::YMean,
        est,
    )
    .unwrap();
    assert_eq!(reg.predict(&[1.0, 0.0]).unwrap(), vec![3.0]);
}

#[test]
fn local_linear_is_exact_on_linear_responses() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inputs = Array2::from_shape_fn((300, 2), |_| StandardNormal.sample(&mut rng));
    let responses = inputs
        .map_axis(ndarray::Axis(1), |r| 1.5 * r[0] - 0.5 * r[1] + 2.0)
        .insert_axis(ndarray::Axis(1));
    let reg = ConditionalRegressor::new(
        inputs.view(),
        responses.view(),
        2,
        RegressionTarget::YMean,
        EstimatorConfig::local_linear(),
    )
    .unwrap();
    let got = reg.predict(&[0.3, -0.7]).unwrap()[0];
    assert!((got - (1.5 * 0.3 + 0.35 + 2.0)).abs() < 1e-4, "{got}");
}

#[test]
fn fit_needs_enough_samples() {
    let spec = SystemSpec::lorenz63();
    let traj = simulate(&spec, 0, 30, 10).unwrap();
    let err = fit_conditional(
        &spec,
        traj.states.view(),
        4,
        RegressionTarget::YMean,
        &OracleConfig::default(),
    );
    assert!(matches!(err, Err(Error::InsufficientData(_))));
}

#[test]
fn lv_two_lag_conditional_mean_is_sharp() {
    let spec = SystemSpec::lotka_volterra();
    let traj = simulate(&spec, 2, 10_600, 1000).unwrap();
    let fit = traj.states.slice(ndarray::s![..10_000, ..]);
    let held = traj.states.slice(ndarray::s![10_000.., ..]);
    let reg = fit_conditional(
        &spec,
        fit,
        2,
        RegressionTarget::YMean,
        &OracleConfig::default(),
    )
    .unwrap();
    let y_std = fit.column(1).std(0.0);
    let (inputs, ys) = delay_pairs(&spec, held, 2);
    let mut sq = 0.0;
    for (row, y) in inputs.outer_iter().zip(ys.outer_iter()) {
        let pred = reg.predict(row.as_slice().unwrap()).unwrap();
        sq += (pred[0] - y[0]).powi(2);
    }
    let rms = (sq / inputs.nrows() as f64).sqrt() / y_std;
    assert!(rms < 1e-2, "{rms}");
}

#[test]
fn sigma_vanishes_without_uncertainty_and_is_psd() {
    let spec = SystemSpec::lorenz63();
    let traj = simulate(&spec, 5, 20, 300).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in 1..=4 {
        let window = traj.states.slice(ndarray::s![10 - d..10, ..]);
        let y_bar = [
            traj.states[[10 - d, 1]] + 0.1,
            traj.states[[10 - d, 2]] - 0.2,
        ];
        let zero = first_order_sigma_at(&spec, window, &y_bar, &[0.0; 4]).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
        // Random PSD C = L Lᵀ.
        let l: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
        let c = [
            l[0] * l[0],
            l[0] * l[2],
            l[0] * l[2],
            l[2] * l[2] + l[3] * l[3],
        ];
        let sigma = first_order_sigma_at(&spec, window, &y_bar, &c).unwrap();
        assert_eq!(sigma.dim(), (1, 1));
        assert!(sigma[[0, 0]] >= 0.0);
    }
    // Multivariate observation: symmetric with a non-negative spectrum.
    let spec = SystemSpec {
        observed: vec![0, 2],
        ..SystemSpec::lorenz96()
    };
    let traj = simulate(&spec, 5, 20, 300).unwrap();
    let window = traj.states.slice(ndarray::s![7..10, ..]);
    let y_bar = [
        traj.states[[7, 1]],
        traj.states[[7, 3]],
        traj.states[[7, 4]],
    ];
    let c = [1.0, 0.2, 0.1, 0.2, 0.5, 0.0, 0.1, 0.0, 0.3];
    let s = first_order_sigma_at(&spec, window, &y_bar, &c).unwrap();
    assert!((s[[0, 1]] - s[[1, 0]]).abs() < 1e-12 * s[[0, 0]].abs().max(1.0));
    let tr = s[[0, 0]] + s[[1, 1]];
    let det = s[[0, 0]] * s[[1, 1]] - s[[0, 1]] * s[[1, 0]];
    assert!(tr >= 0.0 && det >= -1e-9 * tr * tr);
}

#[test]
fn first_order_sigma_is_exact_for_a_linear_map() {
    let map = toy();
    let y_bar = [0.4, -0.2];
    // C = L Lᵀ with L lower triangular.
    let l = [[0.3, 0.0], [0.1, 0.2]];
    let c = [
        l[0][0] * l[0][0],
        l[0][0] * l[1][0],
        l[0][0] * l[1][0],
        l[1][0] * l[1][0] + l[1][1] * l[1][1],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 1..=4 {
        let samples = 20_000;
        let mut eps_sq = 0.0;
        let mut window = None;
        for _ in 0..samples {
            let (u, v): (f64, f64) = (
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            );
            let y0 = [y_bar[0] + l[0][0] * u, y_bar[1] + l[1][0] * u + l[1][1] * v];
            let mut states = Array2::zeros((d + 1, 3));
            let mut z = vec![1.0, y0[0], y0[1]];
            states.row_mut(0).assign(&ndarray::ArrayView1::from(&z));
            for t in 1..=d {
                map.advance(&mut z).unwrap();
                states.row_mut(t).assign(&ndarray::ArrayView1::from(&z));
            }
            let eps = recursion_residual(&map, states.view(), d, d, &y_bar).unwrap();
            eps_sq += eps[0] * eps[0];
            window.get_or_insert(states);
        }
        let empirical = eps_sq / samples as f64;
        let states = window.unwrap();
        let sigma =
            first_order_sigma_at(&map, states.slice(ndarray::s![0..d, ..]), &y_bar, &c).unwrap();
        let rel = (sigma[[0, 0]] - empirical).abs() / empirical;
        assert!(
            rel < 0.1,
            "d={d}: sigma {} vs empirical {empirical}",
            sigma[[0, 0]]
        );
    }
}

#[test]
fn evaluation_times_are_spread_and_in_range() {
    let t = evaluation_times(10_000, 3, 2000);
    assert_eq!(t.len(), 2000);
    assert_eq!(t[0], 3);
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!(*t.last().unwrap() < 10_000);
    assert_eq!(evaluation_times(5, 3, 100), vec![3, 4]);
}
