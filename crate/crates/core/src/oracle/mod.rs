//! Model-free benchmarks for the delay map.
//!
//! The delay map can be written as a nested recursion of the true dynamics
//! in which only the unobserved block at the oldest lag, `y_{t-d}`, is
//! unknown. Plugging in the conditional mean `ȳ = E[y_{t-d} | x_{t-1..t-d}]`
//! leaves a residual `ε_t` (apparent process noise). Its first-order
//! covariance is `Σ_t = P Q ... Q C Qᵀ ... Qᵀ Pᵀ`, with `P`/`Q` the
//! observed/unobserved-row, unobserved-column blocks of the flow-map
//! Jacobian along the recursion and `C` the conditional covariance of
//! `y_{t-d}`.
//!
//! Conditional moments are estimated nonparametrically from a long
//! trajectory: the mean by local-linear regression on the nearest
//! neighbours, the covariance by inverse-distance averaging of
//! leave-one-out residual outer products.

mod knn;

#[cfg(test)]
mod tests;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, FlowMap, System, SystemSpec};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionTarget {
    YMean,
    YCovariance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Tricube-weighted local-linear fit; default `k = 2(d·n + 1) + 4`.
    LocalLinear,
    /// Inverse-distance weighted mean; default `k = ceil(sqrt(S))`.
    InverseDistance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Neighbour count; `None` picks the kind's default.
    pub k: Option<usize>,
}

impl EstimatorConfig {
    pub fn local_linear() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::LocalLinear,
            k: None,
        }
    }

    pub fn inverse_distance() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::InverseDistance,
            k: None,
        }
    }

    fn resolve_k(&self, width: usize, samples: usize) -> usize {
        let k = self.k.unwrap_or(match self.kind {
            EstimatorKind::LocalLinear => 2 * (width + 1) + 4,
            EstimatorKind::InverseDistance => (samples as f64).sqrt().ceil() as usize,
        });
        k.clamp(1, samples)
    }

    pub fn describe(&self) -> String {
        let k = match self.k {
            Some(k) => k.to_string(),
            None => match self.kind {
                EstimatorKind::LocalLinear => "2(dn+1)+4".into(),
                EstimatorKind::InverseDistance => "ceil(sqrt(S))".into(),
            },
        };
        match self.kind {
            EstimatorKind::LocalLinear => format!("local_linear(k={k};tricube;ridge=1e-6h^2)"),
            EstimatorKind::InverseDistance => format!("inverse_distance(k={k})"),
        }
    }
}

/// Sample counts of the oracle protocol: simulate `total`, drop the first
/// `discard`, fit on the next `fit`, evaluate on the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub total: usize,
    pub discard: usize,
    pub fit: usize,
    /// Evaluation points, spread evenly over the held-out segment.
    pub n_eval: usize,
    pub seed: u64,
    pub mean_estimator: EstimatorConfig,
    pub cov_estimator: EstimatorConfig,
    /// Also evaluate the first-order covariance.
    pub sigma: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            total: 30_000,
            discard: 10_000,
            fit: 10_000,
            n_eval: 2000,
            seed: 0,
            mean_estimator: EstimatorConfig::local_linear(),
            cov_estimator: EstimatorConfig::inverse_distance(),
            sigma: true,
        }
    }
}

impl OracleConfig {
    pub fn describe(&self) -> String {
        format!(
            "mean={};cov={}",
            self.mean_estimator.describe(),
            self.cov_estimator.describe()
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.discard + self.fit >= self.total {
            return Err(Error::InvalidArgument(
                "oracle protocol leaves no evaluation segment".into(),
            ));
        }
        if self.n_eval == 0 {
            return Err(Error::InvalidArgument("n_eval must be >= 1".into()));
        }
        Ok(())
    }
}

/// A fitted nearest-neighbour regressor on delay coordinates.
#[derive(Clone, Debug)]
pub struct ConditionalRegressor {
    pub d: usize,
    pub n: usize,
    /// Response width: `m` for the mean, `m²` for the covariance.
    pub m: usize,
    pub k: usize,
    pub target: RegressionTarget,
    pub estimator: EstimatorConfig,
    /// Standardized delay vectors, row-major `S × d·n`.
    refs: Vec<f64>,
    responses: Vec<f64>,
    mu: Vec<f64>,
    sd: Vec<f64>,
}

impl ConditionalRegressor {
    /// Builds a regressor from raw delay vectors (most recent lag first)
    /// and responses.
    pub fn new(
        inputs: ArrayView2<'_, f64>,
        responses: ArrayView2<'_, f64>,
        d: usize,
        target: RegressionTarget,
        estimator: EstimatorConfig,
    ) -> Result<Self> {
        let (s_len, width) = inputs.dim();
        if s_len == 0 || responses.nrows() != s_len || d == 0 || width % d != 0 {
            return Err(Error::InsufficientData(format!(
                "need matching non-empty inputs and responses, got {:?} and {:?}",
                inputs.dim(),
                responses.dim()
            )));
        }
        let mu: Vec<f64> = (0..width)
            .map(|c| inputs.column(c).mean().unwrap_or(0.0))
            .collect();
        let sd: Vec<f64> = (0..width)
            .map(|c| {
                let s = inputs.column(c).std(0.0);
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        let mut refs = Vec::with_capacity(s_len * width);
        for row in inputs.outer_iter() {
            refs.extend(row.iter().enumerate().map(|(c, v)| (v - mu[c]) / sd[c]));
        }
        Ok(ConditionalRegressor {
            d,
            n: width / d,
            m: responses.ncols(),
            k: estimator.resolve_k(width, s_len),
            target,
            estimator,
            refs,
            responses: responses.iter().copied().collect(),
            mu,
            sd,
        })
    }

    pub fn len(&self) -> usize {
        self.responses.len() / self.m.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    fn width(&self) -> usize {
        self.d * self.n
    }

    fn estimate(&self, window: &[f64], skip: Option<usize>) -> Vec<f64> {
        let width = self.width();
        let q: Vec<f64> = window
            .iter()
            .enumerate()
            .map(|(c, v)| (v - self.mu[c]) / self.sd[c])
            .collect();
        let nb = knn::nearest(&self.refs, width, &q, self.k, skip);
        let mut out = vec![0.0; self.m];
        match self.estimator.kind {
            EstimatorKind::LocalLinear => knn::local_linear(
                &nb,
                &self.refs,
                width,
                &q,
                &self.responses,
                self.m,
                &mut out,
            ),
            EstimatorKind::InverseDistance => {
                knn::inverse_distance(&nb, &self.responses, self.m, &mut out)
            }
        }
        out
    }

    /// Estimate at a raw, most-recent-first delay vector.
    pub fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        if window.len() != self.width() {
            return Err(Error::SequenceLength {
                expected: self.width(),
                got: window.len(),
            });
        }
        Ok(self.estimate(window, None))
    }

    /// Estimate at reference sample `i` with that sample left out.
    pub fn predict_leave_one_out(&self, i: usize) -> Vec<f64> {
        let width = self.width();
        let raw: Vec<f64> = self.refs[i * width..(i + 1) * width]
            .iter()
            .enumerate()
            .map(|(c, v)| v * self.sd[c] + self.mu[c])
            .collect();
        self.estimate(&raw, Some(i))
    }
}

/// Delay vectors `(x_{t-1}, ..., x_{t-d})` of the observed block and the
/// unobserved state `y_{t-d}`, for `t = d, ..., T`.
pub fn delay_pairs<M: FlowMap + ?Sized>(
    map: &M,
    states: ArrayView2<'_, f64>,
    d: usize,
) -> (Array2<f64>, Array2<f64>) {
    let obs = map.observed().to_vec();
    let un = map.unobserved();
    let n = obs.len();
    let t_len = states.nrows();
    let rows = (t_len + 1).saturating_sub(d);
    let mut inputs = Array2::zeros((rows, d * n));
    let mut ys = Array2::zeros((rows, un.len()));
    for (r, t) in (d..=t_len).enumerate() {
        for k in 1..=d {
            for (j, &o) in obs.iter().enumerate() {
                inputs[[r, (k - 1) * n + j]] = states[[t - k, o]];
            }
        }
        for (j, &u) in un.iter().enumerate() {
            ys[[r, j]] = states[[t - d, u]];
        }
    }
    (inputs, ys)
}

/// Fits `E[y_{t-d} | x_{t-1..t-d}]` or the conditional covariance of
/// `y_{t-d}` on a fit segment of full states.
pub fn fit_conditional<M: FlowMap + ?Sized>(
    map: &M,
    states: ArrayView2<'_, f64>,
    d: usize,
    target: RegressionTarget,
    config: &OracleConfig,
) -> Result<ConditionalRegressor> {
    if d == 0 {
        return Err(Error::InvalidArgument("d must be >= 1".into()));
    }
    if states.nrows() < 10 * d {
        return Err(Error::InsufficientData(format!(
            "fit segment of {} samples is shorter than 10·d = {}",
            states.nrows(),
            10 * d
        )));
    }
    let (inputs, ys) = delay_pairs(map, states, d);
    let mean = ConditionalRegressor::new(
        inputs.view(),
        ys.view(),
        d,
        RegressionTarget::YMean,
        config.mean_estimator,
    )?;
    match target {
        RegressionTarget::YMean => Ok(mean),
        RegressionTarget::YCovariance => {
            let m = ys.ncols();
            let outer: Vec<Vec<f64>> = (0..mean.len())
                .into_par_iter()
                .map(|i| {
                    let pred = mean.predict_leave_one_out(i);
                    let r: Vec<f64> = (0..m).map(|j| ys[[i, j]] - pred[j]).collect();
                    let mut o = vec![0.0; m * m];
                    for a in 0..m {
                        for b in 0..m {
                            o[a * m + b] = r[a] * r[b];
                        }
                    }
                    o
                })
                .collect();
            let flat: Vec<f64> = outer.into_iter().flatten().collect();
            let responses = Array2::from_shape_vec((mean.len(), m * m), flat).expect("shape");
            ConditionalRegressor::new(
                inputs.view(),
                responses.view(),
                d,
                RegressionTarget::YCovariance,
                config.cov_estimator,
            )
        }
    }
}

/// Writes the observed block of `z` from the recorded state row.
fn overwrite_observed(obs: &[usize], z: &mut [f64], recorded: ndarray::ArrayView1<'_, f64>) {
    for &o in obs {
        z[o] = recorded[o];
    }
}

/// `ε_t` for one time: start from `(x_{t-d}, y_hat)`, apply the true map `d`
/// times, resetting the observed block to the recorded values after each
/// intermediate step, and compare with the recorded `x_t`.
pub fn recursion_residual<M: FlowMap + ?Sized>(
    map: &M,
    states: ArrayView2<'_, f64>,
    t: usize,
    d: usize,
    y_hat: &[f64],
) -> Result<Vec<f64>> {
    let obs = map.observed();
    let un = map.unobserved();
    if d == 0 || t < d || t >= states.nrows() || y_hat.len() != un.len() {
        return Err(Error::InvalidArgument(format!(
            "bad recursion request t={t}, d={d}, {} samples",
            states.nrows()
        )));
    }
    let mut z = states.row(t - d).to_vec();
    for (j, &u) in un.iter().enumerate() {
        z[u] = y_hat[j];
    }
    for k in (1..=d).rev() {
        map.advance(&mut z)
            .map_err(|_| Error::Diverged { sample: t + 1 - k })?;
        if k > 1 {
            overwrite_observed(obs, &mut z, states.row(t - k + 1));
        }
    }
    Ok(obs.iter().map(|&o| states[[t, o]] - z[o]).collect())
}

/// First-order covariance of `ε_t` given the conditional mean `y_bar` and
/// covariance `c` (row-major `m × m`) of `y_{t-d}`. `window` holds the full
/// recorded states `t-d, ..., t-1` (only their observed blocks are used).
pub fn first_order_sigma_at<M: FlowMap + ?Sized>(
    map: &M,
    window: ArrayView2<'_, f64>,
    y_bar: &[f64],
    c: &[f64],
) -> Result<Array2<f64>> {
    let obs = map.observed().to_vec();
    let un = map.unobserved();
    let (n, m) = (obs.len(), un.len());
    let d = window.nrows();
    let dim = map.state_dim();
    if d == 0 || y_bar.len() != m || c.len() != m * m {
        return Err(Error::InvalidArgument("bad sigma request".into()));
    }
    let mut z = window.row(0).to_vec();
    for (j, &u) in un.iter().enumerate() {
        z[u] = y_bar[j];
    }
    let mut acc = Array2::from_shape_vec((m, m), c.to_vec()).expect("square");
    let mut jac = vec![0.0; dim * dim];
    for step in 0..d {
        map.advance_with_jacobian(&mut z, &mut jac)
            .map_err(|_| Error::Diverged { sample: step + 1 })?;
        let last = step + 1 == d;
        let rows: &[usize] = if last { &obs } else { &un };
        let block = Array2::from_shape_fn((rows.len(), m), |(i, j)| jac[rows[i] * dim + un[j]]);
        acc = block.dot(&acc).dot(&block.t());
        if !last {
            overwrite_observed(&obs, &mut z, window.row(step + 1));
        }
    }
    debug_assert_eq!(acc.dim(), (n, n));
    // Symmetrize away round-off.
    let sym = (&acc + &acc.t()) * 0.5;
    Ok(sym)
}

/// `Σ_t` with `ȳ` and `C` taken from fitted regressors at the delay vector
/// ending at `t-1`; `states` must contain rows `t-d ..= t-1`.
pub fn first_order_sigma<M: FlowMap + ?Sized>(
    map: &M,
    states: ArrayView2<'_, f64>,
    t: usize,
    reg_mean: &ConditionalRegressor,
    reg_cov: &ConditionalRegressor,
) -> Result<Array2<f64>> {
    let d = reg_mean.d;
    if reg_cov.d != d || t < d || t > states.nrows() {
        return Err(Error::InvalidArgument(
            "regressor depth or time out of range".into(),
        ));
    }
    let window = observed_window(map, states, t, d);
    let y_bar = reg_mean.predict(&window)?;
    let c = reg_cov.predict(&window)?;
    first_order_sigma_at(map, states.slice(ndarray::s![t - d..t, ..]), &y_bar, &c)
}

/// Most-recent-first observed delay vector `(x_{t-1}, ..., x_{t-d})`.
fn observed_window<M: FlowMap + ?Sized>(
    map: &M,
    states: ArrayView2<'_, f64>,
    t: usize,
    d: usize,
) -> Vec<f64> {
    let obs = map.observed();
    let mut w = Vec::with_capacity(d * obs.len());
    for k in 1..=d {
        for &o in obs {
            w.push(states[[t - k, o]]);
        }
    }
    w
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionErrorReport {
    pub system: String,
    pub d: usize,
    /// RMS of `ε_t` divided by the observed standard deviation.
    pub eps_rms: f64,
    /// Mean of `tr Σ_t / n` divided by the observed variance; NaN when the
    /// covariance was not evaluated.
    pub sigma_trace_mean: f64,
    pub n_eval: usize,
    pub estimator: String,
}

pub const REPORT_CSV_HEADER: &str = "system,d,eps_rms,sigma_trace_mean,n_eval,estimator";

impl RecursionErrorReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.10e},{:.10e},{},\"{}\"",
            self.system, self.d, self.eps_rms, self.sigma_trace_mean, self.n_eval, self.estimator
        )
    }
}

/// Evenly spread evaluation times in `[d, len)`.
pub fn evaluation_times(len: usize, d: usize, n_eval: usize) -> Vec<usize> {
    let span = len.saturating_sub(d);
    let n = n_eval.min(span);
    (0..n).map(|i| d + i * span / n).collect()
}

/// Recursion error (and optionally its first-order covariance) at depth
/// `d` on an evaluation segment, with regressors fitted elsewhere.
pub fn recursion_error<M: FlowMap + ?Sized>(
    map: &M,
    eval_states: ArrayView2<'_, f64>,
    reg_mean: &ConditionalRegressor,
    reg_cov: Option<&ConditionalRegressor>,
    obs_std: &[f64],
    n_eval: usize,
) -> Result<(f64, f64, usize)> {
    let d = reg_mean.d;
    let obs = map.observed();
    let n = obs.len();
    if obs_std.len() != n {
        return Err(Error::InvalidArgument(
            "one std per observed coordinate".into(),
        ));
    }
    let times = evaluation_times(eval_states.nrows(), d, n_eval);
    if times.is_empty() {
        return Err(Error::InsufficientData(
            "evaluation segment too short".into(),
        ));
    }
    let per_point: Vec<Result<(f64, f64)>> = times
        .par_iter()
        .map(|&t| {
            let window = observed_window(map, eval_states, t, d);
            let y_bar = reg_mean.predict(&window)?;
            let eps = recursion_residual(map, eval_states, t, d, &y_bar)?;
            let sq: f64 = eps
                .iter()
                .zip(obs_std)
                .map(|(e, s)| (e / s) * (e / s))
                .sum::<f64>()
                / n as f64;
            let tr = match reg_cov {
                Some(cov) => {
                    let c = cov.predict(&window)?;
                    let sigma = first_order_sigma_at(
                        map,
                        eval_states.slice(ndarray::s![t - d..t, ..]),
                        &y_bar,
                        &c,
                    )?;
                    (0..n)
                        .map(|j| sigma[[j, j]] / (obs_std[j] * obs_std[j]))
                        .sum::<f64>()
                        / n as f64
                }
                None => f64::NAN,
            };
            Ok((sq, tr))
        })
        .collect();
    let mut sum_sq = 0.0;
    let mut sum_tr = 0.0;
    for r in per_point {
        let (sq, tr) = r?;
        sum_sq += sq;
        sum_tr += tr;
    }
    let count = times.len() as f64;
    Ok(((sum_sq / count).sqrt(), sum_tr / count, times.len()))
}

/// Runs the full oracle protocol on one system for each depth in `depths`,
/// sharing a single simulated trajectory.
pub fn run_oracle(
    spec: &SystemSpec,
    depths: &[usize],
    config: &OracleConfig,
) -> Result<Vec<RecursionErrorReport>> {
    config.validate()?;
    if depths.contains(&0) {
        return Err(Error::InvalidArgument("delay count must be >= 1".into()));
    }
    let traj = simulate(
        spec,
        config.seed,
        config.total - config.discard,
        config.discard,
    )?;
    let fit = traj.states.slice(ndarray::s![..config.fit, ..]);
    let eval = traj.states.slice(ndarray::s![config.fit.., ..]);
    let obs_std: Vec<f64> = spec
        .observed
        .iter()
        .map(|&o| fit.column(o).std(0.0))
        .collect();
    let mut out = Vec::with_capacity(depths.len());
    for &d in depths {
        let mean = fit_conditional(spec, fit, d, RegressionTarget::YMean, config)?;
        let cov = if config.sigma {
            Some(fit_conditional(
                spec,
                fit,
                d,
                RegressionTarget::YCovariance,
                config,
            )?)
        } else {
            None
        };
        let (eps_rms, sigma_trace_mean, n_eval) =
            recursion_error(spec, eval, &mean, cov.as_ref(), &obs_std, config.n_eval)?;
        out.push(RecursionErrorReport {
            system: spec.name().to_string(),
            d,
            eps_rms,
            sigma_trace_mean,
            n_eval,
            estimator: config.describe(),
        });
    }
    Ok(out)
}

/// Closed-form two-lag delay map of the discrete Lotka-Volterra system,
/// obtained by eliminating `y` from two applications of the map.
pub fn lv_exact_delay_map(x_prev: f64, x_prev2: f64, spec: &SystemSpec) -> Result<f64> {
    let System::DiscreteLv {
        r_x,
        r_y,
        a_xy,
        a_yx,
    } = spec.system
    else {
        return Err(Error::InvalidArgument(
            "the exact delay map exists only for the discrete Lotka-Volterra system".into(),
        ));
    };
    let denom = a_xy * x_prev2;
    if denom == 0.0 {
        return Err(Error::SingularDelayMap(x_prev2));
    }
    let y2 = (x_prev - r_x * x_prev2 * (1.0 - x_prev2)) / denom;
    let y1 = r_y * y2 * (1.0 - y2) + a_yx * x_prev2 * y2;
    Ok(r_x * x_prev * (1.0 - x_prev) + a_xy * x_prev * y1)
}
