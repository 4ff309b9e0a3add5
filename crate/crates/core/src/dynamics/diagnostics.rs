use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FlowMap, StateVector, SystemSpec};
use crate::error::{Error, Result};

/// Largest Lyapunov exponent and one-step predictability of the observed
/// coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    /// Per unit time.
    pub lyapunov: f64,
    pub autocorr_dt: f64,
    /// Normalized so that predicting with the series mean scores 1.
    pub prev_value_nrmse: f64,
}

/// Sample counts for the Benettin estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LyapunovProtocol {
    pub transient: usize,
    pub warmup: usize,
    pub samples: usize,
}

impl Default for LyapunovProtocol {
    fn default() -> Self {
        LyapunovProtocol {
            transient: 1000,
            warmup: 1000,
            samples: 20000,
        }
    }
}

pub fn diagnostics(spec: &SystemSpec, seed: u64) -> Result<DiagnosticsReport> {
    diagnostics_with(spec, seed, LyapunovProtocol::default())
}

/// Benettin estimate with renormalization after every sample; the
/// autocorrelation and previous-value error use the observed coordinate
/// over the same measured samples.
pub fn diagnostics_with(
    spec: &SystemSpec,
    seed: u64,
    protocol: LyapunovProtocol,
) -> Result<DiagnosticsReport> {
    spec.validate()?;
    if protocol.samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let StateVector(mut z) = spec.system.initial_condition(&mut rng);
    let m = z.len();
    for step in 0..protocol.transient {
        spec.advance(&mut z)
            .map_err(|_| Error::Diverged { sample: step + 1 })?;
    }

    let mut tangent = vec![1.0 / (m as f64).sqrt(); m];
    let mut next = vec![0.0; m];
    let mut jac = vec![0.0; m * m];
    let obs = spec.observed[0];
    let mut series = Vec::with_capacity(protocol.samples);
    let mut log_growth = 0.0;

    for step in 0..protocol.warmup + protocol.samples {
        let measuring = step >= protocol.warmup;
        if measuring {
            series.push(z[obs]);
        }
        spec.advance_with_jacobian(&mut z, &mut jac)
            .map_err(|_| Error::Diverged {
                sample: protocol.transient + step + 1,
            })?;
        for i in 0..m {
            next[i] = (0..m).map(|j| jac[i * m + j] * tangent[j]).sum();
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Diverged {
                sample: protocol.transient + step + 1,
            });
        }
        if measuring {
            log_growth += norm.ln();
        }
        for i in 0..m {
            tangent[i] = next[i] / norm;
        }
    }

    let lyapunov = log_growth / (protocol.samples as f64 * spec.sample_dt);
    Ok(DiagnosticsReport {
        lyapunov,
        autocorr_dt: autocorrelation(&series, 1)?,
        prev_value_nrmse: prev_value_nrmse(&series)?,
    })
}

fn mean_and_var(series: &[f64]) -> Result<(f64, f64)> {
    if series.is_empty() {
        return Err(Error::DegenerateSeries("empty series"));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) {
        return Err(Error::DegenerateSeries("zero variance"));
    }
    Ok((mean, var))
}

/// Sample autocorrelation at `lag` (biased estimator, overall mean).
pub fn autocorrelation(series: &[f64], lag: usize) -> Result<f64> {
    if series.len() <= lag {
        return Err(Error::TooShort {
            needed: lag + 1,
            got: series.len(),
        });
    }
    let (mean, var) = mean_and_var(series)?;
    let n = series.len();
    let cov = (0..n - lag)
        .map(|t| (series[t] - mean) * (series[t + lag] - mean))
        .sum::<f64>()
        / n as f64;
    Ok(cov / var)
}

/// RMSE of predicting `x_t` by `x_{t-1}`, divided by the series' standard
/// deviation.
pub fn prev_value_nrmse(series: &[f64]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let (_, var) = mean_and_var(series)?;
    let mse = series
        .windows(2)
        .map(|w| (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / (series.len() - 1) as f64;
    Ok((mse / var).sqrt())
}

/// Published diagnostics for a preset and the accepted deviations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsTarget {
    pub lyapunov: f64,
    pub lyapunov_tol: f64,
    pub autocorr_dt: f64,
    pub autocorr_tol: f64,
    pub prev_value_nrmse: f64,
    pub prev_value_tol: f64,
}

/// One compared quantity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetCheck {
    pub quantity: &'static str,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
}

impl TargetCheck {
    pub fn passed(&self) -> bool {
        (self.measured - self.target).abs() <= self.tolerance
    }
}

impl DiagnosticsTarget {
    pub fn check(&self, report: &DiagnosticsReport) -> [TargetCheck; 3] {
        let c = |quantity, measured, target, tolerance| TargetCheck {
            quantity,
            measured,
            target,
            tolerance,
        };
        [
            c(
                "lyapunov",
                report.lyapunov,
                self.lyapunov,
                self.lyapunov_tol,
            ),
            c(
                "autocorr_dt",
                report.autocorr_dt,
                self.autocorr_dt,
                self.autocorr_tol,
            ),
            c(
                "prev_value_nrmse",
                report.prev_value_nrmse,
                self.prev_value_nrmse,
                self.prev_value_tol,
            ),
        ]
    }
}

/// Reference values for a preset name.
pub fn reference_diagnostics(name: &str) -> Option<DiagnosticsTarget> {
    let t = |le, le_tol, ac, prev| DiagnosticsTarget {
        lyapunov: le,
        lyapunov_tol: le_tol,
        autocorr_dt: ac,
        autocorr_tol: 0.02,
        prev_value_nrmse: prev,
        prev_value_tol: 0.05,
    };
    match name {
        "lv" => Some(t(0.15, 0.05, 0.632, 0.858)),
        "lorenz63" => Some(t(0.91, 0.05, 0.869, 0.512)),
        "duffing" => Some(t(0.17, 0.05, 0.667, 0.816)),
        "lorenz96" => Some(t(0.472, 0.02, 0.866, 0.518)),
        _ => None,
    }
}
