//! The four benchmark systems: a discrete Lotka-Volterra map, Lorenz 63,
//! a forced Duffing oscillator written as an autonomous 4-D system, and
//! Lorenz 96.
//!
//! Continuous systems are advanced by fixed-step classical RK4. The flow-map
//! Jacobian is obtained by differentiating the RK4 step itself (the discrete
//! variational equation), so it is the exact derivative of [`SystemSpec::flow_map`]
//! rather than an approximation of the continuous flow's derivative.

mod diagnostics;
mod integrate;
mod trajectory;

pub use diagnostics::{
    autocorrelation, diagnostics, diagnostics_with, prev_value_nrmse, reference_diagnostics,
    DiagnosticsReport, DiagnosticsTarget, LyapunovProtocol, TargetCheck,
};
pub use integrate::FlowMap;
pub use trajectory::{simulate, Trajectory};

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A full state `z = (x, y)` of one of the systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        StateVector(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(v: Vec<f64>) -> Self {
        StateVector(v)
    }
}

impl std::ops::Index<usize> for StateVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    DiscreteLv,
    Lorenz63,
    Duffing4d,
    Lorenz96,
}

/// Model equations and their parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum System {
    /// `x' = r_x x(1-x) + A_xy x y`, `y' = r_y y(1-y) + A_yx x y`.
    DiscreteLv {
        r_x: f64,
        r_y: f64,
        a_xy: f64,
        a_yx: f64,
    },
    Lorenz63 {
        sigma: f64,
        rho: f64,
        beta: f64,
    },
    /// `x'' + delta x' + beta x + alpha x^3 = gamma cos(omega t)` with
    /// `v = cos(omega t)`, `z = sin(omega t)` carried as state.
    Duffing4d {
        alpha: f64,
        beta: f64,
        delta: f64,
        gamma: f64,
        omega: f64,
    },
    /// Cyclic `dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F`.
    Lorenz96 {
        n: usize,
        forcing: f64,
    },
}

impl System {
    pub fn kind(&self) -> SystemKind {
        match self {
            System::DiscreteLv { .. } => SystemKind::DiscreteLv,
            System::Lorenz63 { .. } => SystemKind::Lorenz63,
            System::Duffing4d { .. } => SystemKind::Duffing4d,
            System::Lorenz96 { .. } => SystemKind::Lorenz96,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            System::DiscreteLv { .. } => 2,
            System::Lorenz63 { .. } => 3,
            System::Duffing4d { .. } => 4,
            System::Lorenz96 { n, .. } => *n,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, System::DiscreteLv { .. })
    }

    /// Short name used in CSV output and presets.
    pub fn name(&self) -> &'static str {
        match self {
            System::DiscreteLv { .. } => "lv",
            System::Lorenz63 { .. } => "lorenz63",
            System::Duffing4d { .. } => "duffing",
            System::Lorenz96 { .. } => "lorenz96",
        }
    }

    pub(crate) fn lv_map_into(&self, z: &[f64], out: &mut [f64]) {
        if let System::DiscreteLv {
            r_x,
            r_y,
            a_xy,
            a_yx,
        } = *self
        {
            let (x, y) = (z[0], z[1]);
            out[0] = r_x * x * (1.0 - x) + a_xy * x * y;
            out[1] = r_y * y * (1.0 - y) + a_yx * x * y;
        }
    }

    pub(crate) fn lv_jacobian_into(&self, z: &[f64], out: &mut [f64]) {
        if let System::DiscreteLv {
            r_x,
            r_y,
            a_xy,
            a_yx,
        } = *self
        {
            let (x, y) = (z[0], z[1]);
            out[0] = r_x * (1.0 - 2.0 * x) + a_xy * y;
            out[1] = a_xy * x;
            out[2] = a_yx * y;
            out[3] = r_y * (1.0 - 2.0 * y) + a_yx * x;
        }
    }

    /// Time derivative; a no-op for the discrete map.
    pub(crate) fn field_into(&self, z: &[f64], out: &mut [f64]) {
        match *self {
            System::DiscreteLv { .. } => {}
            System::Lorenz63 { sigma, rho, beta } => {
                out[0] = sigma * (z[1] - z[0]);
                out[1] = z[0] * (rho - z[2]) - z[1];
                out[2] = z[0] * z[1] - beta * z[2];
            }
            System::Duffing4d {
                alpha,
                beta,
                delta,
                gamma,
                omega,
            } => {
                let x = z[0];
                out[0] = z[1];
                out[1] = gamma * z[2] - delta * z[1] - beta * x - alpha * x * x * x;
                out[2] = -omega * z[3];
                out[3] = omega * z[2];
            }
            System::Lorenz96 { n, forcing } => {
                for i in 0..n {
                    let ip1 = (i + 1) % n;
                    let im1 = (i + n - 1) % n;
                    let im2 = (i + n - 2) % n;
                    out[i] = (z[ip1] - z[im2]) * z[im1] - z[i] + forcing;
                }
            }
        }
    }

    /// Row-major Jacobian of the vector field.
    pub(crate) fn field_jacobian_into(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match *self {
            System::DiscreteLv { .. } => {}
            System::Lorenz63 { sigma, rho, beta } => {
                out[0] = -sigma;
                out[1] = sigma;
                out[3] = rho - z[2];
                out[4] = -1.0;
                out[5] = -z[0];
                out[6] = z[1];
                out[7] = z[0];
                out[8] = -beta;
            }
            System::Duffing4d {
                alpha,
                beta,
                delta,
                gamma,
                omega,
            } => {
                let x = z[0];
                out[1] = 1.0;
                out[4] = -beta - 3.0 * alpha * x * x;
                out[5] = -delta;
                out[6] = gamma;
                out[2 * 4 + 3] = -omega;
                out[3 * 4 + 2] = omega;
            }
            System::Lorenz96 { n, .. } => {
                for i in 0..n {
                    let ip1 = (i + 1) % n;
                    let im1 = (i + n - 1) % n;
                    let im2 = (i + n - 2) % n;
                    let row = i * n;
                    out[row + ip1] += z[im1];
                    out[row + im2] -= z[im1];
                    out[row + im1] += z[ip1] - z[im2];
                    out[row + i] -= 1.0;
                }
            }
        }
    }

    /// Random starting point that reaches the attractor after a short transient.
    pub fn initial_condition<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let v = match *self {
            System::DiscreteLv { .. } => {
                let x = 0.1 + 0.8 * rng.random::<f64>();
                let y = 0.1 + 0.8 * rng.random::<f64>();
                vec![x, y]
            }
            System::Lorenz63 { .. } => (0..3).map(|_| 1.0 + normal()).collect(),
            System::Duffing4d { .. } => vec![0.5 * normal(), 0.5 * normal(), 1.0, 0.0],
            System::Lorenz96 { n, forcing } => (0..n).map(|_| forcing + 0.1 * normal()).collect(),
        };
        StateVector(v)
    }
}

/// A system together with its sampling and observation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub system: System,
    /// Time per observation; 1 for the discrete map.
    pub sample_dt: f64,
    /// RK4 steps per observation. Ignored by the discrete map.
    pub substeps: usize,
    /// Indices of the observed coordinates (the `x` block).
    pub observed: Vec<usize>,
}

/// Presets carry the Table-1 style parameters for each benchmark system.
pub const PRESET_NAMES: [&str; 4] = ["lv", "lorenz63", "duffing", "lorenz96"];

impl SystemSpec {
    pub fn lotka_volterra() -> Self {
        SystemSpec {
            system: System::DiscreteLv {
                r_x: 0.933,
                r_y: 1.293,
                a_xy: 0.758,
                a_yx: 1.420,
            },
            sample_dt: 1.0,
            substeps: 1,
            observed: vec![0],
        }
    }

    pub fn lorenz63() -> Self {
        SystemSpec {
            system: System::Lorenz63 {
                sigma: 10.0,
                rho: 28.0,
                beta: 8.0 / 3.0,
            },
            sample_dt: 0.1,
            substeps: 100,
            observed: vec![0],
        }
    }

    /// Forcing 1.0 and cubic stiffness 0.5; this assignment of the tabulated
    /// values reproduces the reported Lyapunov exponent and autocorrelation.
    pub fn duffing() -> Self {
        SystemSpec {
            system: System::Duffing4d {
                alpha: 0.5,
                beta: -1.0,
                delta: 0.3,
                gamma: 1.0,
                omega: 1.2,
            },
            sample_dt: 1.0,
            substeps: 100,
            observed: vec![0],
        }
    }

    pub fn lorenz96() -> Self {
        SystemSpec {
            system: System::Lorenz96 { n: 5, forcing: 8.0 },
            sample_dt: 0.1,
            substeps: 100,
            observed: vec![0],
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "lv" => Some(Self::lotka_volterra()),
            "lorenz63" => Some(Self::lorenz63()),
            "duffing" => Some(Self::duffing()),
            "lorenz96" => Some(Self::lorenz96()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        self.system.name()
    }

    pub fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    pub fn observed_dim(&self) -> usize {
        self.observed.len()
    }

    /// Indices of the `y` block, in ascending order.
    pub fn unobserved(&self) -> Vec<usize> {
        (0..self.state_dim())
            .filter(|i| !self.observed.contains(i))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.state_dim();
        if let System::Lorenz96 { n, .. } = self.system {
            if n < 4 {
                return Err(Error::InvalidArgument(format!(
                    "lorenz96 needs n >= 4, got {n}"
                )));
            }
        }
        if !(self.sample_dt > 0.0) || !self.sample_dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sample_dt must be positive, got {}",
                self.sample_dt
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidArgument("substeps must be >= 1".into()));
        }
        if self.observed.is_empty() {
            return Err(Error::InvalidArgument("observed set is empty".into()));
        }
        let mut seen = vec![false; m];
        for &i in &self.observed {
            if i >= m {
                return Err(Error::InvalidArgument(format!(
                    "observed index {i} out of range for state dimension {m}"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidArgument(format!(
                    "observed index {i} repeated"
                )));
            }
            seen[i] = true;
        }
        if self.observed.len() == m {
            return Err(Error::InvalidArgument(
                "every coordinate is observed; nothing to reconstruct".into(),
            ));
        }
        Ok(())
    }

    /// One application of the discrete Lotka-Volterra map.
    pub fn lv_step(&self, state: &StateVector) -> Result<StateVector> {
        if !self.system.is_discrete() {
            return Err(Error::InvalidArgument(
                "lv_step requires the discrete Lotka-Volterra system".into(),
            ));
        }
        let mut out = vec![0.0; 2];
        self.system.lv_map_into(&state.0, &mut out);
        finite_or_diverged(StateVector(out))
    }

    /// Time derivative of a continuous system.
    pub fn vector_field(&self, state: &StateVector) -> Result<StateVector> {
        if self.system.is_discrete() {
            return Err(Error::InvalidArgument(
                "the discrete map has no vector field".into(),
            ));
        }
        let mut out = vec![0.0; self.state_dim()];
        self.system.field_into(&state.0, &mut out);
        Ok(StateVector(out))
    }

    /// Jacobian of [`Self::vector_field`].
    pub fn field_jacobian(&self, state: &StateVector) -> Result<Array2<f64>> {
        if self.system.is_discrete() {
            return Err(Error::InvalidArgument(
                "the discrete map has no vector field".into(),
            ));
        }
        let m = self.state_dim();
        let mut out = vec![0.0; m * m];
        self.system.field_jacobian_into(&state.0, &mut out);
        Ok(Array2::from_shape_vec((m, m), out).expect("square"))
    }

    /// Advance one sample interval.
    pub fn flow_map(&self, state: &StateVector) -> Result<StateVector> {
        let mut z = state.0.clone();
        self.advance(&mut z)?;
        Ok(StateVector(z))
    }

    /// Jacobian of [`Self::flow_map`] at `state`.
    pub fn flow_jacobian(&self, state: &StateVector) -> Result<Array2<f64>> {
        Ok(self.flow_with_jacobian(state)?.1)
    }

    /// The advanced state together with the flow-map Jacobian.
    pub fn flow_with_jacobian(&self, state: &StateVector) -> Result<(StateVector, Array2<f64>)> {
        let m = self.state_dim();
        let mut z = state.0.clone();
        let mut jac = vec![0.0; m * m];
        self.advance_with_jacobian(&mut z, &mut jac)?;
        Ok((
            StateVector(z),
            Array2::from_shape_vec((m, m), jac).expect("square"),
        ))
    }
}

fn finite_or_diverged(s: StateVector) -> Result<StateVector> {
    if s.is_finite() {
        Ok(s)
    } else {
        Err(Error::Diverged { sample: 0 })
    }
}
