//! Delay-map networks: a one-hidden-layer feedforward net on the full delay
//! vector, and the recursion-structured RNN
//!
//! ```text
//! g_k   = tanh(W_g (x_{t-d+k-1} ⊕ g_{k-1}) + b_g),   g_0 = g_init
//! f_t   = tanh(W_f (x_{t-1} ⊕ g_{d-1}) + b_f)
//! x̂_t   = W_x f_t + b_x
//! ```
//!
//! Both are trained on the sum of squared one-step errors with full-batch
//! RMSprop and early stopping on a validation split.

mod checkpoint;
mod kernels;
mod train;


pub use checkpoint::{Checkpoint, MatrixEntry};
pub use train::{
    iterated_forecast, loss, rmsprop_step, train, EarlyStopping, StopDecision, TrainConfig,
    TrainHistory, TrainedModel,
};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use kernels::{Layout, Scratch};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Fnn,
    Rnn,
}

impl Arch {
    pub fn name(&self) -> &'static str {
        match self {
            Arch::Fnn => "fnn",
            Arch::Rnn => "rnn",
        }
    }

    /// Trainable parameter count (the RNN's initial hidden state excluded).
    pub fn param_count(&self, n: usize, h: usize, d: usize) -> usize {
        Layout {
            arch: *self,
            n,
            h,
            d,
        }
        .param_count()
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Arch> {
        match s.to_ascii_lowercase().as_str() {
            "fnn" => Ok(Arch::Fnn),
            "rnn" => Ok(Arch::Rnn),
            other => Err(Error::InvalidArgument(format!(
                "unknown architecture {other:?}"
            ))),
        }
    }
}

/// How the RNN's initial hidden state is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GInitPolicy {
    /// One N(0, 0.1²) draw per training run, kept fixed.
    RandomNormal,
    Zero,
    /// Drawn like `RandomNormal`, then learned with the weights.
    Trainable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FnnParams {
    /// `h × (d·n)`.
    pub w_f: Array2<f64>,
    pub b_f: Array1<f64>,
    /// `n × h`.
    pub w_x: Array2<f64>,
    pub b_x: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RnnParams {
    /// `n × h`.
    pub w_x: Array2<f64>,
    pub b_x: Array1<f64>,
    /// `h × (n + h)`; the first `n` columns act on `x`.
    pub w_f: Array2<f64>,
    pub b_f: Array1<f64>,
    /// `h × (n + h)`.
    pub w_g: Array2<f64>,
    pub b_g: Array1<f64>,
    pub g_init: Array1<f64>,
}

impl FnnParams {
    pub fn zeros(n: usize, h: usize, d: usize) -> Self {
        FnnParams {
            w_f: Array2::zeros((h, d * n)),
            b_f: Array1::zeros(h),
            w_x: Array2::zeros((n, h)),
            b_x: Array1::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.w_x.nrows()
    }

    pub fn h(&self) -> usize {
        self.w_f.nrows()
    }

    pub fn d(&self) -> usize {
        self.w_f.ncols() / self.n()
    }

    pub fn param_count(&self) -> usize {
        self.layout().param_count()
    }

    pub(crate) fn layout(&self) -> Layout {
        Layout {
            arch: Arch::Fnn,
            n: self.n(),
            h: self.h(),
            d: self.d(),
        }
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout().flat_len());
        v.extend(self.w_f.iter());
        v.extend(self.b_f.iter());
        v.extend(self.w_x.iter());
        v.extend(self.b_x.iter());
        v
    }

    pub(crate) fn from_flat(l: &Layout, p: &[f64]) -> Self {
        let (n, h) = (l.n, l.h);
        FnnParams {
            w_f: Array2::from_shape_vec((h, l.f_in()), p[l.w_f()..l.b_f()].to_vec()).expect("w_f"),
            b_f: Array1::from(p[l.b_f()..l.b_f() + h].to_vec()),
            w_x: Array2::from_shape_vec((n, h), p[l.w_x()..l.b_x()].to_vec()).expect("w_x"),
            b_x: Array1::from(p[l.b_x()..l.b_x() + n].to_vec()),
        }
    }
}

impl RnnParams {
    pub fn zeros(n: usize, h: usize) -> Self {
        RnnParams {
            w_x: Array2::zeros((n, h)),
            b_x: Array1::zeros(n),
            w_f: Array2::zeros((h, n + h)),
            b_f: Array1::zeros(h),
            w_g: Array2::zeros((h, n + h)),
            b_g: Array1::zeros(h),
            g_init: Array1::zeros(h),
        }
    }

    pub fn n(&self) -> usize {
        self.w_x.nrows()
    }

    pub fn h(&self) -> usize {
        self.w_x.ncols()
    }

    /// Independent of the number of delays.
    pub fn param_count(&self) -> usize {
        self.layout(1).param_count()
    }

    pub(crate) fn layout(&self, d: usize) -> Layout {
        Layout {
            arch: Arch::Rnn,
            n: self.n(),
            h: self.h(),
            d,
        }
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout(1).flat_len());
        v.extend(self.w_f.iter());
        v.extend(self.b_f.iter());
        v.extend(self.w_g.iter());
        v.extend(self.b_g.iter());
        v.extend(self.w_x.iter());
        v.extend(self.b_x.iter());
        v.extend(self.g_init.iter());
        v
    }

    pub(crate) fn from_flat(l: &Layout, p: &[f64]) -> Self {
        let (n, h) = (l.n, l.h);
        RnnParams {
            w_f: Array2::from_shape_vec((h, n + h), p[l.w_f()..l.b_f()].to_vec()).expect("w_f"),
            b_f: Array1::from(p[l.b_f()..l.b_f() + h].to_vec()),
            w_g: Array2::from_shape_vec((h, n + h), p[l.w_g()..l.b_g()].to_vec()).expect("w_g"),
            b_g: Array1::from(p[l.b_g()..l.b_g() + h].to_vec()),
            w_x: Array2::from_shape_vec((n, h), p[l.w_x()..l.b_x()].to_vec()).expect("w_x"),
            b_x: Array1::from(p[l.b_x()..l.b_x() + n].to_vec()),
            g_init: Array1::from(p[l.g_init()..l.g_init() + h].to_vec()),
        }
    }
}

/// Either network, with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Fnn(FnnParams),
    Rnn(RnnParams),
}

impl Model {
    pub fn arch(&self) -> Arch {
        match self {
            Model::Fnn(_) => Arch::Fnn,
            Model::Rnn(_) => Arch::Rnn,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Model::Fnn(p) => p.n(),
            Model::Rnn(p) => p.n(),
        }
    }

    pub fn h(&self) -> usize {
        match self {
            Model::Fnn(p) => p.h(),
            Model::Rnn(p) => p.h(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Model::Fnn(p) => p.param_count(),
            Model::Rnn(p) => p.param_count(),
        }
    }

    pub(crate) fn layout(&self, d: usize) -> Layout {
        match self {
            Model::Fnn(p) => p.layout(),
            Model::Rnn(p) => p.layout(d),
        }
    }

    pub(crate) fn to_flat(&self) -> Vec<f64> {
        match self {
            Model::Fnn(p) => p.to_flat(),
            Model::Rnn(p) => p.to_flat(),
        }
    }

    pub(crate) fn from_flat(l: &Layout, p: &[f64]) -> Self {
        match l.arch {
            Arch::Fnn => Model::Fnn(FnnParams::from_flat(l, p)),
            Arch::Rnn => Model::Rnn(RnnParams::from_flat(l, p)),
        }
    }

    fn check_input(&self, d: usize) -> Result<()> {
        if d == 0 {
            return Err(Error::SequenceLength {
                expected: 1,
                got: 0,
            });
        }
        if let Model::Fnn(p) = self {
            if p.d() != d {
                return Err(Error::SequenceLength {
                    expected: p.d(),
                    got: d,
                });
            }
        }
        Ok(())
    }

    /// Predictions for each row of `inputs` (`S × d·n`, most recent lag first).
    pub fn predict(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        let n = self.n();
        if !inputs.ncols().is_multiple_of(n) {
            return Err(Error::ShapeMismatch {
                expected: (inputs.nrows(), n * (inputs.ncols() / n + 1)),
                got: inputs.dim(),
            });
        }
        let d = inputs.ncols() / n;
        self.check_input(d)?;
        let l = self.layout(d);
        let p = self.to_flat();
        let mut s = Scratch::new(&l);
        let mut out = Array2::zeros((inputs.nrows(), n));
        for (row, mut o) in inputs.outer_iter().zip(out.outer_iter_mut()) {
            let row = row.to_vec();
            kernels::forward(&l, &p, &row, &mut s);
            o.assign(&ndarray::ArrayView1::from(s.output()));
        }
        Ok(out)
    }

    /// Gradient of the summed squared error over a batch, in the same shape
    /// as the model. The RNN's `g_init` entry is the gradient with respect to
    /// the initial hidden state.
    pub fn loss_and_gradient(
        &self,
        inputs: &Array2<f64>,
        targets: &Array2<f64>,
    ) -> Result<(f64, Model)> {
        let n = self.n();
        if targets.ncols() != n
            || targets.nrows() != inputs.nrows()
            || !inputs.ncols().is_multiple_of(n)
        {
            return Err(Error::ShapeMismatch {
                expected: (inputs.nrows(), n),
                got: targets.dim(),
            });
        }
        if inputs.nrows() == 0 {
            return Err(Error::InsufficientData("empty batch".into()));
        }
        let d = inputs.ncols() / n;
        self.check_input(d)?;
        let l = self.layout(d);
        let p = self.to_flat();
        let mut grad = vec![0.0; p.len()];
        let mut s = Scratch::new(&l);
        let mut total = 0.0;
        for (x, y) in inputs.outer_iter().zip(targets.outer_iter()) {
            let (x, y) = (x.to_vec(), y.to_vec());
            total += kernels::forward_backward(&l, &p, &x, &y, &mut grad, &mut s);
        }
        Ok((total, Model::from_flat(&l, &grad)))
    }
}

/// Worst disagreement between backprop and central finite differences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    /// Largest relative error over parameters whose absolute error exceeds
    /// `abs_floor`; 0 when every parameter is under the floor.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Flat index of the worst parameter.
    pub worst: usize,
    pub params: usize,
}

impl GradientCheck {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.max_rel_error < rel_tol
    }
}

/// Compares [`Model::loss_and_gradient`] with central differences of the
/// summed squared error, perturbing every parameter by `±step`.
pub fn gradient_check(
    model: &Model,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    step: f64,
    abs_floor: f64,
) -> Result<GradientCheck> {
    let (_, grad) = model.loss_and_gradient(inputs, targets)?;
    let d = inputs.ncols() / model.n();
    let l = model.layout(d);
    let g = grad.to_flat();
    let base = model.to_flat();
    let mut out = GradientCheck {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: 0,
        params: base.len(),
    };
    let mut q = base.clone();
    for i in 0..base.len() {
        let mut eval = |delta: f64| {
            q[i] = base[i] + delta;
            let m = Model::from_flat(&l, &q);
            loss(&m.predict(inputs)?, targets)
        };
        let fd = (eval(step)? - eval(-step)?) / (2.0 * step);
        q[i] = base[i];
        let diff = (fd - g[i]).abs();
        let rel = if diff <= abs_floor {
            0.0
        } else {
            diff / fd.abs().max(g[i].abs())
        };
        out.max_abs_error = out.max_abs_error.max(diff);
        if rel > out.max_rel_error {
            out.max_rel_error = rel;
            out.worst = i;
        }
    }
    Ok(out)
}

/// `W_x tanh(W_f v + b_f) + b_x`.
pub fn fnn_forward(params: &FnnParams, delay_vector: &[f64]) -> Result<Vec<f64>> {
    let l = params.layout();
    if delay_vector.len() != l.f_in() {
        return Err(Error::SequenceLength {
            expected: l.f_in(),
            got: delay_vector.len(),
        });
    }
    let mut s = Scratch::new(&l);
    kernels::forward(&l, &params.to_flat(), delay_vector, &mut s);
    Ok(s.output().to_vec())
}

/// Runs the RNN on `sequence = [x_{t-d}, ..., x_{t-1}]` (oldest first)
/// starting from `g_init`. Returns the prediction and the hidden states
/// `g_0 = g_init, ..., g_{d-1}`.
pub fn rnn_forward(
    params: &RnnParams,
    sequence: &[Vec<f64>],
    g_init: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (n, h) = (params.n(), params.h());
    if sequence.is_empty() {
        return Err(Error::SequenceLength {
            expected: 1,
            got: 0,
        });
    }
    if g_init.len() != h {
        return Err(Error::ShapeMismatch {
            expected: (h, 1),
            got: (g_init.len(), 1),
        });
    }
    let d = sequence.len();
    let mut window = Vec::with_capacity(d * n);
    for x in sequence.iter().rev() {
        if x.len() != n {
            return Err(Error::ShapeMismatch {
                expected: (n, 1),
                got: (x.len(), 1),
            });
        }
        window.extend_from_slice(x);
    }
    let mut p = params.clone();
    p.g_init = Array1::from(g_init.to_vec());
    let l = p.layout(d);
    let flat = p.to_flat();
    let mut s = Scratch::new(&l);
    kernels::forward(&l, &flat, &window, &mut s);
    let hidden = (0..d).map(|k| s.hidden(k).to_vec()).collect();
    Ok((s.output().to_vec(), hidden))
}
