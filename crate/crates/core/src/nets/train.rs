use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::kernels::{self, Layout, Scratch};
use super::{Arch, GInitPolicy, Model};
use crate::embedding::{DelayDataset, NormalizationStats};
use crate::error::{Error, Result};

const G_INIT_STD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub rms_epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub g_init_policy: GInitPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            rms_decay: 0.9,
            rms_epsilon: 1e-8,
            max_epochs: 20_000,
            patience: 200,
            seed: 0,
            g_init_policy: GInitPolicy::RandomNormal,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rms_decay > 0.0 && self.rms_decay < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rms_decay must be in (0, 1), got {}",
                self.rms_decay
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidArgument("patience must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.rms_epsilon > 0.0) {
            return Err(Error::InvalidArgument(
                "learning_rate and rms_epsilon must be positive".into(),
            ));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch losses (summed squared error in standardized units). Entry
/// `e - 1` belongs to epoch `e`: the training loss whose gradient was used in
/// that epoch's update, and the validation loss after it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }

    /// Validation loss of the returned parameters, if there was a
    /// validation set.
    pub fn best_val_loss(&self) -> Option<f64> {
        self.val_loss.get(self.best_epoch.checked_sub(1)?).copied()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on a strictly decreasing best loss.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            StopDecision::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// `s ← ρ s + (1-ρ) g²; θ ← θ - lr g / (√s + ε)`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut [f64], config: &TrainConfig) {
    let rho = config.rms_decay;
    for ((p, g), s) in params.iter_mut().zip(grads).zip(state.iter_mut()) {
        *s = rho * *s + (1.0 - rho) * g * g;
        *p -= config.learning_rate * g / (s.sqrt() + config.rms_epsilon);
    }
}

/// Sum of squared errors over all samples and components.
pub fn loss(predictions: &Array2<f64>, targets: &Array2<f64>) -> Result<f64> {
    if predictions.dim() != targets.dim() {
        return Err(Error::ShapeMismatch {
            expected: targets.dim(),
            got: predictions.dim(),
        });
    }
    Ok(predictions
        .iter()
        .zip(targets.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum())
}

/// A trained network together with the normalization it was trained under.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub d: usize,
    pub norm: NormalizationStats,
    pub history: TrainHistory,
}

/// Row-major, standardized copy of a dataset.
struct Standardized {
    inputs: Vec<f64>,
    targets: Vec<f64>,
    width: usize,
    n: usize,
}

impl Standardized {
    fn new(ds: &DelayDataset, norm: &NormalizationStats) -> Self {
        let inputs = norm.standardize(&ds.inputs);
        let targets = norm.standardize(&ds.targets);
        Standardized {
            inputs: inputs.iter().copied().collect(),
            targets: targets.iter().copied().collect(),
            width: ds.inputs.ncols(),
            n: ds.n,
        }
    }

    fn len(&self) -> usize {
        self.targets.len() / self.n
    }

    fn sample(&self, s: usize) -> (&[f64], &[f64]) {
        (
            &self.inputs[s * self.width..(s + 1) * self.width],
            &self.targets[s * self.n..(s + 1) * self.n],
        )
    }

    fn sse(&self, l: &Layout, p: &[f64], scratch: &mut Scratch) -> f64 {
        let mut total = 0.0;
        for s in 0..self.len() {
            let (x, y) = self.sample(s);
            kernels::forward(l, p, x, scratch);
            total += scratch
                .output()
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
        total
    }
}

fn init_params(l: &Layout, config: &TrainConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut p = vec![0.0; l.flat_len()];
    let mut fill = |range: std::ops::Range<usize>, fan_in: usize, rng: &mut ChaCha8Rng| {
        let dist = Normal::new(0.0, 1.0 / (fan_in as f64).sqrt()).expect("positive std");
        for v in &mut p[range] {
            *v = dist.sample(rng);
        }
    };
    fill(l.w_f()..l.b_f(), l.f_in(), &mut rng);
    if l.arch == Arch::Rnn {
        fill(l.w_g()..l.b_g(), l.n + l.h, &mut rng);
    }
    fill(l.w_x()..l.b_x(), l.h, &mut rng);
    if l.arch == Arch::Rnn && config.g_init_policy != GInitPolicy::Zero {
        let dist = Normal::new(0.0, G_INIT_STD).expect("positive std");
        for v in &mut p[l.g_init()..l.g_init() + l.h] {
            *v = dist.sample(&mut rng);
        }
    }
    p
}

/// Full-batch RMSprop on the summed squared error. The data are standardized
/// with `train_set.norm`. With an empty validation set training runs for
/// `max_epochs` and keeps the final parameters.
pub fn train(
    arch: Arch,
    h: usize,
    train_set: &DelayDataset,
    val_set: &DelayDataset,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate()?;
    if h == 0 {
        return Err(Error::InvalidArgument("hidden size must be >= 1".into()));
    }
    if train_set.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if !val_set.is_empty() && (val_set.d != train_set.d || val_set.n != train_set.n) {
        return Err(Error::InvalidArgument(
            "train and validation shapes differ".into(),
        ));
    }
    let norm = &train_set.norm;
    let l = Layout {
        arch,
        n: train_set.n,
        h,
        d: train_set.d,
    };
    let tr = Standardized::new(train_set, norm);
    let va = Standardized::new(val_set, norm);
    let learn_g = arch == Arch::Rnn && config.g_init_policy == GInitPolicy::Trainable;

    let mut p = init_params(&l, config);
    let mut best = p.clone();
    let mut grad = vec![0.0; p.len()];
    let mut state = vec![0.0; p.len()];
    let mut scratch = Scratch::new(&l);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut history = TrainHistory::default();

    for epoch in 1..=config.max_epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut train_loss = 0.0;
        for s in 0..tr.len() {
            let (x, y) = tr.sample(s);
            train_loss += kernels::forward_backward(&l, &p, x, y, &mut grad, &mut scratch);
        }
        if !train_loss.is_finite() {
            return Err(Error::DivergedTraining { epoch });
        }
        if arch == Arch::Rnn && !learn_g {
            grad[l.g_init()..].iter_mut().for_each(|g| *g = 0.0);
        }
        rmsprop_step(&mut p, &grad, &mut state, config);
        history.train_loss.push(train_loss);

        if va.len() == 0 {
            continue;
        }
        let val_loss = va.sse(&l, &p, &mut scratch);
        if !val_loss.is_finite() {
            return Err(Error::DivergedTraining { epoch });
        }
        history.val_loss.push(val_loss);
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best.copy_from_slice(&p),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    if va.len() == 0 {
        best = p;
        history.best_epoch = history.train_loss.len();
    } else {
        history.best_epoch = stopper.best_epoch();
    }
    Ok(TrainedModel {
        model: Model::from_flat(&l, &best),
        d: train_set.d,
        norm: norm.clone(),
        history,
    })
}

impl TrainedModel {
    pub fn arch(&self) -> Arch {
        self.model.arch()
    }

    /// One-step predictions in data units for raw delay vectors.
    pub fn predict(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        let z = self.norm.standardize(inputs);
        Ok(self.norm.destandardize(&self.model.predict(&z)?))
    }

    /// Iterates the one-step map `k` times from a raw, most-recent-first
    /// window of `d` observations. Returns the `k` predictions in order.
    pub fn forecast(&self, window: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.model.n();
        let w = Array2::from_shape_vec((1, window.len()), window.to_vec())
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let z = self.norm.standardize(&w);
        let out = iterated_forecast(&self.model, z.as_slice().expect("contiguous"), k)?;
        Ok(out
            .into_iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .map(|(j, x)| x * self.norm.std[j % n] + self.norm.mean[j % n])
                    .collect()
            })
            .collect())
    }

    /// The `k`-step iterated forecast from every row of `inputs` (raw units).
    pub fn forecast_rows(&self, inputs: &Array2<f64>, k: usize) -> Result<Array2<f64>> {
        if k == 0 {
            return Err(Error::InvalidArgument("horizon must be >= 1".into()));
        }
        let n = self.model.n();
        let z = self.norm.standardize(inputs);
        let l = self.model.layout(self.d);
        let p = self.model.to_flat();
        let mut s = Scratch::new(&l);
        let mut out = Array2::zeros((inputs.nrows(), n));
        let mut window = vec![0.0; inputs.ncols()];
        for (row, mut o) in z.outer_iter().zip(out.outer_iter_mut()) {
            window.iter_mut().zip(row.iter()).for_each(|(w, v)| *w = *v);
            for step in 0..k {
                kernels::forward(&l, &p, &window, &mut s);
                if step + 1 < k {
                    let last = window.len() - n;
                    window.copy_within(0..last, n);
                    window[..n].copy_from_slice(s.output());
                }
            }
            for j in 0..n {
                o[j] = s.output()[j] * self.norm.std[j] + self.norm.mean[j];
            }
        }
        Ok(out)
    }
}

/// Feeds each prediction back as the newest lag and drops the oldest.
/// `window` is most recent first, in the model's own units; the RNN restarts
/// from its stored `g_init` at every step.
pub fn iterated_forecast(model: &Model, window: &[f64], k: usize) -> Result<Vec<Vec<f64>>> {
    if k == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    let n = model.n();
    if window.is_empty() || !window.len().is_multiple_of(n) {
        return Err(Error::SequenceLength {
            expected: n,
            got: window.len(),
        });
    }
    let d = window.len() / n;
    if let Model::Fnn(p) = model {
        if p.d() != d {
            return Err(Error::SequenceLength {
                expected: p.d() * n,
                got: window.len(),
            });
        }
    }
    let l = model.layout(d);
    let p = model.to_flat();
    let mut s = Scratch::new(&l);
    let mut w = window.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        kernels::forward(&l, &p, &w, &mut s);
        let pred = s.output().to_vec();
        let last = w.len() - n;
        w.copy_within(0..last, n);
        w[..n].copy_from_slice(&pred);
        out.push(pred);
    }
    Ok(out)
}
