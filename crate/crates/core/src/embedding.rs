//! Delay-vector datasets, chronological splits and the normalized RMSE.
//!
//! Delay vectors are stored most recent lag first: row `s` of `inputs` is
//! `(x_{s+d-1}, x_{s+d-2}, ..., x_s)` and the matching target is
//! `x_{s+d-1+horizon}`.

use std::io::{Read, Write};

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-component mean and standard deviation of an observed series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    /// Population statistics of each column of `series`.
    pub fn from_series(series: ArrayView2<'_, f64>) -> Result<Self> {
        if series.nrows() == 0 {
            return Err(Error::DegenerateSeries("empty series"));
        }
        let mean = series.mean_axis(Axis(0)).expect("non-empty").to_vec();
        let std: Vec<f64> = series.std_axis(Axis(0), 0.0).to_vec();
        if std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::DegenerateSeries("zero variance"));
        }
        Ok(NormalizationStats { mean, std })
    }

    /// The identity transform for `n` components.
    pub fn unit(n: usize) -> Self {
        NormalizationStats {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes a matrix whose columns cycle through the `n` components
    /// (so delay-vector inputs and targets both work).
    pub fn standardize(&self, m: &Array2<f64>) -> Array2<f64> {
        let n = self.dim();
        let mut out = m.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j % n]) / self.std[j % n];
            }
        }
        out
    }

    pub fn destandardize(&self, m: &Array2<f64>) -> Array2<f64> {
        let n = self.dim();
        let mut out = m.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.std[j % n] + self.mean[j % n];
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    Chronological,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub policy: SplitPolicy,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.75,
            val_frac: 0.25,
            policy: SplitPolicy::Chronological,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.train_frac)
            && (0.0..=1.0).contains(&self.val_frac)
            && (self.train_frac + self.val_frac - 1.0).abs() < 1e-9
            && self.train_frac > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "split fractions must be positive and sum to 1, got {} + {}",
                self.train_frac, self.val_frac
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayDataset {
    /// `S × (d·n)`, most recent lag first.
    pub inputs: Array2<f64>,
    /// `S × n`.
    pub targets: Array2<f64>,
    pub d: usize,
    pub n: usize,
    pub horizon: usize,
    pub norm: NormalizationStats,
    /// Index (in the source series) of the oldest lag of sample 0.
    pub offset: usize,
}

impl DelayDataset {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    /// Source-series index of the target of sample `s`.
    pub fn target_time(&self, s: usize) -> usize {
        self.offset + s + self.d - 1 + self.horizon
    }

    /// Source-series index of the oldest lag used by sample `s`.
    pub fn first_input_time(&self, s: usize) -> usize {
        self.offset + s
    }

    /// Samples `[start, end)`.
    pub fn rows(&self, start: usize, end: usize) -> DelayDataset {
        DelayDataset {
            inputs: self.inputs.slice(s![start..end, ..]).to_owned(),
            targets: self.targets.slice(s![start..end, ..]).to_owned(),
            d: self.d,
            n: self.n,
            horizon: self.horizon,
            norm: self.norm.clone(),
            offset: self.offset + start,
        }
    }

    /// Appends `other`, which must directly follow `self` in time.
    pub fn concat(&self, other: &DelayDataset) -> Result<DelayDataset> {
        if other.d != self.d || other.n != self.n || other.horizon != self.horizon {
            return Err(Error::InvalidArgument(
                "datasets have different shapes".into(),
            ));
        }
        if !other.is_empty() && other.offset != self.offset + self.len() {
            return Err(Error::InvalidArgument("datasets are not contiguous".into()));
        }
        let inputs = ndarray::concatenate(Axis(0), &[self.inputs.view(), other.inputs.view()])
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let targets = ndarray::concatenate(Axis(0), &[self.targets.view(), other.targets.view()])
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        Ok(DelayDataset {
            inputs,
            targets,
            d: self.d,
            n: self.n,
            horizon: self.horizon,
            norm: self.norm.clone(),
            offset: self.offset,
        })
    }

    /// Writes `lag_{k}_{dim}` columns (lag 1 is the most recent) followed by
    /// `target_{dim}`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = Vec::with_capacity((self.d + 1) * self.n);
        for k in 1..=self.d {
            for j in 0..self.n {
                header.push(format!("lag_{k}_{j}"));
            }
        }
        for j in 0..self.n {
            header.push(format!("target_{j}"));
        }
        out.write_record(&header).map_err(csv_err)?;
        for (inp, tgt) in self.inputs.outer_iter().zip(self.targets.outer_iter()) {
            let rec: Vec<String> = inp
                .iter()
                .chain(tgt.iter())
                .map(|v| format!("{v:.17e}"))
                .collect();
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a file written by [`Self::write_csv`]. The horizon, offset and
    /// normalization are not stored and must be supplied.
    pub fn read_csv<R: Read>(
        r: R,
        horizon: usize,
        offset: usize,
        norm: NormalizationStats,
    ) -> Result<DelayDataset> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers().map_err(csv_err)?.clone();
        let n = header.iter().filter(|h| h.starts_with("target_")).count();
        if n == 0 || header.len() % n != 0 || header.len() < 2 * n {
            return Err(Error::Parse("delay dataset header has no targets".into()));
        }
        let d = header.len() / n - 1;
        for (i, h) in header.iter().enumerate() {
            let want = if i < d * n {
                format!("lag_{}_{}", i / n + 1, i % n)
            } else {
                format!("target_{}", i - d * n)
            };
            if h != want {
                return Err(Error::Parse(format!(
                    "column {i}: expected {want}, got {h}"
                )));
            }
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("{field}: {e}")))?;
                if i < d * n {
                    inputs.push(v);
                } else {
                    targets.push(v);
                }
            }
        }
        let rows = targets.len() / n;
        Ok(DelayDataset {
            inputs: Array2::from_shape_vec((rows, d * n), inputs)
                .map_err(|e| Error::Parse(e.to_string()))?,
            targets: Array2::from_shape_vec((rows, n), targets)
                .map_err(|e| Error::Parse(e.to_string()))?,
            d,
            n,
            horizon,
            norm,
            offset,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Builds every delay vector of `series` (`T × n`) with `d` lags and the
/// observation `horizon` steps after the most recent lag. The normalization
/// is computed from the whole series passed in.
pub fn make_delay_dataset(
    series: ArrayView2<'_, f64>,
    d: usize,
    horizon: usize,
) -> Result<DelayDataset> {
    if d == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("d and horizon must be >= 1".into()));
    }
    let (t_len, n) = series.dim();
    if t_len < d + horizon {
        return Err(Error::TooShort {
            needed: d + horizon,
            got: t_len,
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "series contains non-finite values".into(),
        ));
    }
    let norm = match NormalizationStats::from_series(series) {
        Ok(norm) => norm,
        // A constant series is a valid (if useless) dataset.
        Err(Error::DegenerateSeries(_)) => NormalizationStats {
            mean: series.mean_axis(Axis(0)).expect("non-empty").to_vec(),
            std: vec![1.0; n],
        },
        Err(e) => return Err(e),
    };
    let samples = t_len - d - horizon + 1;
    let mut inputs = Array2::zeros((samples, d * n));
    let mut targets = Array2::zeros((samples, n));
    for s in 0..samples {
        for k in 0..d {
            let src = series.row(s + d - 1 - k);
            inputs.slice_mut(s![s, k * n..(k + 1) * n]).assign(&src);
        }
        targets.row_mut(s).assign(&series.row(s + d - 1 + horizon));
    }
    Ok(DelayDataset {
        inputs,
        targets,
        d,
        n,
        horizon,
        norm,
        offset: 0,
    })
}

/// Convenience wrapper for a scalar series.
pub fn make_scalar_dataset(series: &[f64], d: usize, horizon: usize) -> Result<DelayDataset> {
    let view = ArrayView2::from_shape((series.len(), 1), series).expect("column");
    make_delay_dataset(view, d, horizon)
}

/// Chronological split: the first `ceil(train_frac · S)` samples train.
/// With `train_frac = 1` the validation set is empty.
pub fn split(dataset: &DelayDataset, spec: &SplitSpec) -> Result<(DelayDataset, DelayDataset)> {
    spec.validate()?;
    let s_len = dataset.len();
    if s_len < 4 {
        return Err(Error::TooShort {
            needed: 4,
            got: s_len,
        });
    }
    // Guard against 0.7 * 10 = 7.000000000000001.
    let n_train = ((spec.train_frac * s_len as f64) - 1e-9).ceil().max(1.0) as usize;
    let n_train = n_train.min(s_len);
    Ok((dataset.rows(0, n_train), dataset.rows(n_train, s_len)))
}

/// Root-mean over components of `RMSE_j / std_j`.
pub fn nrmse(
    predictions: &Array2<f64>,
    targets: &Array2<f64>,
    norm: &NormalizationStats,
) -> Result<f64> {
    if predictions.dim() != targets.dim() || targets.ncols() != norm.dim() {
        return Err(Error::ShapeMismatch {
            expected: targets.dim(),
            got: predictions.dim(),
        });
    }
    if targets.nrows() == 0 {
        return Err(Error::InsufficientData("nrmse of an empty set".into()));
    }
    let s_len = targets.nrows() as f64;
    let diff = predictions - targets;
    let per_component: Array1<f64> = diff.mapv(|v| v * v).sum_axis(Axis(0)) / s_len;
    let total = per_component
        .iter()
        .zip(&norm.std)
        .map(|(mse, sd)| mse / (sd * sd))
        .sum::<f64>()
        / norm.dim() as f64;
    Ok(total.sqrt())
}
