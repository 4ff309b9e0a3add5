use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Arch, FnnParams, Model, RnnParams};
use crate::error::{Error, Result};

/// A row-major matrix; vectors are stored as a single column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixEntry {
    fn from_matrix(m: &Array2<f64>) -> Self {
        MatrixEntry {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().copied().collect(),
        }
    }

    fn from_vector(v: &Array1<f64>) -> Self {
        MatrixEntry {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    fn to_matrix(&self, key: &str) -> Result<Array2<f64>> {
        Array2::from_shape_vec((self.rows, self.cols), self.data.clone())
            .map_err(|e| Error::Parse(format!("{key}: {e}")))
    }

    fn to_vector(&self, key: &str) -> Result<Array1<f64>> {
        if self.cols != 1 || self.data.len() != self.rows {
            return Err(Error::Parse(format!("{key}: expected a column vector")));
        }
        Ok(Array1::from(self.data.clone()))
    }
}

/// Named parameter tensors (`W_x, b_x, W_f, b_f` and, for the RNN,
/// `W_g, b_g, g_init`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub arch: Arch,
    pub tensors: BTreeMap<String, MatrixEntry>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let mut t = BTreeMap::new();
        match model {
            Model::Fnn(p) => {
                t.insert("W_f".into(), MatrixEntry::from_matrix(&p.w_f));
                t.insert("b_f".into(), MatrixEntry::from_vector(&p.b_f));
                t.insert("W_x".into(), MatrixEntry::from_matrix(&p.w_x));
                t.insert("b_x".into(), MatrixEntry::from_vector(&p.b_x));
            }
            Model::Rnn(p) => {
                t.insert("W_f".into(), MatrixEntry::from_matrix(&p.w_f));
                t.insert("b_f".into(), MatrixEntry::from_vector(&p.b_f));
                t.insert("W_g".into(), MatrixEntry::from_matrix(&p.w_g));
                t.insert("b_g".into(), MatrixEntry::from_vector(&p.b_g));
                t.insert("W_x".into(), MatrixEntry::from_matrix(&p.w_x));
                t.insert("b_x".into(), MatrixEntry::from_vector(&p.b_x));
                t.insert("g_init".into(), MatrixEntry::from_vector(&p.g_init));
            }
        }
        Checkpoint {
            arch: model.arch(),
            tensors: t,
        }
    }

    fn get(&self, key: &str) -> Result<&MatrixEntry> {
        self.tensors
            .get(key)
            .ok_or_else(|| Error::Parse(format!("checkpoint is missing {key}")))
    }

    pub fn to_model(&self) -> Result<Model> {
        let model = match self.arch {
            Arch::Fnn => Model::Fnn(FnnParams {
                w_f: self.get("W_f")?.to_matrix("W_f")?,
                b_f: self.get("b_f")?.to_vector("b_f")?,
                w_x: self.get("W_x")?.to_matrix("W_x")?,
                b_x: self.get("b_x")?.to_vector("b_x")?,
            }),
            Arch::Rnn => Model::Rnn(RnnParams {
                w_f: self.get("W_f")?.to_matrix("W_f")?,
                b_f: self.get("b_f")?.to_vector("b_f")?,
                w_g: self.get("W_g")?.to_matrix("W_g")?,
                b_g: self.get("b_g")?.to_vector("b_g")?,
                w_x: self.get("W_x")?.to_matrix("W_x")?,
                b_x: self.get("b_x")?.to_vector("b_x")?,
                g_init: self.get("g_init")?.to_vector("g_init")?,
            }),
        };
        check_shapes(&model)?;
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn check_shapes(model: &Model) -> Result<()> {
    let bad = |what: &str| {
        Err(Error::Parse(format!(
            "inconsistent checkpoint shapes: {what}"
        )))
    };
    match model {
        Model::Fnn(p) => {
            let (n, h) = (p.w_x.nrows(), p.w_x.ncols());
            if n == 0 || p.w_f.nrows() != h || p.b_f.len() != h || p.b_x.len() != n {
                return bad("fnn");
            }
            if p.w_f.ncols() == 0 || p.w_f.ncols() % n != 0 {
                return bad("W_f columns");
            }
        }
        Model::Rnn(p) => {
            let (n, h) = (p.w_x.nrows(), p.w_x.ncols());
            let sq = (h, n + h);
            if n == 0
                || p.w_f.dim() != sq
                || p.w_g.dim() != sq
                || p.b_f.len() != h
                || p.b_g.len() != h
                || p.b_x.len() != n
                || p.g_init.len() != h
            {
                return bad("rnn");
            }
        }
    }
    Ok(())
}
