use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FlowMap, StateVector, SystemSpec};
use crate::error::{Error, Result};

/// A sampled orbit: row `t` is the full state at time `t * sample_dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Array2<f64>,
    pub sample_dt: f64,
    pub system: SystemSpec,
    pub seed: u64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn state_dim(&self) -> usize {
        self.states.ncols()
    }

    pub fn state(&self, t: usize) -> ArrayView1<'_, f64> {
        self.states.row(t)
    }

    /// The first observed coordinate as a plain series.
    pub fn observed_series(&self) -> Array1<f64> {
        self.states.column(self.system.observed[0]).to_owned()
    }

    /// The observed block as a `T × n` matrix.
    pub fn observed_block(&self) -> Array2<f64> {
        self.states.select(Axis(1), &self.system.observed)
    }

    /// Rows `[start, end)` as a new trajectory.
    pub fn slice(&self, start: usize, end: usize) -> Trajectory {
        Trajectory {
            states: self.states.slice(ndarray::s![start..end, ..]).to_owned(),
            sample_dt: self.sample_dt,
            system: self.system.clone(),
            seed: self.seed,
        }
    }

    /// Writes `t,z0,z1,...` with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.state_dim();
        let mut header = String::from("t");
        for i in 0..m {
            header.push_str(&format!(",z{i}"));
        }
        writeln!(w, "{header}")?;
        let mut line = String::new();
        for (t, row) in self.states.outer_iter().enumerate() {
            line.clear();
            line.push_str(&format!("{:.16e}", t as f64 * self.sample_dt));
            for v in row.iter() {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads a file written by [`Self::write_csv`]. The spec and seed are not
    /// stored in the CSV and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, system: SystemSpec, seed: u64) -> Result<Trajectory> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trajectory file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") {
            return Err(Error::Parse(format!("bad header: {header}")));
        }
        let m = cols.len() - 1;
        for (i, c) in cols[1..].iter().enumerate() {
            if *c != format!("z{i}") {
                return Err(Error::Parse(format!("bad column name {c}")));
            }
        }
        let mut data = Vec::new();
        let mut times = Vec::new();
        for (ln, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
            if vals.len() != m + 1 {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, got {}",
                    ln + 2,
                    m + 1,
                    vals.len()
                )));
            }
            times.push(vals[0]);
            data.extend_from_slice(&vals[1..]);
        }
        let rows = times.len();
        if rows == 0 {
            return Err(Error::Parse("trajectory has no rows".into()));
        }
        let sample_dt = if rows > 1 {
            times[1] - times[0]
        } else {
            system.sample_dt
        };
        let states =
            Array2::from_shape_vec((rows, m), data).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Trajectory {
            states,
            sample_dt,
            system,
            seed,
        })
    }
}

/// Draws an initial condition from `seed`, runs `n_transient` samples, and
/// returns the following `n_keep` samples (the first of which is the state
/// reached after the transient).
pub fn simulate(
    spec: &SystemSpec,
    seed: u64,
    n_keep: usize,
    n_transient: usize,
) -> Result<Trajectory> {
    spec.validate()?;
    if n_keep == 0 {
        return Err(Error::InvalidArgument("n_keep must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let StateVector(mut z) = spec.system.initial_condition(&mut rng);
    let m = z.len();
    for step in 0..n_transient {
        spec.advance(&mut z)
            .map_err(|_| Error::Diverged { sample: step + 1 })?;
    }
    let mut data = Vec::with_capacity(n_keep * m);
    data.extend_from_slice(&z);
    for step in 1..n_keep {
        spec.advance(&mut z).map_err(|_| Error::Diverged {
            sample: n_transient + step,
        })?;
        data.extend_from_slice(&z);
    }
    Ok(Trajectory {
        states: Array2::from_shape_vec((n_keep, m), data).expect("shape"),
        sample_dt: spec.sample_dt,
        system: spec.clone(),
        seed,
    })
}
