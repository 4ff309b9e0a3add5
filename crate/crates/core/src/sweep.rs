//! Experiment grid: systems × training sizes × delays × hidden sizes ×
//! replicates × horizons, with baselines and validation-based selection of
//! the hidden size.
//!
//! One replicate of one cell simulates `transient + 2N` samples, trains on
//! the first `N` observations (75/25 chronological train/validation split)
//! and scores iterated forecasts on the next `N` observations. Test windows
//! for the earliest targets reach back into the training tail, so every
//! horizon is scored on exactly `N` targets.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, SystemSpec};
use crate::embedding::{make_delay_dataset, nrmse, split, NormalizationStats, SplitSpec};
use crate::error::{Error, Result};
use crate::nets::{train, Arch, TrainConfig, TrainedModel};

/// Offset added to a replicate's seed when it is retried after divergence.
pub const RESEED_OFFSET: u64 = 1 << 32;

/// Decorrelates weight initialization from the trajectory's initial state.
const INIT_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    /// Lengths of the training series, in observations.
    pub train_sizes: Vec<usize>,
    pub delays: Vec<usize>,
    /// Fixed hidden sizes, or the candidate range when `select_hidden`.
    pub hidden_sizes: Vec<usize>,
    pub select_hidden: bool,
    pub replicates: usize,
    pub horizons: Vec<usize>,
    pub base_seed: u64,
    pub architectures: Vec<Arch>,
    pub transient: usize,
    pub split: SplitSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemSpec::lotka_volterra(),
            train_sizes: vec![50, 100],
            delays: (1..=8).collect(),
            hidden_sizes: vec![2, 5, 10],
            select_hidden: false,
            replicates: 20,
            horizons: vec![1, 2, 3],
            base_seed: 0,
            architectures: vec![Arch::Fnn, Arch::Rnn],
            transient: 1000,
            split: SplitSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.split.validate()?;
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if self.replicates == 0 {
            return bad("replicates must be >= 1");
        }
        if self.train_sizes.is_empty()
            || self.delays.is_empty()
            || self.hidden_sizes.is_empty()
            || self.horizons.is_empty()
            || self.architectures.is_empty()
        {
            return bad("every grid axis needs at least one value");
        }
        if self.delays.contains(&0) || self.hidden_sizes.contains(&0) || self.horizons.contains(&0)
        {
            return bad("delays, hidden sizes and horizons must be >= 1");
        }
        let max_d = *self.delays.iter().max().expect("non-empty");
        let max_k = *self.horizons.iter().max().expect("non-empty");
        for &n in &self.train_sizes {
            // Four samples to split, and test windows that fit in 2N.
            if n < max_d + 4 || n < max_d + max_k {
                return Err(Error::TooShort {
                    needed: (max_d + 4).max(max_d + max_k),
                    got: n,
                });
            }
        }
        Ok(())
    }

    /// Seed of replicate `r`.
    pub fn seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_add(replicate as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Succeeded after one re-seed.
    Reseeded,
    /// Diverged twice; no result.
    Missing,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Reseeded => "reseeded",
            RowStatus::Missing => "missing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub system: String,
    pub arch: Arch,
    pub train_size: usize,
    pub d: usize,
    pub h: usize,
    pub horizon: usize,
    pub replicate: usize,
    /// The seed actually used (after any re-seed).
    pub seed: u64,
    pub nrmse: f64,
    pub best_epoch: usize,
    /// Chosen hidden size for selection runs; `None` for fixed-size runs.
    pub selected_h: Option<usize>,
    pub status: RowStatus,
}

impl SweepRow {
    pub fn is_selected(&self) -> bool {
        self.selected_h.is_none_or(|sel| sel == self.h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub system: String,
    pub train_size: usize,
    pub horizon: usize,
    pub replicate: usize,
    pub seed: u64,
    pub mean_nrmse: f64,
    pub prev_nrmse: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Rows come from hidden-size selection runs.
    pub select_hidden: bool,
    pub rows: Vec<SweepRow>,
    pub baselines: Vec<BaselineRow>,
}

pub const RESULTS_CSV_HEADER: &str =
    "system,arch,train_size,d,h,horizon,replicate,seed,nrmse,best_epoch,selected_h,status";
pub const BASELINES_CSV_HEADER: &str =
    "system,train_size,horizon,replicate,seed,mean_nrmse,prev_nrmse";
pub const SUMMARY_CSV_HEADER: &str =
    "system,arch,train_size,d,h,horizon,replicates,missing,mean_nrmse,stderr,single_replicate,mean_selected_h";

impl SweepResult {
    pub fn write_results_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{RESULTS_CSV_HEADER}")?;
        for r in &self.rows {
            let (nrmse, epoch) = match r.status {
                RowStatus::Missing => (String::new(), String::new()),
                _ => (format!("{:.10e}", r.nrmse), r.best_epoch.to_string()),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.system,
                r.arch.name(),
                r.train_size,
                r.d,
                r.h,
                r.horizon,
                r.replicate,
                r.seed,
                nrmse,
                epoch,
                r.selected_h.map(|h| h.to_string()).unwrap_or_default(),
                r.status.as_str()
            )?;
        }
        Ok(())
    }

    pub fn write_baselines_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{BASELINES_CSV_HEADER}")?;
        for b in &self.baselines {
            writeln!(
                w,
                "{},{},{},{},{},{:.10e},{:.10e}",
                b.system, b.train_size, b.horizon, b.replicate, b.seed, b.mean_nrmse, b.prev_nrmse
            )?;
        }
        Ok(())
    }
}

/// Data of one replicate: the training observations and the full
/// `2N`-sample observed series (test targets are the second half).
#[derive(Clone, Debug)]
pub struct ReplicateData {
    pub series: Array2<f64>,
    pub train_size: usize,
    pub norm: NormalizationStats,
}

impl ReplicateData {
    pub fn simulate(
        spec: &SystemSpec,
        train_size: usize,
        transient: usize,
        seed: u64,
    ) -> Result<Self> {
        let traj = simulate(spec, seed, 2 * train_size, transient)?;
        let series = traj.observed_block();
        let norm = NormalizationStats::from_series(series.slice(s![..train_size, ..]))?;
        Ok(ReplicateData {
            series,
            train_size,
            norm,
        })
    }

    pub fn train_series(&self) -> ArrayView2<'_, f64> {
        self.series.slice(s![..self.train_size, ..])
    }

    pub fn test_series(&self) -> ArrayView2<'_, f64> {
        self.series.slice(s![self.train_size.., ..])
    }

    /// Test inputs and targets at `horizon`: every target in the second
    /// half, with windows allowed to start inside the training half.
    pub fn test_set(&self, d: usize, horizon: usize) -> Result<(Array2<f64>, Array2<f64>)> {
        let ds = make_delay_dataset(self.series.view(), d, horizon)?;
        // target_time(s) = s + d - 1 + horizon >= N
        let first = (self.train_size + 1)
            .checked_sub(d + horizon)
            .ok_or(Error::TooShort {
                needed: d + horizon,
                got: self.train_size,
            })?;
        Ok((
            ds.inputs.slice(s![first.., ..]).to_owned(),
            ds.targets.slice(s![first.., ..]).to_owned(),
        ))
    }
}

/// Per-horizon outcome of one trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct CellOutcome {
    pub h: usize,
    pub nrmse: Vec<f64>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Trains on the replicate's training half (one-step targets, chronological
/// train/validation split, training-series normalization).
pub fn train_replicate(
    data: &ReplicateData,
    arch: Arch,
    d: usize,
    h: usize,
    split_spec: &SplitSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainedModel> {
    let mut ds = make_delay_dataset(data.train_series(), d, 1)?;
    ds.norm = data.norm.clone();
    let (tr, va) = split(&ds, split_spec)?;
    let config = TrainConfig {
        seed: seed ^ INIT_SEED_SALT,
        ..config.clone()
    };
    train(arch, h, &tr, &va, &config)
}

/// Test nrmse of `model` at each horizon.
pub fn score_replicate(
    model: &TrainedModel,
    data: &ReplicateData,
    horizons: &[usize],
) -> Result<Vec<f64>> {
    horizons
        .iter()
        .map(|&k| {
            let (inputs, targets) = data.test_set(model.d, k)?;
            let pred = model.forecast_rows(&inputs, k)?;
            if pred.iter().any(|v| !v.is_finite()) {
                return Err(Error::DivergedTraining { epoch: 0 });
            }
            nrmse(&pred, &targets, &data.norm)
        })
        .collect()
}

/// Trains one model on a replicate and scores it at each horizon.
#[allow(clippy::too_many_arguments)]
pub fn run_cell_on(
    data: &ReplicateData,
    arch: Arch,
    d: usize,
    h: usize,
    horizons: &[usize],
    split_spec: &SplitSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<CellOutcome> {
    let model = train_replicate(data, arch, d, h, split_spec, config, seed)?;
    Ok(CellOutcome {
        h,
        nrmse: score_replicate(&model, data, horizons)?,
        best_epoch: model.history.best_epoch,
        best_val_loss: model.history.best_val_loss().unwrap_or(f64::NAN),
    })
}

/// Simulates the replicate for `seed` and runs one cell at horizons 1..=3.
pub fn run_cell(
    system: &SystemSpec,
    arch: Arch,
    train_size: usize,
    d: usize,
    h: usize,
    seed: u64,
    config: &TrainConfig,
) -> Result<CellOutcome> {
    let data = ReplicateData::simulate(system, train_size, 1000, seed)?;
    run_cell_on(
        &data,
        arch,
        d,
        h,
        &[1, 2, 3],
        &SplitSpec::default(),
        config,
        seed,
    )
}

/// Trains one model per candidate hidden size and keeps the one with the
/// lowest validation loss (ties go to the smaller size). Test data are only
/// touched after the choice. Returns the chosen outcome and all outcomes.
#[allow(clippy::too_many_arguments)]
pub fn select_hidden_on(
    data: &ReplicateData,
    arch: Arch,
    d: usize,
    h_range: &[usize],
    horizons: &[usize],
    split_spec: &SplitSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<(CellOutcome, Vec<CellOutcome>)> {
    if h_range.is_empty() {
        return Err(Error::InvalidArgument("empty hidden-size range".into()));
    }
    let mut models = Vec::with_capacity(h_range.len());
    for &h in h_range {
        models.push((
            h,
            train_replicate(data, arch, d, h, split_spec, config, seed)?,
        ));
    }
    let chosen = choose_by_validation(
        models
            .iter()
            .map(|(h, m)| (*h, m.history.best_val_loss().unwrap_or(f64::INFINITY))),
    );
    let mut all = Vec::with_capacity(models.len());
    let mut best = None;
    for (h, m) in &models {
        let out = CellOutcome {
            h: *h,
            nrmse: score_replicate(m, data, horizons)?,
            best_epoch: m.history.best_epoch,
            best_val_loss: m.history.best_val_loss().unwrap_or(f64::NAN),
        };
        if *h == chosen && best.is_none() {
            best = Some(out.clone());
        }
        all.push(out);
    }
    Ok((best.expect("chosen h is in range"), all))
}

/// The hidden size with the lowest validation loss, smallest on ties.
pub fn choose_by_validation(candidates: impl IntoIterator<Item = (usize, f64)>) -> usize {
    candidates
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(h, _)| h)
        .expect("non-empty candidates")
}

/// Simulates the replicate for `seed` and selects the hidden size.
pub fn select_hidden(
    system: &SystemSpec,
    arch: Arch,
    train_size: usize,
    d: usize,
    seed: u64,
    h_range: &[usize],
    config: &TrainConfig,
) -> Result<(usize, f64)> {
    let data = ReplicateData::simulate(system, train_size, 1000, seed)?;
    let (best, _) = select_hidden_on(
        &data,
        arch,
        d,
        h_range,
        &[1],
        &SplitSpec::default(),
        config,
        seed,
    )?;
    Ok((best.h, best.nrmse[0]))
}

/// Mean-predictor and previous-value nrmse on `test`, normalized by `norm`.
/// The mean predictor uses `norm.mean`; the previous-value predictor
/// forecasts `x_t` by `x_{t-horizon}`. Both are scored on the same targets.
pub fn baselines_at(
    test: ArrayView2<'_, f64>,
    norm: &NormalizationStats,
    horizon: usize,
) -> Result<(f64, f64)> {
    let (t_len, n) = test.dim();
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be >= 1".into()));
    }
    if t_len < horizon + 1 {
        return Err(Error::TooShort {
            needed: horizon + 1,
            got: t_len,
        });
    }
    if norm.dim() != n || norm.std.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateSeries("normalization has zero spread"));
    }
    if (0..n).any(|j| test.column(j).iter().all(|v| *v == test[[0, j]])) {
        return Err(Error::DegenerateSeries("constant test series"));
    }
    let targets = test.slice(s![horizon.., ..]).to_owned();
    let prev = test.slice(s![..t_len - horizon, ..]).to_owned();
    let mean = Array2::from_shape_fn(targets.dim(), |(_, j)| norm.mean[j]);
    Ok((nrmse(&mean, &targets, norm)?, nrmse(&prev, &targets, norm)?))
}

/// One-step baselines.
pub fn baselines(test: ArrayView2<'_, f64>, norm: &NormalizationStats) -> Result<(f64, f64)> {
    baselines_at(test, norm, 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Job {
    train_size: usize,
    d: usize,
    arch: Arch,
    replicate: usize,
}

fn run_job(
    cfg: &ExperimentConfig,
    train_config: &TrainConfig,
    job: Job,
    seed: u64,
) -> Result<Vec<CellOutcome>> {
    let data = ReplicateData::simulate(&cfg.system, job.train_size, cfg.transient, seed)?;
    if cfg.select_hidden {
        let (best, all) = select_hidden_on(
            &data,
            job.arch,
            job.d,
            &cfg.hidden_sizes,
            &cfg.horizons,
            &cfg.split,
            train_config,
            seed,
        )?;
        // Encode the choice by putting it first.
        let mut out = vec![best];
        out.extend(all);
        Ok(out)
    } else {
        cfg.hidden_sizes
            .iter()
            .map(|&h| {
                run_cell_on(
                    &data,
                    job.arch,
                    job.d,
                    h,
                    &cfg.horizons,
                    &cfg.split,
                    train_config,
                    seed,
                )
            })
            .collect()
    }
}

/// Runs the whole grid on the rayon pool. Results are ordered by
/// (train size, d, arch, replicate, h, horizon) independent of scheduling.
/// A replicate that diverges is re-seeded once, then recorded as missing.
pub fn run_sweep(cfg: &ExperimentConfig, train_config: &TrainConfig) -> Result<SweepResult> {
    run_sweep_with_progress(cfg, train_config, |_| {})
}

pub fn run_sweep_with_progress(
    cfg: &ExperimentConfig,
    train_config: &TrainConfig,
    progress: impl Fn(&str) + Sync,
) -> Result<SweepResult> {
    cfg.validate()?;
    train_config.validate()?;
    let mut jobs = Vec::new();
    for &train_size in &cfg.train_sizes {
        for &d in &cfg.delays {
            for &arch in &cfg.architectures {
                for replicate in 0..cfg.replicates {
                    jobs.push(Job {
                        train_size,
                        d,
                        arch,
                        replicate,
                    });
                }
            }
        }
    }
    let name = cfg.system.name().to_string();
    let per_job: Vec<Result<Vec<SweepRow>>> = jobs
        .par_iter()
        .map(|&job| {
            let seed = cfg.seed(job.replicate);
            let (outcome, used, status) = match run_job(cfg, train_config, job, seed) {
                Ok(o) => (Some(o), seed, RowStatus::Ok),
                Err(e) if e.is_divergence() => {
                    progress(&format!(
                        "{name} {} N={} d={} r={}: {e}; re-seeding",
                        job.arch.name(),
                        job.train_size,
                        job.d,
                        job.replicate
                    ));
                    let retry = seed.wrapping_add(RESEED_OFFSET);
                    match run_job(cfg, train_config, job, retry) {
                        Ok(o) => (Some(o), retry, RowStatus::Reseeded),
                        Err(e) if e.is_divergence() => {
                            progress(&format!(
                                "{name} r={}: {e}; recorded missing",
                                job.replicate
                            ));
                            (None, retry, RowStatus::Missing)
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => return Err(e),
            };
            Ok(job_rows(cfg, &name, job, used, status, outcome))
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_job {
        rows.extend(r?);
    }

    let mut reps = Vec::new();
    for &train_size in &cfg.train_sizes {
        for replicate in 0..cfg.replicates {
            reps.push((train_size, replicate));
        }
    }
    let per_rep: Vec<Result<Vec<BaselineRow>>> = reps
        .par_iter()
        .map(|&(train_size, replicate)| {
            let seed = cfg.seed(replicate);
            let data = match ReplicateData::simulate(&cfg.system, train_size, cfg.transient, seed) {
                Ok(d) => d,
                Err(e) if e.is_divergence() => return Ok(Vec::new()),
                Err(e) => return Err(e),
            };
            cfg.horizons
                .iter()
                .map(|&k| {
                    // Same targets as the nets: the last N points of 2N.
                    let tail = data
                        .series
                        .slice(s![data.train_size - k.min(data.train_size).., ..]);
                    let (mean_nrmse, prev_nrmse) = baselines_at(tail, &data.norm, k)?;
                    Ok(BaselineRow {
                        system: name.clone(),
                        train_size,
                        horizon: k,
                        replicate,
                        seed,
                        mean_nrmse,
                        prev_nrmse,
                    })
                })
                .collect()
        })
        .collect();
    let mut baselines = Vec::new();
    for b in per_rep {
        baselines.extend(b?);
    }
    Ok(SweepResult {
        select_hidden: cfg.select_hidden,
        rows,
        baselines,
    })
}

fn job_rows(
    cfg: &ExperimentConfig,
    name: &str,
    job: Job,
    seed: u64,
    status: RowStatus,
    outcome: Option<Vec<CellOutcome>>,
) -> Vec<SweepRow> {
    let row =
        |h: usize, horizon: usize, nrmse: f64, best_epoch: usize, sel: Option<usize>| SweepRow {
            system: name.to_string(),
            arch: job.arch,
            train_size: job.train_size,
            d: job.d,
            h,
            horizon,
            replicate: job.replicate,
            seed,
            nrmse,
            best_epoch,
            selected_h: sel,
            status,
        };
    let mut rows = Vec::new();
    match outcome {
        None => {
            for &h in &cfg.hidden_sizes {
                for &k in &cfg.horizons {
                    rows.push(row(h, k, f64::NAN, 0, None));
                }
            }
        }
        Some(outs) => {
            let (sel, outs) = if cfg.select_hidden {
                (Some(outs[0].h), &outs[1..])
            } else {
                (None, &outs[..])
            };
            for o in outs {
                for (i, &k) in cfg.horizons.iter().enumerate() {
                    rows.push(row(o.h, k, o.nrmse[i], o.best_epoch, sel));
                }
            }
        }
    }
    rows
}

/// Aggregate over replicates of one grid cell. For selection runs `h` is
/// `None` and the statistics are over the selected models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub system: String,
    pub arch: Arch,
    pub train_size: usize,
    pub d: usize,
    pub h: Option<usize>,
    pub horizon: usize,
    pub replicates: usize,
    pub missing: usize,
    pub mean_nrmse: f64,
    /// Standard error of the mean; 0 with a single replicate.
    pub stderr: f64,
    pub single_replicate: bool,
    pub mean_selected_h: Option<f64>,
}

type CellKey = (String, Arch, usize, usize, Option<usize>, usize);

#[derive(Default)]
struct Cell {
    values: Vec<f64>,
    selected: Vec<f64>,
    missing: BTreeSet<usize>,
}

/// Per-cell mean and standard error over replicates. Replicate order does
/// not matter: values are sorted before summation.
pub fn aggregate(result: &SweepResult) -> Result<Vec<SummaryRow>> {
    if result.rows.is_empty() {
        return Err(Error::InsufficientData("nothing to aggregate".into()));
    }
    let mut cells: BTreeMap<CellKey, Cell> = BTreeMap::new();
    for r in &result.rows {
        let missing = r.status == RowStatus::Missing;
        if result.select_hidden && !missing && !r.is_selected() {
            continue;
        }
        let h = (!result.select_hidden).then_some(r.h);
        let key = (r.system.clone(), r.arch, r.train_size, r.d, h, r.horizon);
        let cell = cells.entry(key).or_default();
        if missing {
            cell.missing.insert(r.replicate);
            continue;
        }
        cell.values.push(r.nrmse);
        if let Some(sel) = r.selected_h {
            cell.selected.push(sel as f64);
        }
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((system, arch, train_size, d, h, horizon), mut cell) in cells {
        cell.values.sort_by(f64::total_cmp);
        cell.selected.sort_by(f64::total_cmp);
        let (mean, stderr) = mean_stderr(&cell.values);
        let sel = &cell.selected;
        out.push(SummaryRow {
            system,
            arch,
            train_size,
            d,
            h,
            horizon,
            replicates: cell.values.len(),
            missing: cell.missing.len(),
            mean_nrmse: mean,
            stderr,
            single_replicate: cell.values.len() == 1,
            mean_selected_h: (!sel.is_empty()).then(|| sel.iter().sum::<f64>() / sel.len() as f64),
        });
    }
    Ok(out)
}

/// Mean and standard error (sample std / sqrt(R)); stderr is 0 for R <= 1
/// and the mean is NaN for R = 0.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    if r == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1) as f64;
    (mean, (var / r as f64).sqrt())
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], mut w: W) -> Result<()> {
    writeln!(w, "{SUMMARY_CSV_HEADER}")?;
    for r in summary {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.10e},{:.10e},{},{}",
            r.system,
            r.arch.name(),
            r.train_size,
            r.d,
            r.h.map(|h| h.to_string())
                .unwrap_or_else(|| "selected".into()),
            r.horizon,
            r.replicates,
            r.missing,
            r.mean_nrmse,
            r.stderr,
            r.single_replicate,
            r.mean_selected_h
                .map(|v| format!("{v:.4}"))
                .unwrap_or_default()
        )?;
    }
    Ok(())
}

/// Baseline means over replicates per (train size, horizon):
/// `(train_size, horizon, mean_nrmse, prev_nrmse)`.
pub fn aggregate_baselines(rows: &[BaselineRow]) -> Vec<(usize, usize, f64, f64)> {
    let mut cells: BTreeMap<(usize, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for b in rows {
        let e = cells.entry((b.train_size, b.horizon)).or_default();
        e.0.push(b.mean_nrmse);
        e.1.push(b.prev_nrmse);
    }
    cells
        .into_iter()
        .map(|((n, k), (mut m, mut p))| {
            m.sort_by(f64::total_cmp);
            p.sort_by(f64::total_cmp);
            (n, k, mean_stderr(&m).0, mean_stderr(&p).0)
        })
        .collect()
}

#[cfg(test)]
mod tests;
