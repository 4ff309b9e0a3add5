use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use delaynet::dynamics::{
    diagnostics_with, reference_diagnostics, simulate, DiagnosticsReport, LyapunovProtocol,
    SystemSpec, PRESET_NAMES,
};
use delaynet::nets::Checkpoint;
use delaynet::oracle::{run_oracle, REPORT_CSV_HEADER};
use delaynet::sweep::{
    aggregate, baselines_at, run_sweep_with_progress, score_replicate, train_replicate,
    write_summary_csv, ReplicateData,
};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::plot;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::Core(delaynet::Error::Parse(e.to_string())))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn integrator(spec: &SystemSpec) -> serde_json::Value {
    if spec.system.is_discrete() {
        json!({ "method": "map" })
    } else {
        json!({
            "method": "rk4",
            "substeps": spec.substeps,
            "internal_step": spec.sample_dt / spec.substeps as f64,
        })
    }
}

pub fn simulate_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.system()?;
    let s = &cfg.simulate;
    if s.n_keep == 0 {
        return Err(CliError::Config("simulate.n_keep must be >= 1".into()));
    }
    let traj = simulate(&spec, s.seed, s.n_keep, s.transient)?;
    let csv_path = cfg.out_dir.join(format!("{}_trajectory.csv", spec.name()));
    let mut w = create(&csv_path)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    let meta_path = csv_path.with_extension("json");
    write_json(
        &meta_path,
        &json!({
            "system": spec,
            "seed": s.seed,
            "n_keep": s.n_keep,
            "transient": s.transient,
            "integrator": integrator(&spec),
        }),
    )?;
    Ok(vec![csv_path, meta_path])
}

/// Which systems a diagnostics run covers: explicit names, else the
/// configured system, else every preset.
pub fn diagnostics_targets(cfg: &RunConfig, names: &[String]) -> Result<Vec<SystemSpec>, CliError> {
    if !names.is_empty() {
        return names
            .iter()
            .map(|n| {
                SystemSpec::preset(n).ok_or_else(|| {
                    CliError::Config(format!(
                        "unknown preset `{n}` (flag --preset); expected one of {}",
                        PRESET_NAMES.join(", ")
                    ))
                })
            })
            .collect();
    }
    if cfg.system.is_some() || cfg.preset.is_some() {
        return Ok(vec![cfg.system()?]);
    }
    Ok(PRESET_NAMES
        .iter()
        .map(|n| SystemSpec::preset(n).expect("preset"))
        .collect())
}

pub fn diagnostics_cmd(
    cfg: &RunConfig,
    names: &[String],
    check: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let specs = diagnostics_targets(cfg, names)?;
    let d = &cfg.diagnostics;
    let protocol = LyapunovProtocol {
        transient: d.transient,
        warmup: d.warmup,
        samples: d.samples,
    };
    let mut reports: Vec<(String, DiagnosticsReport)> = Vec::new();
    for spec in &specs {
        let r = diagnostics_with(spec, d.seed, protocol)?;
        reports.push((spec.name().to_string(), r));
    }
    let path = cfg.out_dir.join("diagnostics.csv");
    let mut w = create(&path)?;
    writeln!(w, "system,lyapunov,autocorr_dt,prev_value_nrmse")?;
    println!(
        "{:<10} {:>10} {:>12} {:>17}",
        "system", "lyapunov", "autocorr_dt", "prev_value_nrmse"
    );
    for (name, r) in &reports {
        writeln!(
            w,
            "{name},{:.6},{:.6},{:.6}",
            r.lyapunov, r.autocorr_dt, r.prev_value_nrmse
        )?;
        println!(
            "{name:<10} {:>10.4} {:>12.4} {:>17.4}",
            r.lyapunov, r.autocorr_dt, r.prev_value_nrmse
        );
    }
    w.flush()?;

    if check {
        let mut failed = Vec::new();
        for (name, r) in &reports {
            let Some(target) = reference_diagnostics(name) else {
                continue;
            };
            for c in target.check(r) {
                let verdict = if c.passed() { "PASS" } else { "FAIL" };
                println!(
                    "{verdict} {name} {}: {:.4} vs {:.4} ± {}",
                    c.quantity, c.measured, c.target, c.tolerance
                );
                if !c.passed() {
                    failed.push(format!("{name}.{}", c.quantity));
                }
            }
        }
        if !failed.is_empty() {
            return Err(CliError::Tolerance(failed.join(", ")));
        }
    }
    Ok(vec![path])
}

pub fn train_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.system()?;
    let m = &cfg.model;
    if m.h == 0 || m.d == 0 || m.horizons.contains(&0) {
        return Err(CliError::Config(
            "model.h, model.d and model.horizons must be >= 1".into(),
        ));
    }
    cfg.train
        .validate()
        .map_err(|e| CliError::Config(format!("[train]: {e}")))?;
    let split = delaynet::embedding::SplitSpec::default();
    let data = ReplicateData::simulate(&spec, m.train_size, m.transient, m.seed)?;
    let model = train_replicate(&data, m.arch, m.d, m.h, &split, &cfg.train, m.seed)?;
    let nrmse = score_replicate(&model, &data, &m.horizons)?;
    let stem = format!("{}_{}_d{}_h{}", spec.name(), m.arch.name(), m.d, m.h);
    let ckpt_path = cfg.out_dir.join(format!("{stem}.json"));
    let mut w = create(&ckpt_path)?;
    w.write_all(Checkpoint::from_model(&model.model).to_json()?.as_bytes())?;
    writeln!(w)?;
    w.flush()?;

    let mut baselines = Vec::new();
    for &k in &m.horizons {
        let tail = data
            .series
            .slice(ndarray::s![m.train_size - k.min(m.train_size).., ..]);
        let (mean, prev) = baselines_at(tail, &data.norm, k)?;
        baselines.push(json!({ "horizon": k, "mean_nrmse": mean, "prev_nrmse": prev }));
    }
    let metrics_path = cfg.out_dir.join(format!("{stem}_metrics.json"));
    write_json(
        &metrics_path,
        &json!({
            "system": spec,
            "model": m,
            "train": cfg.train,
            "norm": model.norm,
            "epochs_run": model.history.epochs_run(),
            "best_epoch": model.history.best_epoch,
            "best_val_loss": model.history.best_val_loss(),
            "test_nrmse": m.horizons.iter().zip(&nrmse)
                .map(|(k, v)| json!({ "horizon": k, "nrmse": v }))
                .collect::<Vec<_>>(),
            "baselines": baselines,
        }),
    )?;
    for (k, v) in m.horizons.iter().zip(&nrmse) {
        println!("horizon {k}: test nrmse {v:.4}");
    }
    Ok(vec![ckpt_path, metrics_path])
}

fn oracle_rows(spec: &SystemSpec, cfg: &RunConfig, delays: &[usize]) -> Result<String, CliError> {
    if delays.is_empty() || delays.contains(&0) {
        return Err(CliError::Config(
            "oracle.delays must be non-empty and every d >= 1".into(),
        ));
    }
    cfg.oracle
        .protocol
        .validate()
        .map_err(|e| CliError::Config(format!("[oracle.protocol]: {e}")))?;
    let reports = run_oracle(spec, delays, &cfg.oracle.protocol)?;
    let mut text = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    Ok(text)
}

pub fn oracle_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let spec = cfg.system()?;
    let text = oracle_rows(&spec, cfg, &cfg.oracle.delays)?;
    let path = cfg.out_dir.join(format!("{}_oracle.csv", spec.name()));
    let mut w = create(&path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    let meta = path.with_extension("json");
    write_json(
        &meta,
        &json!({ "system": spec, "delays": cfg.oracle.delays, "protocol": cfg.oracle.protocol }),
    )?;
    print!("{text}");
    Ok(vec![path, meta])
}

pub fn bench_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let exp = cfg.experiment()?;
    exp.validate()
        .map_err(|e| CliError::Config(format!("[experiment]: {e}")))?;
    cfg.train
        .validate()
        .map_err(|e| CliError::Config(format!("[train]: {e}")))?;
    let name = exp.system.name();
    let result = run_sweep_with_progress(&exp, &cfg.train, |msg| eprintln!("{msg}"))?;
    let summary = aggregate(&result)?;

    let dir = &cfg.out_dir;
    let results_path = dir.join(format!("{name}_results.csv"));
    let summary_path = dir.join(format!("{name}_summary.csv"));
    let baselines_path = dir.join(format!("{name}_baselines.csv"));
    let meta_path = dir.join(format!("{name}_bench.json"));
    let mut w = create(&results_path)?;
    result.write_results_csv(&mut w)?;
    w.flush()?;
    let mut w = create(&summary_path)?;
    write_summary_csv(&summary, &mut w)?;
    w.flush()?;
    let mut w = create(&baselines_path)?;
    result.write_baselines_csv(&mut w)?;
    w.flush()?;
    write_json(
        &meta_path,
        &json!({ "experiment": exp, "train": cfg.train }),
    )?;
    let mut written = vec![
        results_path,
        summary_path.clone(),
        baselines_path.clone(),
        meta_path,
    ];

    let oracle_path = dir.join(format!("{name}_oracle.csv"));
    if cfg.with_oracle() {
        let text = oracle_rows(&exp.system, cfg, &exp.delays)?;
        fs::write(&oracle_path, text)?;
        written.push(oracle_path.clone());
    }
    if cfg.plot {
        let oracle = if cfg.with_oracle() {
            Some(oracle_path.as_path())
        } else {
            None
        };
        written.extend(plot_cmd(
            &summary_path,
            Some(&baselines_path),
            oracle,
            &dir.join("figures"),
        )?);
    }
    let missing: usize = summary.iter().map(|s| s.missing).sum();
    eprintln!(
        "{name}: {} result rows, {} summary cells, {missing} missing",
        result.rows.len(),
        summary.len()
    );
    Ok(written)
}

pub fn plot_cmd(
    summary: &Path,
    baselines: Option<&Path>,
    oracle: Option<&Path>,
    out: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let s: Vec<plot::SummaryRecord> = plot::read_csv(summary)?;
    let b: Vec<plot::BaselineRecord> = match baselines {
        Some(p) => plot::read_csv(p)?,
        None => Vec::new(),
    };
    let o: Vec<plot::OracleRecord> = match oracle {
        Some(p) => plot::read_csv(p)?,
        None => Vec::new(),
    };
    plot::write_panels(out, &s, &b, &o)
}
