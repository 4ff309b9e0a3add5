//! Figure panels from the sweep CSVs: nrmse against the number of delays,
//! one panel per (system, training size, horizon), with the baseline
//! predictors and the oracle recursion error overlaid.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;
use crate::svg::{Chart, Point, Series};

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct SummaryRecord {
    pub system: String,
    pub arch: String,
    pub train_size: usize,
    pub d: usize,
    /// A number, or `selected`.
    pub h: String,
    pub horizon: usize,
    pub replicates: usize,
    pub missing: usize,
    pub mean_nrmse: f64,
    pub stderr: f64,
    pub single_replicate: bool,
    pub mean_selected_h: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct BaselineRecord {
    pub system: String,
    pub train_size: usize,
    pub horizon: usize,
    pub replicate: usize,
    pub seed: u64,
    pub mean_nrmse: f64,
    pub prev_nrmse: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct OracleRecord {
    pub system: String,
    pub d: usize,
    pub eps_rms: f64,
    pub sigma_trace_mean: f64,
    pub n_eval: usize,
    pub estimator: String,
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

fn series_label(arch: &str, h: &str) -> String {
    let arch = arch.to_uppercase();
    if h == "selected" {
        format!("{arch} (selected h)")
    } else {
        format!("{arch} h={h}")
    }
}

/// Builds every panel. Returns `(file stem, chart)` pairs in a stable order.
pub fn panels(
    summary: &[SummaryRecord],
    baselines: &[BaselineRecord],
    oracle: &[OracleRecord],
) -> Vec<(String, Chart)> {
    type PanelKey = (String, usize, usize);
    let mut groups: BTreeMap<PanelKey, BTreeMap<(String, String), Vec<&SummaryRecord>>> =
        BTreeMap::new();
    for r in summary {
        groups
            .entry((r.system.clone(), r.train_size, r.horizon))
            .or_default()
            .entry((r.arch.clone(), r.h.clone()))
            .or_default()
            .push(r);
    }
    let mut out = Vec::new();
    for ((system, n, k), lines) in &groups {
        let mut chart = Chart {
            title: format!("{system}, N={n}, horizon {k}"),
            x_label: "number of delays d".into(),
            y_label: "normalized RMSE".into(),
            ..Chart::default()
        };
        // Numeric hidden sizes in numeric order.
        let mut keys: Vec<&(String, String)> = lines.keys().collect();
        keys.sort_by_key(|(a, h)| (a.clone(), h.parse::<usize>().unwrap_or(usize::MAX)));
        for key in keys {
            let mut rows = lines[key].clone();
            rows.sort_by_key(|r| r.d);
            chart.series.push(Series {
                label: series_label(&key.0, &key.1),
                key: format!("{}:{}", key.0, key.1),
                points: rows
                    .iter()
                    .map(|r| Point {
                        x: r.d as f64,
                        y: r.mean_nrmse,
                        err: Some(r.stderr),
                    })
                    .collect(),
                dashed: false,
            });
        }
        let base: Vec<&BaselineRecord> = baselines
            .iter()
            .filter(|b| &b.system == system && b.train_size == *n && b.horizon == *k)
            .collect();
        if !base.is_empty() {
            let m = base.len() as f64;
            chart.hlines.push((
                "mean predictor".into(),
                base.iter().map(|b| b.mean_nrmse).sum::<f64>() / m,
            ));
            chart.hlines.push((
                "previous value".into(),
                base.iter().map(|b| b.prev_nrmse).sum::<f64>() / m,
            ));
        }
        if *k == 1 {
            let mut orc: Vec<&OracleRecord> =
                oracle.iter().filter(|o| &o.system == system).collect();
            orc.sort_by_key(|o| o.d);
            if !orc.is_empty() {
                chart.series.push(Series {
                    label: "recursion error".into(),
                    key: "oracle".into(),
                    points: orc
                        .iter()
                        .map(|o| Point {
                            x: o.d as f64,
                            y: o.eps_rms,
                            err: None,
                        })
                        .collect(),
                    dashed: true,
                });
                chart.log_y = true;
            }
        }
        out.push((format!("{system}_n{n}_h{k}"), chart));
    }

    // Mean selected hidden size per d, when present.
    type ByArch = BTreeMap<String, Vec<(usize, f64)>>;
    let mut selected: BTreeMap<(String, usize), ByArch> = BTreeMap::new();
    for r in summary.iter().filter(|r| r.horizon == 1) {
        if let Some(h) = r.mean_selected_h {
            selected
                .entry((r.system.clone(), r.train_size))
                .or_default()
                .entry(r.arch.clone())
                .or_default()
                .push((r.d, h));
        }
    }
    for ((system, n), archs) in selected {
        let mut chart = Chart {
            title: format!("{system}, N={n}, selected hidden size"),
            x_label: "number of delays d".into(),
            y_label: "mean selected hidden neurons".into(),
            ..Chart::default()
        };
        for (arch, mut pts) in archs {
            pts.sort_by_key(|p| p.0);
            chart.series.push(Series {
                label: arch.to_uppercase(),
                key: format!("{arch}:selected_h"),
                points: pts
                    .iter()
                    .map(|(d, h)| Point {
                        x: *d as f64,
                        y: *h,
                        err: None,
                    })
                    .collect(),
                dashed: false,
            });
        }
        out.push((format!("{system}_n{n}_selected_h"), chart));
    }
    out
}

/// Writes one SVG per panel into `dir`; returns the written paths.
pub fn write_panels(
    dir: &Path,
    summary: &[SummaryRecord],
    baselines: &[BaselineRecord],
    oracle: &[OracleRecord],
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (stem, chart) in panels(summary, baselines, oracle) {
        let path = dir.join(format!("{stem}.svg"));
        std::fs::write(&path, chart.render())?;
        written.push(path);
    }
    Ok(written)
}
