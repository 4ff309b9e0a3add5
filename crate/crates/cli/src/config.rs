//! Run configuration: one TOML file, presets embedded in the binary,
//! command-line flags applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use delaynet::dynamics::{SystemSpec, PRESET_NAMES};
use delaynet::embedding::SplitSpec;
use delaynet::nets::{Arch, TrainConfig};
use delaynet::oracle::OracleConfig;
use delaynet::sweep::ExperimentConfig;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Named preset supplying the system and grid defaults.
    pub preset: Option<String>,
    /// Full system description; overrides the preset's system.
    pub system: Option<SystemSpec>,
    pub out_dir: PathBuf,
    pub plot: bool,
    pub simulate: SimulateSection,
    pub diagnostics: DiagnosticsSection,
    pub train: TrainConfig,
    pub model: ModelSection,
    pub experiment: Option<ExperimentSection>,
    pub oracle: OracleSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: None,
            system: None,
            out_dir: PathBuf::from("out"),
            plot: true,
            simulate: SimulateSection::default(),
            diagnostics: DiagnosticsSection::default(),
            train: TrainConfig::default(),
            model: ModelSection::default(),
            experiment: None,
            oracle: OracleSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n_keep: usize,
    pub transient: usize,
    pub seed: u64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            n_keep: 1000,
            transient: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub seed: u64,
    pub transient: usize,
    pub warmup: usize,
    pub samples: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        let p = delaynet::dynamics::LyapunovProtocol::default();
        DiagnosticsSection {
            seed: 0,
            transient: p.transient,
            warmup: p.warmup,
            samples: p.samples,
        }
    }
}

/// A single training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub arch: Arch,
    pub h: usize,
    pub d: usize,
    pub train_size: usize,
    pub transient: usize,
    pub horizons: Vec<usize>,
    pub seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            arch: Arch::Rnn,
            h: 10,
            d: 2,
            train_size: 100,
            transient: 1000,
            horizons: vec![1, 2, 3],
            seed: 0,
        }
    }
}

/// The sweep grid; the system comes from the preset or `[system]`. Unset
/// keys take the preset's grid defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub train_sizes: Option<Vec<usize>>,
    pub delays: Option<Vec<usize>>,
    pub hidden_sizes: Option<Vec<usize>>,
    pub select_hidden: Option<bool>,
    pub replicates: Option<usize>,
    pub horizons: Option<Vec<usize>>,
    pub base_seed: Option<u64>,
    pub architectures: Option<Vec<Arch>>,
    pub transient: Option<usize>,
    pub split: Option<SplitSpec>,
    /// Run the oracle on the same delays and overlay it on the plots.
    pub with_oracle: bool,
}

impl ExperimentSection {
    pub fn apply(&self, mut c: ExperimentConfig) -> ExperimentConfig {
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        take!(
            train_sizes,
            delays,
            hidden_sizes,
            select_hidden,
            replicates,
            horizons,
            base_seed,
            architectures,
            transient,
            split
        );
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub delays: Vec<usize>,
    pub protocol: OracleConfig,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            delays: (1..=8).collect(),
            protocol: OracleConfig::default(),
        }
    }
}

/// Grid defaults for a system: training lengths 50/100 for the map,
/// 30/50 for the flows.
pub fn preset_experiment(system: SystemSpec) -> ExperimentConfig {
    let train_sizes = if system.system.is_discrete() {
        vec![50, 100]
    } else {
        vec![30, 50]
    };
    ExperimentConfig {
        system,
        train_sizes,
        ..ExperimentConfig::default()
    }
}

fn unknown_preset(name: &str) -> CliError {
    CliError::Config(format!(
        "unknown preset `{name}` (key `preset`); expected one of {}",
        PRESET_NAMES.join(", ")
    ))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(p) = &cfg.preset {
            if SystemSpec::preset(p).is_none() {
                return Err(unknown_preset(p));
            }
        }
        Ok(cfg)
    }

    /// Loads the file if given, else starts from defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    pub fn set_preset(&mut self, name: &str) -> Result<(), CliError> {
        if SystemSpec::preset(name).is_none() {
            return Err(unknown_preset(name));
        }
        self.preset = Some(name.to_string());
        // The flag wins over a `[system]` block from the file.
        self.system = None;
        Ok(())
    }

    /// `[system]` if present, else the preset's system.
    pub fn system(&self) -> Result<SystemSpec, CliError> {
        let spec = match (&self.system, &self.preset) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => SystemSpec::preset(p).ok_or_else(|| unknown_preset(p))?,
            (None, None) => {
                return Err(CliError::Config(
                    "no system: set `preset` or a `[system]` block (or pass --preset)".into(),
                ))
            }
        };
        spec.validate()
            .map_err(|e| CliError::Config(format!("[system]: {e}")))?;
        Ok(spec)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let base = preset_experiment(self.system()?);
        Ok(match &self.experiment {
            Some(e) => e.apply(base),
            None => base,
        })
    }

    pub fn with_oracle(&self) -> bool {
        self.experiment.as_ref().is_some_and(|e| e.with_oracle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use delaynet::nets::Arch;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_experiment_merges_over_preset_grid() {
        let cfg = RunConfig::parse(
            "preset = \"lorenz63\"\n[experiment]\nreplicates = 3\narchitectures = [\"rnn\"]\n",
        )
        .unwrap();
        let e = cfg.experiment().unwrap();
        assert_eq!(e.replicates, 3);
        assert_eq!(e.architectures, vec![Arch::Rnn]);
        assert_eq!(e.train_sizes, vec![30, 50]);
        assert_eq!(e.delays, (1..=8).collect::<Vec<_>>());
        assert!(!cfg.with_oracle());
    }

    #[test]
    fn errors_name_the_offending_key() {
        let msg = |t: &str| match RunConfig::parse(t) {
            Err(CliError::Config(m)) => m,
            other => panic!("{other:?}"),
        };
        assert!(msg("preset = \"henon\"").contains("preset"));
        assert!(msg("[model]\nhiden = 3").contains("hiden"));
        assert!(msg("[oracle.protocol]\nnevals = 3").contains("nevals"));
        assert!(msg("[model]\narch = \"lstm\"").contains("lstm"));
    }

    #[test]
    fn preset_flag_replaces_system_block() {
        let mut cfg = RunConfig::parse(
            "[system]\nsample_dt = 1.0\nsubsteps = 1\nobserved = [0]\n[system.system]\nkind = \"discrete_lv\"\nr_x = 0.9\nr_y = 1.2\na_xy = 0.7\na_yx = 1.4\n",
        )
        .unwrap();
        assert_eq!(cfg.system().unwrap().name(), "lv");
        cfg.set_preset("duffing").unwrap();
        assert_eq!(
            cfg.system().unwrap(),
            SystemSpec::preset("duffing").unwrap()
        );
        assert!(matches!(cfg.set_preset("x"), Err(CliError::Config(_))));
    }

    #[test]
    fn missing_system_is_a_config_error() {
        assert!(matches!(
            RunConfig::default().system(),
            Err(CliError::Config(_))
        ));
    }
}
