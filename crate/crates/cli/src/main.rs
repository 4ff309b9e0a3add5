//! `delaynet`: simulate benchmark systems, compute diagnostics, train delay
//! networks, evaluate the recursion-error oracle and run forecasting sweeps.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 numerical divergence, 4 tolerance check failed.

mod commands;
mod config;
mod error;
mod plot;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use delaynet::nets::Arch;

use config::{ExperimentSection, RunConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "delaynet",
    version,
    about = "Delay-embedding forecasting benchmarks"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct SystemArgs {
    /// Preset system: lv, lorenz63, duffing, lorenz96.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a trajectory CSV and a JSON metadata sidecar.
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        n_keep: Option<usize>,
        #[arg(long)]
        transient: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Lyapunov exponent, lag-1 autocorrelation and previous-value nrmse.
    Diagnostics {
        /// Repeatable; defaults to the configured system or all presets.
        #[arg(long)]
        preset: Vec<String>,
        /// Compare against the reference values; exit 4 on mismatch.
        #[arg(long)]
        check: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Train one network and report its test nrmse.
    Train {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        arch: Option<Arch>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        delays: Option<usize>,
        #[arg(long)]
        train_size: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_epochs: Option<usize>,
    },
    /// Recursion error of the delay map against the number of delays.
    Oracle {
        #[command(flatten)]
        system: SystemArgs,
        /// Comma-separated delay counts.
        #[arg(long, value_delimiter = ',')]
        delays: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_eval: Option<usize>,
        /// Skip the first-order covariance.
        #[arg(long)]
        no_sigma: bool,
    },
    /// Run a forecasting sweep; writes results, summary and baseline CSVs.
    Bench {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        train_sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        delays: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        hidden_sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        archs: Option<Vec<Arch>>,
        /// Choose the hidden size per replicate by validation loss.
        #[arg(long)]
        select_hidden: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_epochs: Option<usize>,
        /// Also run the oracle and overlay it on the figures.
        #[arg(long)]
        oracle: bool,
        /// CSV output only.
        #[arg(long)]
        no_plot: bool,
    },
    /// Render SVG panels from sweep CSVs.
    Plot {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        baselines: Option<PathBuf>,
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
}

fn apply_system(cfg: &mut RunConfig, s: &SystemArgs) -> Result<(), CliError> {
    if let Some(p) = &s.preset {
        cfg.set_preset(p)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = RunConfig::load_or_default(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    match cli.command {
        Command::Simulate {
            system,
            n_keep,
            transient,
            seed,
        } => {
            apply_system(&mut cfg, &system)?;
            let s = &mut cfg.simulate;
            s.n_keep = n_keep.unwrap_or(s.n_keep);
            s.transient = transient.unwrap_or(s.transient);
            s.seed = seed.unwrap_or(s.seed);
            commands::simulate_cmd(&cfg)
        }
        Command::Diagnostics {
            preset,
            check,
            seed,
            samples,
        } => {
            let d = &mut cfg.diagnostics;
            d.seed = seed.unwrap_or(d.seed);
            d.samples = samples.unwrap_or(d.samples);
            commands::diagnostics_cmd(&cfg, &preset, check)
        }
        Command::Train {
            system,
            arch,
            hidden,
            delays,
            train_size,
            seed,
            max_epochs,
        } => {
            apply_system(&mut cfg, &system)?;
            let m = &mut cfg.model;
            m.arch = arch.unwrap_or(m.arch);
            m.h = hidden.unwrap_or(m.h);
            m.d = delays.unwrap_or(m.d);
            m.train_size = train_size.unwrap_or(m.train_size);
            m.seed = seed.unwrap_or(m.seed);
            cfg.train.max_epochs = max_epochs.unwrap_or(cfg.train.max_epochs);
            commands::train_cmd(&cfg)
        }
        Command::Oracle {
            system,
            delays,
            seed,
            n_eval,
            no_sigma,
        } => {
            apply_system(&mut cfg, &system)?;
            let o = &mut cfg.oracle;
            o.delays = delays.unwrap_or(std::mem::take(&mut o.delays));
            o.protocol.seed = seed.unwrap_or(o.protocol.seed);
            o.protocol.n_eval = n_eval.unwrap_or(o.protocol.n_eval);
            o.protocol.sigma &= !no_sigma;
            commands::oracle_cmd(&cfg)
        }
        Command::Bench {
            system,
            replicates,
            train_sizes,
            delays,
            hidden_sizes,
            horizons,
            archs,
            select_hidden,
            seed,
            max_epochs,
            oracle,
            no_plot,
        } => {
            apply_system(&mut cfg, &system)?;
            let e = cfg
                .experiment
                .get_or_insert_with(ExperimentSection::default);
            macro_rules! set {
                ($($f:ident = $v:expr),*) => {$(
                    if let Some(v) = $v {
                        e.$f = Some(v);
                    }
                )*};
            }
            set!(
                replicates = replicates,
                train_sizes = train_sizes,
                delays = delays,
                hidden_sizes = hidden_sizes,
                horizons = horizons,
                architectures = archs,
                base_seed = seed
            );
            if select_hidden {
                e.select_hidden = Some(true);
            }
            e.with_oracle |= oracle;
            cfg.train.max_epochs = max_epochs.unwrap_or(cfg.train.max_epochs);
            cfg.plot &= !no_plot;
            commands::bench_cmd(&cfg)
        }
        Command::Plot {
            summary,
            baselines,
            oracle,
        } => commands::plot_cmd(
            &summary,
            baselines.as_deref(),
            oracle.as_deref(),
            &cfg.out_dir.join("figures"),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
