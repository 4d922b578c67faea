use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use peps::commands::{cmd_eval, cmd_lissajous, cmd_spectra, cmd_sweep, cmd_train};
use peps::config::ExperimentConfig;
use peps::Result;
use peps_core::projection::{LISSAJOUS_PHI_MAX, LISSAJOUS_SAMPLES};

/// Positional encoding projected sampling experiments.
#[derive(Parser)]
#[command(name = "peps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a signal and write checkpoint, log and metrics.
    Train {
        /// Config file or `preset:<name>`.
        #[arg(long)]
        config: String,
        /// Override `[train] seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the parameter count and exit.
        #[arg(long)]
        param_count_only: bool,
    },
    /// Reconstruct a signal from a checkpoint and score it.
    Eval {
        checkpoint: PathBuf,
        /// Image, `.sdfv` volume, texture-set directory or `builtin:...`.
        signal: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Radial power spectrum and fitted 1/f^alpha exponent.
    Spectra {
        image: String,
        /// Spectrum file (default `spectrum.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lissajous curve of a 2-D point.
    Lissajous {
        #[arg(allow_negative_numbers = true)]
        x: f64,
        #[arg(allow_negative_numbers = true)]
        y: f64,
        #[arg(long, default_value_t = LISSAJOUS_PHI_MAX)]
        phi_max: f64,
        #[arg(long, default_value_t = LISSAJOUS_SAMPLES)]
        samples: usize,
        /// Second point; prints the largest gap and whether the curves differ.
        #[arg(long, num_args = 2, value_names = ["X2", "Y2"], allow_negative_numbers = true)]
        compare: Option<Vec<f64>>,
        /// Curve file (default `lissajous.txt`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a grid of resolutions and feature sizes.
    Sweep {
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        feat_dims: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            param_count_only,
        } => {
            let cfg = load(&config, seed)?;
            let outcome = cmd_train(&cfg, out.as_deref(), param_count_only, &mut |e| {
                if let Some(m) = e.metric {
                    eprintln!("step {} loss {:.6} lr {:.3e} metric {m:.4}", e.step, e.loss, e.lr);
                }
            })?;
            print!("{}", outcome.summary);
        }
        Command::Eval { checkpoint, signal, out } => {
            print!("{}", cmd_eval(&checkpoint, &signal, out.as_deref())?.summary);
        }
        Command::Spectra { image, out } => {
            let outcome = cmd_spectra(&image, out.as_deref())?;
            if let Some(w) = &outcome.warning {
                eprintln!("warning: {w}");
            }
            print!("{}", outcome.summary);
        }
        Command::Lissajous {
            x,
            y,
            phi_max,
            samples,
            compare,
            out,
        } => {
            let compare = compare.map(|v| [v[0], v[1]]);
            print!("{}", cmd_lissajous([x, y], phi_max, samples, compare, out.as_deref())?.summary);
        }
        Command::Sweep {
            config,
            seed,
            resolutions,
            feat_dims,
            out,
        } => {
            let cfg = load(&config, seed)?;
            let outcome = cmd_sweep(&cfg, &resolutions, &feat_dims, out.as_deref(), &mut |row| {
                eprintln!("resolution {:?} feat_dim {:?}: {} params, {:.4}", row.resolution, row.feat_dim, row.params, row.metric);
            })?;
            print!("{}", outcome.table);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
