//! `coact`: command-line driver for the concurrent-activity recognition
//! pipeline. Every subcommand takes `--seed`, `--config`, `--out`; all
//! artifacts land under the output directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coact_core::config::AppConfig;
use coact_core::model::{presets, NetworkConfig};

mod datasets;
mod pipeline;
mod reports;

#[derive(Parser)]
#[command(name = "coact", version, about = "Concurrent-activity recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run seed; overrides the config file's.
    #[arg(long)]
    seed: Option<u64>,

    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for all artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Turn raw sensor files into one per-second case bundle.
    Preprocess(pipeline::PreprocessArgs),
    /// Train a network on case bundles.
    Train(pipeline::TrainArgs),
    /// Run a trained network over case bundles and write predictions.
    Evaluate(pipeline::EvaluateArgs),
    /// Score a prediction file against the bundled ground truth.
    Metrics(pipeline::MetricsArgs),
    /// Per-layer memory estimate for an architecture.
    Memreport(reports::MemreportArgs),
    /// Finite-difference verification of every gradient.
    Gradcheck(reports::GradcheckArgs),
    /// Composite-image experiment: generate, train, evaluate.
    Composite(datasets::CompositeArgs),
    /// Composite accuracy/AP sweep over labeled-subset sizes.
    Sweep(datasets::SweepArgs),
    /// Generate synthetic multimodal cases with known ground truth.
    Synth(pipeline::SynthArgs),
}

/// Config file plus the directory its relative paths resolve against.
struct Env {
    config: AppConfig,
    base_dir: PathBuf,
    out: PathBuf,
    seed: u64,
}

fn load_env(common: &Common) -> anyhow::Result<Env> {
    let (config, base_dir) = match &common.config {
        Some(path) => {
            let base = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            (AppConfig::load(path)?, base)
        }
        None => (AppConfig::default(), PathBuf::from(".")),
    };
    std::fs::create_dir_all(&common.out)?;
    let seed = common.seed.or(config.train.seed).unwrap_or(7);
    Ok(Env {
        config,
        base_dir,
        out: common.out.clone(),
        seed,
    })
}

impl Env {
    fn has_network(&self) -> bool {
        self.config.network.preset.is_some() || !self.config.network.branches.is_empty()
    }

    /// Network from `--preset`, then the config file, then `fallback`.
    fn network(
        &self,
        preset_flag: Option<&str>,
        fallback: Option<&str>,
    ) -> anyhow::Result<NetworkConfig> {
        if preset_flag.is_some() || self.has_network() {
            return Ok(self.config.network(preset_flag)?);
        }
        match fallback {
            Some(name) => Ok(presets::by_name(name)?),
            None => Ok(self.config.network(None)?),
        }
    }
}

/// Print to stdout, swallowing a closed pipe so `coact ... | head` exits
/// cleanly instead of panicking.
pub(crate) fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

pub(crate) fn emitln(text: &str) {
    emit(text);
    emit("\n");
}

pub(crate) fn write_out(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text)?;
    emitln(&format!("wrote {}", path.display()));
    Ok(())
}

fn run() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Preprocess(args) => pipeline::preprocess(args),
        Command::Train(args) => pipeline::train(args),
        Command::Evaluate(args) => pipeline::evaluate(args),
        Command::Metrics(args) => pipeline::metrics(args),
        Command::Memreport(args) => reports::memreport(args),
        Command::Gradcheck(args) => reports::gradcheck(args),
        Command::Composite(args) => datasets::composite(args),
        Command::Sweep(args) => datasets::sweep(args),
        Command::Synth(args) => pipeline::synth(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
