//! `spk`: every benchmark pipeline as a subcommand.
//!
//! Each run writes `run.json` (resolved config, tool and schema version) into
//! its `--out` directory and nothing outside it. Exit codes: 0 success,
//! 2 invalid input or configuration, 3 filesystem failure. `SPK_THREADS`
//! caps the worker pool; results do not depend on it or on `--shards`.

mod cmd;
mod fail;
mod out;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "spk", version, about = "Scene parsing benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predicted label masks against ground truth.
    Eval(cmd::eval::EvalArgs),
    /// Corpus statistics: rankings, histograms, Zipf fit, growth curves, mode image.
    Stats(cmd::stats::StatsArgs),
    /// Compare two annotations of the same images.
    Consistency(cmd::consistency::ConsistencyArgs),
    /// Fuse stuff and object score maps into scene masks.
    Fuse(cmd::cascade::FuseArgs),
    /// Segment parts inside fused object regions.
    Parts(cmd::cascade::PartsArgs),
    /// Merge annotation masks up the hypernym tree.
    Merge(cmd::merge::MergeArgs),
    /// Downscale annotations so the shorter side matches a target (nearest neighbour).
    Rescale(cmd::merge::RescaleArgs),
    /// Remove target objects and inpaint the hole.
    Removal(cmd::removal::RemovalArgs),
    /// Generate a synthetic annotated corpus with a ground-truth manifest.
    Synth(cmd::synth::SynthArgs),
    /// Convert an ADE20K release tree into the native corpus layout.
    #[command(name = "import-ade20k")]
    ImportAde20k(cmd::import::ImportArgs),
}

/// What to do with unpaired or unreadable records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    #[default]
    Abort,
    Skip,
}

impl From<Strictness> for spk_core::maskio::ade20k::Strictness {
    fn from(s: Strictness) -> Self {
        match s {
            Strictness::Abort => spk_core::maskio::ade20k::Strictness::Abort,
            Strictness::Skip => spk_core::maskio::ade20k::Strictness::Skip,
        }
    }
}

fn configure_threads() {
    let Ok(raw) = std::env::var("SPK_THREADS") else { return };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring SPK_THREADS={raw:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Eval(a) => cmd::eval::run(a),
        Command::Stats(a) => cmd::stats::run(a),
        Command::Consistency(a) => cmd::consistency::run(a),
        Command::Fuse(a) => cmd::cascade::run_fuse(a),
        Command::Parts(a) => cmd::cascade::run_parts(a),
        Command::Merge(a) => cmd::merge::run_merge(a),
        Command::Rescale(a) => cmd::merge::run_rescale(a),
        Command::Removal(a) => cmd::removal::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::ImportAde20k(a) => cmd::import::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spk: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
