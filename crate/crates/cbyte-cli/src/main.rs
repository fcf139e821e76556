//! Command-line entry points wiring the tracker, MOT I/O, metrics,
//! synthesis, and overlay rendering. Verbosity is controlled by the
//! `CBYTE_LOG` environment variable (error/warn/info/debug).

mod commands;
mod config;
mod frames;
mod io_util;
mod manifest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{eval, render, synth, track};

#[derive(Parser)]
#[command(name = "cbyte", version, about = "Camera-motion-compensated multi-object tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track detections over a frame directory, writing MOT results and a
    /// run manifest.
    Track {
        /// Directory of numbered grayscale frames.
        #[arg(long)]
        frames: PathBuf,
        /// MOT detection file.
        #[arg(long)]
        dets: PathBuf,
        /// Output MOT results file (a `.manifest` sibling is written too).
        #[arg(long)]
        out: PathBuf,
        /// Optional `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Disable camera motion compensation.
        #[arg(long)]
        no_cmc: bool,
        /// RANSAC seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate results against ground truth (CLEAR + identity metrics).
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        results: PathBuf,
        /// IoU gate for box matches.
        #[arg(long, default_value_t = 0.5)]
        iou_gate: f64,
    },
    /// Generate a synthetic sequence with planted camera motion.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw result boxes and trailing trajectories onto frames.
    Render {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CBYTE_LOG", "warn"))
        .format_timestamp(None)
        .init();

    match Cli::parse().command {
        Command::Track { frames, dets, out, config, no_cmc, seed } => {
            track::run(&track::TrackArgs { frames, dets, out, config, no_cmc, seed })
        }
        Command::Eval { gt, results, iou_gate } => {
            eval::run(&eval::EvalArgs { gt, results, iou_gate })
        }
        Command::Synth { config, out } => synth::run(&synth::SynthArgs { config, out }),
        Command::Render { frames, results, out } => {
            render::run(&render::RenderArgs { frames, results, out })
        }
    }
}
