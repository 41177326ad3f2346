//! `amiev`: synthesize, translate, calibrate, compensate, and evaluate
//! wedge-prism event-camera streams.
//!
//! All commands are deterministic for a fixed `--seed`: re-running with the
//! same inputs produces byte-identical outputs, independent of `--threads`.

mod cmd_calibrate;
mod cmd_compensate;
mod cmd_eval;
mod cmd_info;
mod cmd_synth;
mod cmd_translate;
mod util;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "amiev", version, about = "Wedge-prism event-camera pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for all randomized steps (scene jitter, noise, encoder jitter).
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker-thread cap; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Event file format for outputs (inputs are recognized by extension).
    #[arg(long, global = true, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a scene: AMI and plain event streams, encoder log, and
    /// edge ground truth.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Translate recorded frames and/or events into an AMI event stream.
    Translate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory of PGM frames named 000000.pgm, 000001.pgm, ...
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Frame timestamps file with `index,t_us` lines.
        #[arg(long)]
        timestamps: Option<PathBuf>,
        /// Existing event stream to relocate.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Calibrate the displacement circle from events and an encoder log.
    Calibrate {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Warp events back to the reference phase using a calibration file.
    Compensate {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        encoder: PathBuf,
        #[arg(long)]
        calibration: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Resolution for headerless CSV input, as `WIDTHxHEIGHT`.
        #[arg(long)]
        resolution: Option<String>,
    },
    /// Texture-quality metrics of event streams or accumulation images.
    Eval {
        /// Primary event stream.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Optional second stream reported alongside the primary one.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Accumulation image (PGM) evaluated directly.
        #[arg(long)]
        iwe: Option<PathBuf>,
        /// Ground-truth edge geometry (CSV of segments and circles).
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stream statistics: count, duration, rate, resolution.
    Info {
        #[arg(long)]
        events: PathBuf,
        /// Resolution for headerless CSV input, as `WIDTHxHEIGHT`.
        #[arg(long)]
        resolution: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    let format = match cli.format.parse() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: usage: {e}");
            return ExitCode::FAILURE;
        }
    };
    let result = match cli.command {
        Command::Synth { config, out } => cmd_synth::run(&config, &out, cli.seed, format),
        Command::Translate { config, out, frames, timestamps, events } => cmd_translate::run(
            &config,
            &out,
            frames.as_deref(),
            timestamps.as_deref(),
            events.as_deref(),
            format,
        ),
        Command::Calibrate { events, encoder, config, out } => {
            cmd_calibrate::run(&events, &encoder, &config, &out)
        }
        Command::Compensate { events, encoder, calibration, out, resolution } => {
            cmd_compensate::run(&events, &encoder, &calibration, &out, resolution.as_deref(), format)
        }
        Command::Eval { events, baseline, iwe, gt, config, out } => cmd_eval::run(
            events.as_deref(),
            baseline.as_deref(),
            iwe.as_deref(),
            gt.as_deref(),
            config.as_deref(),
            &out,
        ),
        Command::Info { events, resolution } => cmd_info::run(&events, resolution.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Single machine-parsable line: `error: <kind>: <detail>`.
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: Option<usize>) {}
