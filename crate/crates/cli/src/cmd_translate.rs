//! `amiev translate`: frames and/or events in, AMI event stream out.

use crate::util::{
    ensure_out_dir, load_events, resolution_from_kv, write_stream, CliError, CliResult,
};
use amiev_core::config::{synth_config_from_kv, KvFile};
use amiev_core::events::EventFormat;
use amiev_core::translate::{
    synth_ami_from_events, synth_ami_from_frames_plus_events, synth_events_from_frames,
    synthetic_encoder, FrameSequence, FrameSource,
};
use std::path::Path;

pub fn run(
    config: &Path,
    out: &Path,
    frames: Option<&Path>,
    timestamps: Option<&Path>,
    events: Option<&Path>,
    format: EventFormat,
) -> CliResult {
    let kv = KvFile::from_path(config)?;
    ensure_out_dir(out)?;

    let seq = match (frames, timestamps) {
        (Some(dir), Some(ts)) => Some(FrameSequence::from_pgm_dir(dir, ts)?),
        (None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "--frames and --timestamps must be given together".to_string(),
            ))
        }
    };
    let stream = match events {
        Some(path) => Some(load_events(path, resolution_from_kv(&kv)?)?.0),
        None => None,
    };

    let default_center = |w: u16, h: u16| (w as f64 / 2.0, h as f64 / 2.0);
    let (ami, dropped) = match (&seq, &stream) {
        (Some(seq), Some(stream)) => {
            let (w, h) = seq.resolution();
            let cfg = synth_config_from_kv(&kv, default_center(w, h))?;
            synth_ami_from_frames_plus_events(seq, stream, &cfg)?
        }
        (Some(seq), None) => {
            let (w, h) = seq.resolution();
            let cfg = synth_config_from_kv(&kv, default_center(w, h))?;
            (synth_events_from_frames(seq, &cfg, true)?, 0)
        }
        (None, Some(stream)) => {
            let cfg = synth_config_from_kv(&kv, default_center(stream.width(), stream.height()))?;
            synth_ami_from_events(stream, &cfg)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "need --frames/--timestamps, --events, or both".to_string(),
            ))
        }
    };
    println!("dropped {dropped} out-of-bounds events");
    write_stream(&ami, out, "ami_events", format)?;

    if let Some((t0, t1)) = ami.time_range() {
        let cfg = synth_config_from_kv(&kv, (0.0, 0.0))?;
        let encoder_rate: f64 = kv.parse_or("encoder_rate_hz", 1000.0)?;
        let samples = synthetic_encoder(&cfg.prism, t0, t1, encoder_rate, 0.0, 0);
        let path = out.join("encoder.csv");
        amiev_core::events::write_encoder_csv(&samples, &path)?;
        println!("wrote {} ({} samples)", path.display(), samples.len());
    }
    Ok(())
}
