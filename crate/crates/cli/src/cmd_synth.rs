//! `amiev synth`: scene synthesis into event files plus ground truth.

use crate::util::{ensure_out_dir, write_stream, CliError, CliResult};
use amiev_core::config::{scene_spec_from_kv, synth_config_from_kv, KvFile};
use amiev_core::events::EventFormat;
use amiev_core::translate::{add_uniform_noise, synth_events_from_scene, synthetic_encoder};
use std::path::Path;

const NOISE_SEED_SALT: u64 = 0xa5a5_a5a5_a5a5_a5a5;
const ENCODER_SEED_SALT: u64 = 0x5a5a_5a5a_5a5a_5a5a;

pub fn run(config: &Path, out: &Path, seed: u64, format: EventFormat) -> CliResult {
    let kv = KvFile::from_path(config)?;
    let spec = scene_spec_from_kv(&kv, seed)?;
    let synth = synth_config_from_kv(
        &kv,
        (spec.width as f64 / 2.0, spec.height as f64 / 2.0),
    )?;
    let framerate: f64 = kv.parse_value("framerate_fps")?;
    let noise_fraction: f64 = kv.parse_or("noise_fraction", 0.0)?;
    let encoder_rate: f64 = kv.parse_or("encoder_rate_hz", 1000.0)?;
    let encoder_jitter: f64 = kv.parse_or("encoder_jitter_us", 0.0)?;
    ensure_out_dir(out)?;

    let mut ami = synth_events_from_scene(&spec, framerate, &synth, true)?;
    if noise_fraction > 0.0 {
        ami = add_uniform_noise(&ami, noise_fraction, &synth.prism, seed ^ NOISE_SEED_SALT);
    }
    let sev = synth_events_from_scene(&spec, framerate, &synth, false)?;

    write_stream(&ami, out, "ami_events", format)?;
    write_stream(&sev, out, "sev_events", format)?;

    let duration_us = (spec.duration_s * 1e6).ceil() as u64;
    let encoder = synthetic_encoder(
        &synth.prism,
        0,
        duration_us,
        encoder_rate,
        encoder_jitter,
        seed ^ ENCODER_SEED_SALT,
    );
    let encoder_path = out.join("encoder.csv");
    amiev_core::events::write_encoder_csv(&encoder, &encoder_path)?;
    println!("wrote {} ({} samples)", encoder_path.display(), encoder.len());

    let scene = spec.resolve()?;
    let gt_path = out.join("gt_edges.csv");
    scene.ground_truth_edges().write_csv(&gt_path).map_err(CliError::Io)?;
    println!("wrote {}", gt_path.display());

    let mut meta = KvFile::new();
    meta.set("width", spec.width);
    meta.set("height", spec.height);
    meta.set("duration_s", spec.duration_s);
    meta.set("framerate_fps", framerate);
    meta.set("seed", seed);
    meta.set("r_px", synth.params.r);
    meta.set("theta_b_rad", synth.params.theta_b);
    meta.set("rotation_hz", synth.prism.rotation_hz);
    meta.set("ami_events", ami.len());
    meta.set("sev_events", sev.len());
    meta.set("noise_fraction", noise_fraction);
    let meta_path = out.join("synth_meta.txt");
    meta.write(&meta_path)?;
    println!("wrote {}", meta_path.display());
    Ok(())
}
