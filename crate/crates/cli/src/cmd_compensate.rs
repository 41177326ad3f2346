//! `amiev compensate`: warp a synchronized stream back to the reference
//! phase and emit before/after accumulation images.

use crate::util::{ensure_out_dir, load_events, parse_resolution, write_stream, CliResult};
use amiev_core::calib::{compensate_stream, sharpness_cost};
use amiev_core::config::CalibrationFile;
use amiev_core::events::{
    accumulate_iwe, accumulate_iwe_warped, read_encoder_csv, sync_theta, Binning, EventFormat,
};
use amiev_core::metrics::write_iwe_heatmap;
use std::path::Path;

pub fn run(
    events: &Path,
    encoder: &Path,
    calibration: &Path,
    out: &Path,
    resolution: Option<&str>,
    format: EventFormat,
) -> CliResult {
    let calibration = CalibrationFile::read(calibration)?;
    let resolution = resolution.map(parse_resolution).transpose()?;
    let (stream, out_of_order) = load_events(events, resolution)?;
    if out_of_order > 0 {
        println!("sorted {out_of_order} out-of-order events");
    }
    let samples = read_encoder_csv(encoder)?;
    let stream = sync_theta(&stream, &samples)?;
    ensure_out_dir(out)?;

    let (before, _) = accumulate_iwe(&stream, Binning::Nearest);
    let warped = compensate_stream(&stream, &calibration.params)?;
    let (after, dropped_mass) = accumulate_iwe_warped(&warped, Binning::Nearest);

    let eta = before.median_positive().unwrap_or(1.0);
    println!("cost_before = {:.3}", sharpness_cost(&before, eta));
    println!("cost_after = {:.3}", sharpness_cost(&after, eta));
    println!("dropped {} warped events", dropped_mass.round() as u64);

    let (compensated, _) = warped.to_event_stream();
    write_stream(&compensated, out, "compensated", format)?;
    let before_path = out.join("before.pgm");
    write_iwe_heatmap(&before, &before_path)?;
    println!("wrote {}", before_path.display());
    let after_path = out.join("after.pgm");
    write_iwe_heatmap(&after, &after_path)?;
    println!("wrote {}", after_path.display());
    Ok(())
}
