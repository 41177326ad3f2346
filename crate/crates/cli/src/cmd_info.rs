//! `amiev info`: stream statistics.

use crate::util::{load_events, parse_resolution, CliResult};
use std::path::Path;

pub fn run(events: &Path, resolution: Option<&str>) -> CliResult {
    let resolution = resolution.map(parse_resolution).transpose()?;
    let (stream, out_of_order) = load_events(events, resolution)?;
    let (t0, t1) = stream.time_range().expect("loader rejects empty streams");
    let duration_us = t1 - t0;
    let rate = if duration_us > 0 {
        stream.len() as f64 / (duration_us as f64 * 1e-6)
    } else {
        0.0
    };
    println!("events = {}", stream.len());
    println!("resolution = {}x{}", stream.width(), stream.height());
    println!("t_first_us = {t0}");
    println!("t_last_us = {t1}");
    println!("duration_s = {}", duration_us as f64 * 1e-6);
    println!("rate_ev_per_s = {rate:.1}");
    println!("out_of_order = {out_of_order}");
    Ok(())
}
