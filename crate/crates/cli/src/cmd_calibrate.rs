//! `amiev calibrate`: coarse-to-fine search for the displacement circle.

use crate::util::{ensure_out_dir, load_events, resolution_from_kv, CliError, CliResult};
use amiev_core::calib::{calibrate, CompensationParams};
use amiev_core::config::{search_config_from_kv, CalibrationFile, KvFile};
use amiev_core::events::{read_encoder_csv, sync_theta};
use amiev_core::optics::{self, PrismConfig, UnitVec3};
use std::io::Write;
use std::path::Path;

/// Initial radius: explicit `r0_px`, or the central-ray deflection of the
/// configured prism projected through `fx_px`.
fn initial_radius(kv: &KvFile) -> CliResult<f64> {
    if kv.get("r0_px").is_some() {
        return Ok(kv.parse_value("r0_px")?);
    }
    let fx: f64 = kv.parse_value("fx_px").map_err(|_| {
        CliError::Usage("need r0_px, or fx_px with prism_alpha_deg/prism_n".to_string())
    })?;
    let alpha = kv.parse_or::<f64>("prism_alpha_deg", 1.0)?.to_radians();
    let n: f64 = kv.parse_or("prism_n", 1.55)?;
    let prism = PrismConfig::new(alpha, n, 0.0)?;
    let z_w = optics::wedge_axis(0.0, prism.alpha);
    let delta = optics::deviation_angle(&UnitVec3::z_axis().neg(), &z_w, prism.n)?;
    Ok(fx * delta.tan())
}

pub fn run(events: &Path, encoder: &Path, config: &Path, out: &Path) -> CliResult {
    let kv = KvFile::from_path(config)?;
    let (stream, out_of_order) = load_events(events, resolution_from_kv(&kv)?)?;
    if out_of_order > 0 {
        println!("sorted {out_of_order} out-of-order events");
    }
    let samples = read_encoder_csv(encoder)?;
    let stream = sync_theta(&stream, &samples)?;
    ensure_out_dir(out)?;

    let r0 = initial_radius(&kv)?;
    let center = (
        kv.parse_or("center_x", stream.width() as f64 / 2.0)?,
        kv.parse_or("center_y", stream.height() as f64 / 2.0)?,
    );
    let init = CompensationParams::new(r0, kv.parse_or::<f64>("theta_b0_deg", 0.0)?.to_radians(), center)?
        .with_k1(kv.parse_or("k1", 0.0)?);
    let cfg = search_config_from_kv(&kv, r0)?;

    let (params, report) = calibrate(&stream, &init, &cfg)?;
    println!(
        "calibrated r = {:.3} px, theta_b = {:.3} deg, cost = {:.3}",
        params.r,
        params.theta_b.to_degrees(),
        report.best_cost
    );

    let calibration = CalibrationFile { params, cost: report.best_cost, window_s: cfg.window_s };
    let calibration_path = out.join("calibration.cfg");
    calibration.write(&calibration_path)?;
    println!("wrote {}", calibration_path.display());

    let surface_path = out.join("cost_surface.csv");
    let mut text = String::from("r_px,theta_b_rad,cost\n");
    for s in &report.samples {
        text.push_str(&format!("{},{},{}\n", s.r, s.theta_b, s.cost));
    }
    let mut file = std::fs::File::create(&surface_path)?;
    file.write_all(text.as_bytes())?;
    println!("wrote {} ({} samples)", surface_path.display(), report.samples.len());
    Ok(())
}
