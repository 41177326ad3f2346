//! Shared builders for the integration and acceptance suites.

use amiev_core::calib::CompensationParams;
use amiev_core::optics::PrismConfig;
use amiev_core::translate::{Motion, Pattern, SceneSpec, SynthConfig};
use std::f64::consts::TAU;

/// 720 rpm.
pub const ROTATION_HZ: f64 = 12.0;

pub fn prism_720rpm(alpha_deg: f64) -> PrismConfig {
    PrismConfig::new(alpha_deg.to_radians(), 1.55, ROTATION_HZ).unwrap()
}

/// Frame rate keeping the prism's apparent motion under ~0.3 px per frame.
pub fn framerate_for(r_px: f64) -> f64 {
    (r_px * TAU * ROTATION_HZ / 0.3).ceil().max(200.0)
}

pub fn multi_orientation_scene(width: u16, height: u16, duration_s: f64, seed: u64) -> SceneSpec {
    SceneSpec {
        width,
        height,
        pattern: Pattern::Edges {
            angles_deg: vec![0.0, 45.0, 90.0, 135.0],
            spacing_px: (width.min(height) as f64 / 4.0).max(24.0),
        },
        motion: Motion::Static,
        duration_s,
        low: 0.15,
        high: 0.85,
        seed,
    }
}

pub fn disk_scene(width: u16, height: u16, radius: f64, duration_s: f64, seed: u64) -> SceneSpec {
    SceneSpec {
        width,
        height,
        pattern: Pattern::Disk { radius_px: radius },
        motion: Motion::Static,
        duration_s,
        low: 0.25,
        high: 0.75,
        seed,
    }
}

pub fn synth_config(
    r_px: f64,
    theta_b_deg: f64,
    alpha_deg: f64,
    center: (f64, f64),
) -> SynthConfig {
    let params = CompensationParams::new(r_px, theta_b_deg.to_radians(), center).unwrap();
    SynthConfig::new(0.2, prism_720rpm(alpha_deg), params).unwrap()
}

pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// One pass/fail line per criterion, printed for `--nocapture` runs.
pub fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}
