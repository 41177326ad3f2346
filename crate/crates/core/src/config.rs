//! Plain-text `key = value` configuration files: one pair per line, `#`
//! starts a comment. This covers scene and synthesis descriptions, search
//! settings, and the calibration result file.

use crate::calib::{CompensationParams, SearchConfig};
use crate::events::Binning;
use crate::optics::PrismConfig;
use crate::translate::{Motion, Pattern, SceneSpec, SynthConfig};
use std::fmt::Display;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An ordered key-value document; later duplicates override earlier ones
/// on lookup but the original order is preserved for writing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    pairs: Vec<(String, String)>,
}

impl KvFile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: i as u64 + 1,
                msg: "expected `key = value`".to_string(),
            })?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(Self { pairs })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::MissingKey(key.to_string()))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
            key: key.to_string(),
            msg: e.to_string(),
        })
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.parse_value(key),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// The calibration result file consumed by the compensate command.
/// Keys: `r_px`, `theta_b_rad`, `center_x`, `center_y`, `k1`, `cost`,
/// `window_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFile {
    pub params: CompensationParams,
    pub cost: f64,
    pub window_s: f64,
}

impl CalibrationFile {
    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.set("r_px", self.params.r);
        kv.set("theta_b_rad", self.params.theta_b);
        kv.set("center_x", self.params.center.0);
        kv.set("center_y", self.params.center.1);
        kv.set("k1", self.params.k1);
        kv.set("cost", self.cost);
        kv.set("window_s", self.window_s);
        kv
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self, ConfigError> {
        let params = CompensationParams {
            r: kv.parse_value("r_px")?,
            theta_b: kv.parse_value("theta_b_rad")?,
            center: (kv.parse_value("center_x")?, kv.parse_value("center_y")?),
            k1: kv.parse_value("k1")?,
        };
        Ok(Self {
            params,
            cost: kv.parse_value("cost")?,
            window_s: kv.parse_value("window_s")?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), ConfigError> {
        self.to_kv().write(path)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        Self::from_kv(&KvFile::from_path(path)?)
    }
}

fn bad(key: &str, msg: impl Display) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), msg: msg.to_string() }
}

/// Builds a scene description from keys `width`, `height`, `pattern`
/// (`edges`/`checkerboard`/`disk` with their parameters), `motion`
/// (`static`/`constant`/`sinusoid`), `duration_s`, `low`, `high`.
pub fn scene_spec_from_kv(kv: &KvFile, seed: u64) -> Result<SceneSpec, ConfigError> {
    let pattern = match kv.parse_or("pattern", "edges".to_string())?.as_str() {
        "edges" => {
            let raw = kv.parse_or("angles_deg", "0,45,90,135".to_string())?;
            let angles_deg = raw
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| bad("angles_deg", e))?;
            Pattern::Edges { angles_deg, spacing_px: kv.parse_or("spacing_px", 24.0)? }
        }
        "checkerboard" => Pattern::Checkerboard { cell_px: kv.parse_or("cell_px", 24.0)? },
        "disk" => Pattern::Disk { radius_px: kv.parse_or("radius_px", 30.0)? },
        other => return Err(bad("pattern", format!("unknown pattern `{other}`"))),
    };
    let motion = match kv.parse_or("motion", "static".to_string())?.as_str() {
        "static" => Motion::Static,
        "constant" => Motion::ConstantVelocity {
            vx: kv.parse_or("vx_px_s", 0.0)?,
            vy: kv.parse_or("vy_px_s", 0.0)?,
        },
        "sinusoid" => Motion::Sinusoid {
            ax: kv.parse_or("amp_x_px", 0.0)?,
            ay: kv.parse_or("amp_y_px", 0.0)?,
            freq_hz: kv.parse_or("freq_hz", 1.0)?,
        },
        other => return Err(bad("motion", format!("unknown motion `{other}`"))),
    };
    Ok(SceneSpec {
        width: kv.parse_value("width")?,
        height: kv.parse_value("height")?,
        pattern,
        motion,
        duration_s: kv.parse_value("duration_s")?,
        low: kv.parse_or("low", 0.15)?,
        high: kv.parse_or("high", 0.85)?,
        seed,
    })
}

/// Builds synthesis settings from keys `contrast_threshold`,
/// `refractory_us`, `log_eps`, `prism_alpha_deg`, `prism_n`, `prism_rpm`,
/// `r_px`, `theta_b_deg`, `center_x`, `center_y`, `k1`.
pub fn synth_config_from_kv(
    kv: &KvFile,
    default_center: (f64, f64),
) -> Result<SynthConfig, ConfigError> {
    let prism = PrismConfig::new(
        kv.parse_or::<f64>("prism_alpha_deg", 1.0)?.to_radians(),
        kv.parse_or("prism_n", 1.55)?,
        kv.parse_or("prism_rpm", 720.0)? / 60.0,
    )
    .map_err(|e| bad("prism_alpha_deg", e))?;
    let params = CompensationParams::new(
        kv.parse_value("r_px")?,
        kv.parse_or::<f64>("theta_b_deg", 0.0)?.to_radians(),
        (
            kv.parse_or("center_x", default_center.0)?,
            kv.parse_or("center_y", default_center.1)?,
        ),
    )
    .map_err(|e| bad("r_px", e))?
    .with_k1(kv.parse_or("k1", 0.0)?);
    let mut cfg = SynthConfig::new(kv.parse_or("contrast_threshold", 0.2)?, prism, params)
        .map_err(|e| bad("contrast_threshold", e))?;
    cfg.refractory_us = kv.parse_or("refractory_us", 100)?;
    cfg.log_eps = kv.parse_or("log_eps", 1e-3)?;
    if !(cfg.log_eps > 0.0) {
        return Err(bad("log_eps", "must be positive"));
    }
    Ok(cfg)
}

/// Builds search settings around an initial radius from keys `window_s`,
/// `r_step_px`, `theta_step_deg`, `refine_tol_r_px`, `refine_tol_theta_deg`,
/// `max_refine_iters`, `binning`, `eta`, `min_events`, with optional
/// explicit `r_min_px`/`r_max_px` bounds.
pub fn search_config_from_kv(kv: &KvFile, r0: f64) -> Result<SearchConfig, ConfigError> {
    let mut cfg = SearchConfig::from_initial_radius(r0);
    cfg.r_min = kv.parse_or("r_min_px", cfg.r_min)?;
    cfg.r_max = kv.parse_or("r_max_px", cfg.r_max)?;
    cfg.r_step = kv.parse_or("r_step_px", cfg.r_step)?;
    cfg.theta_step = kv.parse_or("theta_step_deg", cfg.theta_step.to_degrees())?.to_radians();
    cfg.window_s = kv.parse_or("window_s", cfg.window_s)?;
    cfg.refine_tol_r = kv.parse_or("refine_tol_r_px", cfg.refine_tol_r)?;
    cfg.refine_tol_theta =
        kv.parse_or("refine_tol_theta_deg", cfg.refine_tol_theta.to_degrees())?.to_radians();
    cfg.max_refine_iters = kv.parse_or("max_refine_iters", cfg.max_refine_iters)?;
    cfg.min_events = kv.parse_or("min_events", cfg.min_events)?;
    cfg.binning = match kv.parse_or("binning", "bilinear".to_string())?.as_str() {
        "bilinear" => Binning::Bilinear,
        "nearest" => Binning::Nearest,
        other => return Err(bad("binning", format!("unknown binning `{other}`"))),
    };
    if let Some(raw) = kv.get("eta") {
        let eta: f64 = raw.parse().map_err(|e: std::num::ParseFloatError| bad("eta", e))?;
        cfg.eta = Some(eta);
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn parse_skips_comments_and_blank_lines() {
        let kv = KvFile::parse("# header\n\nwidth = 320\n height=240 \n").unwrap();
        assert_eq!(kv.get("width"), Some("320"));
        assert_eq!(kv.get("height"), Some("240"));
        assert_eq!(kv.get("missing"), None);
    }

    #[test]
    fn parse_reports_bad_lines() {
        match KvFile::parse("width 320\n") {
            Err(ConfigError::Parse { line: 1, .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn calibration_file_round_trip_is_lossless() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("calibration.cfg");
        let file = CalibrationFile {
            params: CompensationParams::new(4.799, 0.6981317007977318, (160.0, 120.0))
                .unwrap()
                .with_k1(1.5e-7),
            cost: 2382.125,
            window_s: 2.0,
        };
        file.write(&path).unwrap();
        assert_eq!(CalibrationFile::read(&path).unwrap(), file);
    }

    #[test]
    fn scene_and_synth_configs_parse() {
        let kv = KvFile::parse(
            "width = 320\nheight = 240\npattern = disk\nradius_px = 40\n\
             duration_s = 2.0\nr_px = 25\ntheta_b_deg = 40\nprism_rpm = 720\n",
        )
        .unwrap();
        let spec = scene_spec_from_kv(&kv, 42).unwrap();
        assert_eq!(spec.width, 320);
        assert!(matches!(spec.pattern, Pattern::Disk { radius_px } if radius_px == 40.0));
        let synth = synth_config_from_kv(&kv, (160.0, 120.0)).unwrap();
        assert_eq!(synth.params.r, 25.0);
        assert_eq!(synth.prism.rotation_hz, 12.0);
        assert_eq!(synth.params.center, (160.0, 120.0));
    }

    #[test]
    fn search_config_applies_overrides() {
        let kv = KvFile::parse("window_s = 1.0\ntheta_step_deg = 10\neta = 7.5\n").unwrap();
        let cfg = search_config_from_kv(&kv, 10.0).unwrap();
        assert_eq!(cfg.window_s, 1.0);
        assert_eq!(cfg.r_min, 5.0);
        assert_eq!(cfg.r_max, 15.0);
        assert_eq!(cfg.theta_step, 10f64.to_radians());
        assert_eq!(cfg.eta, Some(7.5));
    }
}
