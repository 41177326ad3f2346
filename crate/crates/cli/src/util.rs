//! Shared command plumbing: error type, stream loading, output helpers.

use amiev_core::calib::CalibError;
use amiev_core::config::{ConfigError, KvFile};
use amiev_core::events::{self, EventError, EventFormat, EventStream};
use amiev_core::metrics::MetricsError;
use amiev_core::optics::OpticsError;
use amiev_core::translate::TranslateError;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Event(EventError),
    Calib(CalibError),
    Translate(TranslateError),
    Metrics(MetricsError),
    Optics(OpticsError),
    Config(ConfigError),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Event(e) => write!(f, "events: {e}"),
            CliError::Calib(e) => write!(f, "calibration: {e}"),
            CliError::Translate(e) => write!(f, "translate: {e}"),
            CliError::Metrics(e) => write!(f, "metrics: {e}"),
            CliError::Optics(e) => write!(f, "optics: {e}"),
            CliError::Config(e) => write!(f, "config: {e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

macro_rules! from_error {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::$variant(e)
            }
        }
    };
}

from_error!(Event, EventError);
from_error!(Calib, CalibError);
from_error!(Translate, TranslateError);
from_error!(Metrics, MetricsError);
from_error!(Optics, OpticsError);
from_error!(Config, ConfigError);
from_error!(Io, std::io::Error);

pub type CliResult<T = ()> = Result<T, CliError>;

/// Input format by extension: `.amev` is binary, anything else CSV.
pub fn input_format(path: &Path) -> EventFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("amev") => EventFormat::Amev,
        _ => EventFormat::Csv,
    }
}

/// Loads a stream; CSV needs a resolution from flags or config keys.
pub fn load_events(
    path: &Path,
    resolution: Option<(u16, u16)>,
) -> CliResult<(EventStream, u64)> {
    let report = events::read_events(path, input_format(path), resolution)?;
    Ok((report.stream, report.out_of_order))
}

/// Resolution from a config's `width`/`height` keys, if both are present.
pub fn resolution_from_kv(kv: &KvFile) -> CliResult<Option<(u16, u16)>> {
    match (kv.get("width"), kv.get("height")) {
        (Some(_), Some(_)) => Ok(Some((kv.parse_value("width")?, kv.parse_value("height")?))),
        (None, None) => Ok(None),
        _ => Err(CliError::Usage("width and height must be given together".to_string())),
    }
}

/// Parses `WIDTHxHEIGHT`.
pub fn parse_resolution(raw: &str) -> CliResult<(u16, u16)> {
    let (w, h) = raw
        .split_once('x')
        .ok_or_else(|| CliError::Usage(format!("bad resolution `{raw}`, expected WxH")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u16>()
            .map_err(|e| CliError::Usage(format!("bad resolution `{raw}`: {e}")))
    };
    Ok((parse(w)?, parse(h)?))
}

pub fn ensure_out_dir(out: &Path) -> CliResult {
    std::fs::create_dir_all(out)?;
    Ok(())
}

/// Output path for an event file under `out` with the format's extension.
pub fn event_path(out: &Path, stem: &str, format: EventFormat) -> PathBuf {
    let ext = match format {
        EventFormat::Csv => "csv",
        EventFormat::Amev => "amev",
    };
    out.join(format!("{stem}.{ext}"))
}

pub fn write_stream(
    stream: &EventStream,
    out: &Path,
    stem: &str,
    format: EventFormat,
) -> CliResult<PathBuf> {
    let path = event_path(out, stem, format);
    events::write_events(stream, &path, format)?;
    println!("wrote {} ({} events)", path.display(), stream.len());
    Ok(path)
}
