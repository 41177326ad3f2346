//! Event-stream serialization.
//!
//! Two interchange formats:
//! - CSV: one event per line, `t_us,x,y,polarity` with polarity in {1,-1};
//!   lines beginning with `#` are comments.
//! - AMEV binary: little-endian; magic `AMEV`, u32 version = 1, u16 width,
//!   u16 height, u64 event count, then packed 13-byte records
//!   (u64 t_us, u16 x, u16 y, u8 polarity as 0/1). No compression; round
//!   trips are bit-exact.
//!
//! Encoder logs are CSV lines `t_us,theta_rad`.

use super::{EncoderSample, Event, EventError, EventStream, Polarity};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

const AMEV_MAGIC: &[u8; 4] = b"AMEV";
const AMEV_VERSION: u32 = 1;
const AMEV_HEADER_LEN: usize = 20;
const AMEV_RECORD_LEN: usize = 13;

/// On-disk event formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Amev,
}

impl std::str::FromStr for EventFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "amev" => Ok(EventFormat::Amev),
            other => Err(format!("unknown event format `{other}` (expected csv or amev)")),
        }
    }
}

/// Result of reading a stream from disk.
#[derive(Debug)]
pub struct ReadReport {
    pub stream: EventStream,
    /// Number of adjacent order violations repaired while loading.
    pub out_of_order: u64,
}

/// Reads an event file. CSV carries no resolution, so one must be supplied
/// for it; for AMEV a supplied resolution is checked against the header.
pub fn read_events(
    path: &Path,
    format: EventFormat,
    resolution: Option<(u16, u16)>,
) -> Result<ReadReport, EventError> {
    match format {
        EventFormat::Csv => {
            let (width, height) = resolution.ok_or_else(|| {
                EventError::ResolutionMismatch(
                    "csv input requires an explicit resolution".to_string(),
                )
            })?;
            read_events_csv(path, width, height)
        }
        EventFormat::Amev => {
            let report = read_events_amev(path)?;
            if let Some(expected) = resolution {
                let got = report.stream.resolution();
                if got != expected {
                    return Err(EventError::ResolutionMismatch(format!(
                        "file is {}x{}, expected {}x{}",
                        got.0, got.1, expected.0, expected.1
                    )));
                }
            }
            Ok(report)
        }
    }
}

pub fn write_events(
    stream: &EventStream,
    path: &Path,
    format: EventFormat,
) -> Result<(), EventError> {
    match format {
        EventFormat::Csv => write_events_csv(stream, path),
        EventFormat::Amev => write_events_amev(stream, path),
    }
}

pub fn read_events_csv(path: &Path, width: u16, height: u16) -> Result<ReadReport, EventError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut events = Vec::new();
    let mut buf = String::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = buf.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        events.push(parse_event_line(line, line_no)?);
    }
    if events.is_empty() {
        return Err(EventError::EmptyStream);
    }
    let (stream, out_of_order) = EventStream::from_unsorted(width, height, events)?;
    Ok(ReadReport { stream, out_of_order })
}

fn parse_event_line(line: &str, line_no: u64) -> Result<Event, EventError> {
    let err = |msg: String| EventError::Parse { line: line_no, msg };
    let mut fields = line.split(',');
    let mut next = |name: &str| {
        fields
            .next()
            .map(str::trim)
            .ok_or_else(|| err(format!("missing field `{name}`")))
    };
    let t_us: u64 = next("t_us")?.parse().map_err(|e| err(format!("bad t_us: {e}")))?;
    let x: u16 = next("x")?.parse().map_err(|e| err(format!("bad x: {e}")))?;
    let y: u16 = next("y")?.parse().map_err(|e| err(format!("bad y: {e}")))?;
    let p: i8 = next("polarity")?.parse().map_err(|e| err(format!("bad polarity: {e}")))?;
    let polarity =
        Polarity::from_i8(p).ok_or_else(|| err(format!("polarity must be 1 or -1, got {p}")))?;
    if fields.next().is_some() {
        return Err(err("trailing fields".to_string()));
    }
    Ok(Event { t_us, x, y, polarity })
}

pub fn write_events_csv(stream: &EventStream, path: &Path) -> Result<(), EventError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# t_us,x,y,polarity")?;
    for e in stream.events() {
        writeln!(w, "{},{},{},{}", e.t_us, e.x, e.y, e.polarity.as_i8())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_events_amev(path: &Path) -> Result<ReadReport, EventError> {
    let bytes = std::fs::read(path)?;
    let fail = |offset: usize, msg: String| EventError::Binary { offset: offset as u64, msg };
    if bytes.len() < AMEV_HEADER_LEN {
        return Err(fail(0, "truncated header".to_string()));
    }
    if &bytes[0..4] != AMEV_MAGIC {
        return Err(fail(0, "bad magic".to_string()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != AMEV_VERSION {
        return Err(fail(4, format!("unsupported version {version}")));
    }
    let width = u16::from_le_bytes(bytes[8..10].try_into().unwrap());
    let height = u16::from_le_bytes(bytes[10..12].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let expected_len = AMEV_HEADER_LEN + count * AMEV_RECORD_LEN;
    if bytes.len() != expected_len {
        return Err(fail(
            bytes.len().min(expected_len),
            format!("expected {expected_len} bytes for {count} events, file has {}", bytes.len()),
        ));
    }
    if count == 0 {
        return Err(EventError::EmptyStream);
    }
    let mut events = Vec::with_capacity(count);
    for i in 0..count {
        let off = AMEV_HEADER_LEN + i * AMEV_RECORD_LEN;
        let rec = &bytes[off..off + AMEV_RECORD_LEN];
        let polarity = match rec[12] {
            0 => Polarity::Neg,
            1 => Polarity::Pos,
            other => return Err(fail(off + 12, format!("bad polarity byte {other}"))),
        };
        events.push(Event {
            t_us: u64::from_le_bytes(rec[0..8].try_into().unwrap()),
            x: u16::from_le_bytes(rec[8..10].try_into().unwrap()),
            y: u16::from_le_bytes(rec[10..12].try_into().unwrap()),
            polarity,
        });
    }
    let (stream, out_of_order) = EventStream::from_unsorted(width, height, events)?;
    Ok(ReadReport { stream, out_of_order })
}

pub fn write_events_amev(stream: &EventStream, path: &Path) -> Result<(), EventError> {
    let mut bytes =
        Vec::with_capacity(AMEV_HEADER_LEN + stream.len() * AMEV_RECORD_LEN);
    bytes.extend_from_slice(AMEV_MAGIC);
    bytes.extend_from_slice(&AMEV_VERSION.to_le_bytes());
    bytes.extend_from_slice(&stream.width().to_le_bytes());
    bytes.extend_from_slice(&stream.height().to_le_bytes());
    bytes.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    for e in stream.events() {
        bytes.extend_from_slice(&e.t_us.to_le_bytes());
        bytes.extend_from_slice(&e.x.to_le_bytes());
        bytes.extend_from_slice(&e.y.to_le_bytes());
        bytes.push(match e.polarity {
            Polarity::Neg => 0,
            Polarity::Pos => 1,
        });
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn read_encoder_csv(path: &Path) -> Result<Vec<EncoderSample>, EventError> {
    let reader = BufReader::new(File::open(path)?);
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| EventError::Parse { line: line_no, msg };
        let (t, theta) = line
            .split_once(',')
            .ok_or_else(|| err("expected `t_us,theta_rad`".to_string()))?;
        let sample = EncoderSample {
            t_us: t.trim().parse().map_err(|e| err(format!("bad t_us: {e}")))?,
            theta: theta.trim().parse().map_err(|e| err(format!("bad theta: {e}")))?,
        };
        if let Some(prev) = samples.last() {
            let prev: &EncoderSample = prev;
            if sample.t_us <= prev.t_us {
                return Err(err("encoder timestamps must be strictly increasing".to_string()));
            }
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_encoder_csv(samples: &[EncoderSample], path: &Path) -> Result<(), EventError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# t_us,theta_rad")?;
    for s in samples {
        writeln!(w, "{},{}", s.t_us, s.theta)?;
    }
    w.flush()?;
    Ok(())
}
